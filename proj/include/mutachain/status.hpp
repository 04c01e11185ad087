#pragma once

#include <string>
#include <string_view>
#include <utility>

namespace mutachain {

enum class ErrorCode {
    Ok = 0,

    // stateless transaction checks
    BadSignature,
    ShapeViolation,

    // block structure
    BlockShapeError,
    UnknownParent,
    IntervalLenMismatch,
    PListMismatch,
    PListOverflow,
    BrokenIntervalChain,
    TxRootMismatch,
    RemovableTxDependsOnDeletedState,

    // stateful transaction checks
    DuplicateRegistration,
    UnknownRegisterRef,
    UnknownSigner,
    UnknownInfo,
    ConsentInputSpent,
    ConsentChainExists,
    AlreadyConfirmed,

    // prepare / delete
    InvalidPrepare,
    NotEligible,
    MissingDuplicates,
    DuplicatePrepare,
    IntervalAlreadyDeleted,
    UnknownInterval,
    InvalidDelete,
    NotSoleOwnerAndNoPrepare,
    PrepareSignerMismatch,
    UnknownPrepareRef,
    RejectedByMiners,

    // mempool admission
    StatelessInvalid,
    IneligiblePrepare,
    PrematureDelete,
    AlreadyPending,
    ConflictingPending,

    // gap verification
    MissingDeleteEvidence,
    PrematureGap,

    // consent queries
    UnknownLabel,
};

std::string_view error_name(ErrorCode code);

/// Outcome of a validation step: Ok, or an error code with a human-readable
/// detail.
class [[nodiscard]] Status {
public:
    Status() = default;
    Status(ErrorCode code, std::string detail) : code_(code), detail_(std::move(detail)) {}

    static Status ok() { return {}; }

    [[nodiscard]] bool is_ok() const { return code_ == ErrorCode::Ok; }
    explicit operator bool() const { return is_ok(); }
    [[nodiscard]] ErrorCode code() const { return code_; }
    [[nodiscard]] const std::string& detail() const { return detail_; }
    [[nodiscard]] std::string to_string() const;

private:
    ErrorCode code_ = ErrorCode::Ok;
    std::string detail_;
};

}  // namespace mutachain
