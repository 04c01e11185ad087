#include "mutachain/status.hpp"

namespace mutachain {

std::string_view error_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::Ok: return "Ok";
        case ErrorCode::BadSignature: return "BadSignature";
        case ErrorCode::ShapeViolation: return "ShapeViolation";
        case ErrorCode::BlockShapeError: return "BlockShapeError";
        case ErrorCode::UnknownParent: return "UnknownParent";
        case ErrorCode::IntervalLenMismatch: return "IntervalLenMismatch";
        case ErrorCode::PListMismatch: return "PListMismatch";
        case ErrorCode::PListOverflow: return "PListOverflow";
        case ErrorCode::BrokenIntervalChain: return "BrokenIntervalChain";
        case ErrorCode::TxRootMismatch: return "TxRootMismatch";
        case ErrorCode::RemovableTxDependsOnDeletedState: return "RemovableTxDependsOnDeletedState";
        case ErrorCode::DuplicateRegistration: return "DuplicateRegistration";
        case ErrorCode::UnknownRegisterRef: return "UnknownRegisterRef";
        case ErrorCode::UnknownSigner: return "UnknownSigner";
        case ErrorCode::UnknownInfo: return "UnknownInfo";
        case ErrorCode::ConsentInputSpent: return "ConsentInputSpent";
        case ErrorCode::ConsentChainExists: return "ConsentChainExists";
        case ErrorCode::AlreadyConfirmed: return "AlreadyConfirmed";
        case ErrorCode::InvalidPrepare: return "InvalidPrepare";
        case ErrorCode::NotEligible: return "NotEligible";
        case ErrorCode::MissingDuplicates: return "MissingDuplicates";
        case ErrorCode::DuplicatePrepare: return "DuplicatePrepare";
        case ErrorCode::IntervalAlreadyDeleted: return "IntervalAlreadyDeleted";
        case ErrorCode::UnknownInterval: return "UnknownInterval";
        case ErrorCode::InvalidDelete: return "InvalidDelete";
        case ErrorCode::NotSoleOwnerAndNoPrepare: return "NotSoleOwnerAndNoPrepare";
        case ErrorCode::PrepareSignerMismatch: return "PrepareSignerMismatch";
        case ErrorCode::UnknownPrepareRef: return "UnknownPrepareRef";
        case ErrorCode::RejectedByMiners: return "RejectedByMiners";
        case ErrorCode::StatelessInvalid: return "StatelessInvalid";
        case ErrorCode::IneligiblePrepare: return "IneligiblePrepare";
        case ErrorCode::PrematureDelete: return "PrematureDelete";
        case ErrorCode::AlreadyPending: return "AlreadyPending";
        case ErrorCode::ConflictingPending: return "ConflictingPending";
        case ErrorCode::MissingDeleteEvidence: return "MissingDeleteEvidence";
        case ErrorCode::PrematureGap: return "PrematureGap";
        case ErrorCode::UnknownLabel: return "UnknownLabel";
    }
    return "Unknown";
}

std::string Status::to_string() const {
    if (is_ok())
        return "Ok";
    std::string out(error_name(code_));
    if (!detail_.empty()) {
        out += ": ";
        out += detail_;
    }
    return out;
}

}  // namespace mutachain
