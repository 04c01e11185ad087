#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "mutachain/bytes.hpp"

namespace mutachain::testing {

/// True when `needle` occurs in any file under `root`.
inline bool bytes_present(const std::filesystem::path& root, ByteView needle) {
    for (const auto& e : std::filesystem::recursive_directory_iterator(root)) {
        if (!e.is_regular_file())
            continue;
        std::ifstream in(e.path(), std::ios::binary);
        Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        if (std::search(data.begin(), data.end(), needle.begin(), needle.end()) != data.end())
            return true;
    }
    return false;
}

}  // namespace mutachain::testing
