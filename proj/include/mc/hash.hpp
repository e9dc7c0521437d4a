// Copyright 2026 The Morphocircuit Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MC_HASH_HPP_
#define MC_HASH_HPP_

#include <filesystem>
#include <string>
#include <string_view>

namespace mc {

// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view bytes);
// Throws Error when the file cannot be read.
std::string sha256_file(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace mc

#endif  // MC_HASH_HPP_
