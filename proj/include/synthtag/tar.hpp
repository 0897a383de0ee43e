// Copyright 2026 The synthtag Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace synthtag::tar {

struct Entry {
  std::string name;
  std::vector<std::uint8_t> data;
};

/// Writes a POSIX ustar archive of regular files.
void write_archive(const std::filesystem::path& file, const std::vector<Entry>& entries);

/// Throws Error(CorruptCheckpoint) on bad checksums, truncation or an unreadable file.
std::vector<Entry> read_archive(const std::filesystem::path& file);

}  // namespace synthtag::tar
