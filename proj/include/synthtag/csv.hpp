// Copyright 2026 The synthtag Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace synthtag::csv {

using Row = std::vector<std::string>;

/// RFC 4180 quoting: fields with commas, quotes or newlines are quoted.
std::string format_row(const Row& row);

/// Parses a whole document. Throws Error(UnreadableFile) on an unterminated quote.
std::vector<Row> parse(std::string_view text);

std::vector<Row> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::vector<Row>& rows);

/// Shortest decimal text that round-trips a double exactly.
std::string format_number(double value);

}  // namespace synthtag::csv
