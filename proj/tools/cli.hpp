// Copyright 2026 The synthtag Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace synthtag::cli {

/// Parses and runs one subcommand. Returns 0 on success, 2 for usage errors
/// and 1 for any other failure; errors go to `err` as one JSON object.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace synthtag::cli
