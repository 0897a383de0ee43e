// Copyright 2026 The synthtag Authors
// SPDX-License-Identifier: Apache-2.0

#include "synthtag/taxonomy.hpp"

#include "synthtag/error.hpp"

namespace synthtag {

std::optional<int> genre_index(std::string_view genre) noexcept {
  for (std::size_t i = 0; i < kGenres.size(); ++i) {
    if (kGenres[i] == genre) return static_cast<int>(i);
  }
  return std::nullopt;
}

int require_genre(std::string_view genre) {
  if (auto idx = genre_index(genre)) return *idx;
  throw Error(ErrorCode::UnknownGenre, "'" + std::string(genre) + "' is not a GTZAN genre");
}

std::string_view to_string(Domain domain) noexcept {
  return domain == Domain::Real ? "real" : "synthetic";
}

Domain parse_domain(std::string_view text) {
  if (text == "real") return Domain::Real;
  if (text == "synthetic") return Domain::Synthetic;
  throw Error(ErrorCode::InvalidArgument, "domain must be 'real' or 'synthetic', got '" +
                                              std::string(text) + "'");
}

}  // namespace synthtag
