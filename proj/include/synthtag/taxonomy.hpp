// Copyright 2026 The synthtag Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace synthtag {

inline constexpr std::size_t kGenreCount = 10;

/// GTZAN class labels. The index of a genre here is its class id.
inline constexpr std::array<std::string_view, kGenreCount> kGenres = {
    "blues", "classical", "country", "disco", "hiphop",
    "jazz",  "metal",     "pop",     "reggae", "rock"};

std::optional<int> genre_index(std::string_view genre) noexcept;

/// Throws Error(UnknownGenre) for labels outside the taxonomy.
int require_genre(std::string_view genre);

enum class Domain { Real, Synthetic };

std::string_view to_string(Domain domain) noexcept;
Domain parse_domain(std::string_view text);

}  // namespace synthtag
