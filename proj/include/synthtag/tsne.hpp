// Copyright 2026 The synthtag Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace synthtag {

struct TsneOptions {
  double perplexity = 30.0;
  int iterations = 1000;
  std::uint64_t seed = 0;
  double learning_rate = 0.0;  ///< 0 picks max(N / exaggeration / 4, 50)
  double early_exaggeration = 12.0;
  int exaggeration_iterations = 250;
};

using Point2 = std::array<double, 2>;

/// Perplexity actually used for N points: reduced to floor((N-1)/3) when
/// N <= 3 * perplexity.
double effective_perplexity(std::size_t n, double perplexity);

/// Exact O(N^2) t-SNE to two dimensions. Throws TooFewPoints for N < 5 and
/// ShapeMismatch for ragged rows.
std::vector<Point2> tsne_project(std::span<const std::vector<float>> rows, const TsneOptions& options = {});

}  // namespace synthtag
