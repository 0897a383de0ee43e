// Copyright 2026 The synthtag Authors
// SPDX-License-Identifier: Apache-2.0

#include "synthtag/losses.hpp"

namespace synthtag::losses {

double cross_entropy(std::span<const float> probs, std::span<const int> labels, std::size_t n_classes) {
  if (n_classes == 0 || probs.size() != labels.size() * n_classes) {
    throw Error(ErrorCode::ShapeMismatch, "probabilities must be labels.size() x n_classes");
  }
  if (labels.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int y = labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= n_classes) {
      throw Error(ErrorCode::InvalidLabel, "label " + std::to_string(y) + " outside [0, " +
                                               std::to_string(n_classes) + ")");
    }
    const double p = std::max(static_cast<double>(probs[i * n_classes + static_cast<std::size_t>(y)]), kProbabilityFloor);
    total += -std::log(p);
  }
  return total / static_cast<double>(labels.size());
}

void cross_entropy_logit_grad(std::span<const float> probs, int label, float scale, std::span<float> grad) {
  if (label < 0 || static_cast<std::size_t>(label) >= probs.size()) {
    throw Error(ErrorCode::InvalidLabel, "label " + std::to_string(label) + " out of range");
  }
  for (std::size_t k = 0; k < probs.size(); ++k) {
    grad[k] = scale * (probs[k] - (static_cast<int>(k) == label ? 1.0f : 0.0f));
  }
}

double combined_loss(double l_sa, double l_cls, double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    throw Error(ErrorCode::InvalidGamma, "gamma must lie in [0, 1], got " + std::to_string(gamma));
  }
  return gamma * l_sa + (1.0 - gamma) * l_cls;
}

}  // namespace synthtag::losses
