// Copyright 2026 The synthtag Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "synthtag/error.hpp"

namespace synthtag::losses {

inline constexpr double kProbabilityFloor = 1e-12;

/// Which hinge the negative-pair term uses.
///  SquaredDistance: 1/2 max(0, m - |a-b|^2)   (default)
///  Ccsa:            1/2 max(0, m - |a-b|)^2
enum class HingeForm { SquaredDistance, Ccsa };

/// Single: one random same-class and one different-class real partner per
/// synthetic item. AllPairs: average over every real item in the pool.
enum class Pairing { Single, AllPairs };

struct DaConfig {
  double margin = 2.0;
  double gamma = 0.7;
  HingeForm hinge = HingeForm::SquaredDistance;
  Pairing pairing = Pairing::Single;

  void validate() const {
    if (!(margin > 0.0)) throw Error(ErrorCode::InvalidConfig, "margin must be positive");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw Error(ErrorCode::InvalidGamma, "gamma must lie in [0, 1]");
  }
};

/// Mean of -ln(max(p[label], 1e-12)) over rows of a batch x n_classes matrix.
double cross_entropy(std::span<const float> probs, std::span<const int> labels, std::size_t n_classes);

/// d(mean CE)/d logits for a softmax output: (p - onehot) * scale, written to grad.
void cross_entropy_logit_grad(std::span<const float> probs, int label, float scale, std::span<float> grad);

double combined_loss(double l_sa, double l_cls, double gamma);

namespace detail {
template <std::floating_point Real>
void check_dims(std::span<const Real> a, std::span<const Real> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::ShapeMismatch, "embedding sizes differ: " + std::to_string(a.size()) + " vs " +
                                              std::to_string(b.size()));
  }
}
template <std::floating_point Real>
Real squared_distance(std::span<const Real> a, std::span<const Real> b) {
  Real s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Real d = a[i] - b[i];
    s += d * d;
  }
  return s;
}
}  // namespace detail

/// 1/2 |a - b|^2
template <std::floating_point Real>
Real positive_pair_distance(std::span<const Real> a, std::span<const Real> b) {
  detail::check_dims(a, b);
  return Real(0.5) * detail::squared_distance(a, b);
}

template <std::floating_point Real>
Real negative_pair_distance(std::span<const Real> a, std::span<const Real> b, Real margin,
                            HingeForm form = HingeForm::SquaredDistance) {
  detail::check_dims(a, b);
  if (!(margin > 0)) throw Error(ErrorCode::InvalidConfig, "margin must be positive");
  const Real d2 = detail::squared_distance(a, b);
  if (form == HingeForm::SquaredDistance) return Real(0.5) * std::max(Real(0), margin - d2);
  const Real h = std::max(Real(0), margin - std::sqrt(d2));
  return Real(0.5) * h * h;
}

/// Adds d/da of positive_pair_distance * weight to grad_a and d/db to grad_b.
template <std::floating_point Real>
void positive_pair_gradient(std::span<const Real> a, std::span<const Real> b, Real weight, std::span<Real> grad_a,
                            std::span<Real> grad_b) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Real d = weight * (a[i] - b[i]);
    if (!grad_a.empty()) grad_a[i] += d;
    if (!grad_b.empty()) grad_b[i] -= d;
  }
}

template <std::floating_point Real>
void negative_pair_gradient(std::span<const Real> a, std::span<const Real> b, Real margin, HingeForm form,
                            Real weight, std::span<Real> grad_a, std::span<Real> grad_b) {
  const Real d2 = detail::squared_distance(a, b);
  Real coef = 0;  // d loss / d (a - b) = coef * (a - b)
  if (form == HingeForm::SquaredDistance) {
    if (margin - d2 > 0) coef = Real(-1);
  } else {
    const Real d = std::sqrt(d2);
    if (d < margin && d > 0) coef = -(margin - d) / d;
  }
  if (coef == 0) return;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Real g = weight * coef * (a[i] - b[i]);
    if (!grad_a.empty()) grad_a[i] += g;
    if (!grad_b.empty()) grad_b[i] -= g;
  }
}

/// Embeddings of one synthetic item and its two real partners.
template <std::floating_point Real>
struct PairEmbeddings {
  std::span<const Real> synth;
  std::span<const Real> positive;
  std::span<const Real> negative;
};

/// Gradient buffers matching a PairEmbeddings entry; spans may be empty.
template <std::floating_point Real>
struct PairGradients {
  std::span<Real> synth;
  std::span<Real> positive;
  std::span<Real> negative;
};

/// Mean over items of positive + negative pair terms; 0 for an empty batch.
template <std::floating_point Real>
Real semantic_alignment_loss(std::span<const PairEmbeddings<Real>> pairs, Real margin,
                             HingeForm form = HingeForm::SquaredDistance) {
  if (pairs.empty()) return Real(0);
  Real total = 0;
  for (const auto& p : pairs) {
    total += positive_pair_distance(p.synth, p.positive) + negative_pair_distance(p.synth, p.negative, margin, form);
  }
  return total / static_cast<Real>(pairs.size());
}

/// Adds weight * d semantic_alignment_loss / d embeddings into grads.
template <std::floating_point Real>
void semantic_alignment_gradient(std::span<const PairEmbeddings<Real>> pairs, Real margin, HingeForm form,
                                 Real weight, std::span<const PairGradients<Real>> grads) {
  if (pairs.empty()) return;
  if (grads.size() != pairs.size()) throw Error(ErrorCode::ShapeMismatch, "one gradient entry per pair is required");
  const Real w = weight / static_cast<Real>(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    positive_pair_gradient(pairs[i].synth, pairs[i].positive, w, grads[i].synth, grads[i].positive);
    negative_pair_gradient(pairs[i].synth, pairs[i].negative, margin, form, w, grads[i].synth, grads[i].negative);
  }
}

/// All-pairs variant: for each synthetic item, the mean positive term over
/// same-label real items plus the mean negative term over different-label
/// real items, averaged over synthetic items. Items whose label has no
/// same-class (or no other-class) real partner contribute 0 for that term.
template <std::floating_point Real>
Real semantic_alignment_loss_all_pairs(std::span<const std::span<const Real>> synth, std::span<const int> synth_labels,
                                       std::span<const std::span<const Real>> real, std::span<const int> real_labels,
                                       Real margin, HingeForm form = HingeForm::SquaredDistance,
                                       std::span<const std::span<Real>> grad_synth = {},
                                       std::span<const std::span<Real>> grad_real = {}, Real weight = 1) {
  if (synth.empty()) return Real(0);
  Real total = 0;
  const Real per_item = weight / static_cast<Real>(synth.size());
  for (std::size_t i = 0; i < synth.size(); ++i) {
    std::size_t n_pos = 0, n_neg = 0;
    for (int l : real_labels) (l == synth_labels[i] ? n_pos : n_neg) += 1;
    Real pos = 0, neg = 0;
    for (std::size_t j = 0; j < real.size(); ++j) {
      const bool same = real_labels[j] == synth_labels[i];
      const std::span<Real> ga = grad_synth.empty() ? std::span<Real>{} : grad_synth[i];
      const std::span<Real> gb = grad_real.empty() ? std::span<Real>{} : grad_real[j];
      if (same) {
        pos += positive_pair_distance(synth[i], real[j]);
        if (!grad_synth.empty() || !grad_real.empty())
          positive_pair_gradient(synth[i], real[j], per_item / static_cast<Real>(n_pos), ga, gb);
      } else {
        neg += negative_pair_distance(synth[i], real[j], margin, form);
        if (!grad_synth.empty() || !grad_real.empty())
          negative_pair_gradient(synth[i], real[j], margin, form, per_item / static_cast<Real>(n_neg), ga, gb);
      }
    }
    if (n_pos) total += pos / static_cast<Real>(n_pos);
    if (n_neg) total += neg / static_cast<Real>(n_neg);
  }
  return total / static_cast<Real>(synth.size());
}

}  // namespace synthtag::losses
