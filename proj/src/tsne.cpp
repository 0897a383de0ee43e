// Copyright 2026 The synthtag Authors
// SPDX-License-Identifier: Apache-2.0

#include "synthtag/tsne.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "synthtag/error.hpp"

namespace synthtag {
namespace {

// Row i of the conditional affinities for squared distances d, matching
// the target entropy ln(perplexity) by bisection on the precision beta.
void conditional_row(const double* d, std::size_t n, std::size_t i, double log_perp, double* p) {
  double beta = 1.0, lo = -std::numeric_limits<double>::infinity(), hi = std::numeric_limits<double>::infinity();
  // Shifting by the nearest distance keeps exp() away from underflow.
  double dmin = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < n; ++j)
    if (j != i) dmin = std::min(dmin, d[j]);
  for (int iter = 0; iter < 200; ++iter) {
    double sum = 0.0, weighted = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      p[j] = j == i ? 0.0 : std::exp(-beta * (d[j] - dmin));
      sum += p[j];
      weighted += p[j] * (d[j] - dmin);
    }
    const double entropy = std::log(sum) + beta * weighted / sum;
    for (std::size_t j = 0; j < n; ++j) p[j] /= sum;
    const double diff = entropy - log_perp;
    if (std::abs(diff) < 1e-5) break;
    if (diff > 0) {
      lo = beta;
      beta = std::isinf(hi) ? beta * 2.0 : (beta + hi) / 2.0;
    } else {
      hi = beta;
      beta = std::isinf(lo) ? beta / 2.0 : (beta + lo) / 2.0;
    }
  }
}

}  // namespace

double effective_perplexity(std::size_t n, double perplexity) {
  if (static_cast<double>(n) <= 3.0 * perplexity) return std::floor((static_cast<double>(n) - 1.0) / 3.0);
  return perplexity;
}

std::vector<Point2> tsne_project(std::span<const std::vector<float>> rows, const TsneOptions& opt) {
  const std::size_t n = rows.size();
  if (n < 5) throw Error(ErrorCode::TooFewPoints, "t-SNE needs at least 5 points, got " + std::to_string(n));
  const std::size_t dim = rows.front().size();
  for (const auto& r : rows) {
    if (r.size() != dim) throw Error(ErrorCode::ShapeMismatch, "t-SNE rows must share one dimension");
  }
  if (!(opt.perplexity > 0.0) || opt.iterations < 1) {
    throw Error(ErrorCode::InvalidArgument, "perplexity and iterations must be positive");
  }
  const double perp = effective_perplexity(n, opt.perplexity);

  std::vector<double> d(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        const double t = static_cast<double>(rows[i][k]) - rows[j][k];
        s += t * t;
      }
      d[i * n + j] = d[j * n + i] = s;
    }
  }

  std::vector<double> p(n * n);
  for (std::size_t i = 0; i < n; ++i) conditional_row(&d[i * n], n, i, std::log(perp), &p[i * n]);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double s = std::max((p[i * n + j] + p[j * n + i]) / (2.0 * static_cast<double>(n)), 1e-12);
      p[i * n + j] = p[j * n + i] = s;
    }
    p[i * n + i] = 0.0;
  }

  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> normal(0.0, 1e-4);
  std::vector<double> y(2 * n), update(2 * n, 0.0), gains(2 * n, 1.0), grad(2 * n), num(n * n);
  for (auto& v : y) v = normal(rng);
  // Identical rows start from one point; their gradients then stay equal.
  for (std::size_t i = 1; i < n; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (rows[i] == rows[j]) {
        y[2 * i] = y[2 * j];
        y[2 * i + 1] = y[2 * j + 1];
        break;
      }
    }
  }
  const double lr = opt.learning_rate > 0.0
                        ? opt.learning_rate
                        : std::max(static_cast<double>(n) / opt.early_exaggeration / 4.0, 50.0);

  for (int iter = 0; iter < opt.iterations; ++iter) {
    const bool early = iter < opt.exaggeration_iterations;
    const double exaggeration = early ? opt.early_exaggeration : 1.0;
    const double momentum = early ? 0.5 : 0.8;

    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      num[i * n + i] = 0.0;
      for (std::size_t j = i + 1; j < n; ++j) {
        const double dx = y[2 * i] - y[2 * j], dy = y[2 * i + 1] - y[2 * j + 1];
        const double q = 1.0 / (1.0 + dx * dx + dy * dy);
        num[i * n + j] = num[j * n + i] = q;
        z += 2.0 * q;
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      double gx = 0.0, gy = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double q = num[i * n + j];
        const double mult = (exaggeration * p[i * n + j] - q / z) * q;
        gx += mult * (y[2 * i] - y[2 * j]);
        gy += mult * (y[2 * i + 1] - y[2 * j + 1]);
      }
      grad[2 * i] = 4.0 * gx;
      grad[2 * i + 1] = 4.0 * gy;
    }
    for (std::size_t k = 0; k < 2 * n; ++k) {
      const bool same_sign = (grad[k] > 0) == (update[k] > 0);
      gains[k] = std::max(same_sign ? gains[k] * 0.8 : gains[k] + 0.2, 0.01);
      update[k] = momentum * update[k] - lr * gains[k] * grad[k];
      y[k] += update[k];
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      mx += y[2 * i];
      my += y[2 * i + 1];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[2 * i] -= mx;
      y[2 * i + 1] -= my;
    }
  }

  std::vector<Point2> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = {y[2 * i], y[2 * i + 1]};
  return out;
}

}  // namespace synthtag
