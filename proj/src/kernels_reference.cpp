// Copyright 2026 The synthtag Authors
// SPDX-License-Identifier: Apache-2.0

// Serial transcriptions of the kernel formulas; one output element at a time.

#include <cmath>
#include <limits>

#include "synthtag/kernels.hpp"

namespace synthtag::kernels::reference {
namespace {

using std::size_t;

// Zero outside [0, n).
float sample(std::span<const float> row, long idx, long n) { return idx < 0 || idx >= n ? 0.0f : row[static_cast<size_t>(idx)]; }

}  // namespace

void front_conv_maxfreq(std::span<const float> x, std::span<const float> w, std::span<const float> b,
                        const FrontShape& s, std::span<float> out, std::span<int> argmax) {
  const long T = static_cast<long>(s.time);
  const long pad = static_cast<long>((s.kw - 1) / 2);
  const size_t out_rows = s.freq - s.kh + 1;
  for (size_t c = 0; c < s.filters; ++c) {
    for (long t = 0; t < T; ++t) {
      float best = -std::numeric_limits<float>::infinity();
      int best_f = 0;
      for (size_t f = 0; f < out_rows; ++f) {
        float acc = b[c];
        for (size_t i = 0; i < s.kh; ++i) {
          const auto row = x.subspan((f + i) * s.time, s.time);
          for (size_t j = 0; j < s.kw; ++j) {
            acc += w[(c * s.kh + i) * s.kw + j] * sample(row, t + static_cast<long>(j) - pad, T);
          }
        }
        if (acc > best) {
          best = acc;
          best_f = static_cast<int>(f);
        }
      }
      out[c * s.time + static_cast<size_t>(t)] = best;
      argmax[c * s.time + static_cast<size_t>(t)] = best_f;
    }
  }
}

void front_conv_maxfreq_backward(std::span<const float> x, std::span<const float> grad_out,
                                 std::span<const int> argmax, const FrontShape& s, std::span<float> grad_w,
                                 std::span<float> grad_b) {
  const long T = static_cast<long>(s.time);
  const long pad = static_cast<long>((s.kw - 1) / 2);
  for (size_t c = 0; c < s.filters; ++c) {
    for (size_t i = 0; i < s.kh; ++i) {
      for (size_t j = 0; j < s.kw; ++j) {
        double acc = 0.0;
        for (long t = 0; t < T; ++t) {
          const size_t ct = c * s.time + static_cast<size_t>(t);
          const auto row = x.subspan((static_cast<size_t>(argmax[ct]) + i) * s.time, s.time);
          acc += static_cast<double>(grad_out[ct]) * sample(row, t + static_cast<long>(j) - pad, T);
        }
        grad_w[(c * s.kh + i) * s.kw + j] += static_cast<float>(acc);
      }
    }
    double gb = 0.0;
    for (size_t t = 0; t < s.time; ++t) gb += grad_out[c * s.time + t];
    grad_b[c] += static_cast<float>(gb);
  }
}

void conv1d(std::span<const float> in, std::span<const float> w, std::span<const float> b,
            const Conv1dShape& s, std::span<float> out) {
  const long T = static_cast<long>(s.time);
  const long pad = static_cast<long>((s.kernel - 1) / 2);
  for (size_t co = 0; co < s.out_channels; ++co) {
    for (long t = 0; t < T; ++t) {
      float acc = b[co];
      for (size_t ci = 0; ci < s.in_channels; ++ci) {
        const auto row = in.subspan(ci * s.time, s.time);
        for (size_t k = 0; k < s.kernel; ++k) {
          acc += w[(co * s.in_channels + ci) * s.kernel + k] * sample(row, t + static_cast<long>(k) - pad, T);
        }
      }
      out[co * s.time + static_cast<size_t>(t)] = acc;
    }
  }
}

void conv1d_backward_input(std::span<const float> grad_out, std::span<const float> w, const Conv1dShape& s,
                           std::span<float> grad_in) {
  const long T = static_cast<long>(s.time);
  const long pad = static_cast<long>((s.kernel - 1) / 2);
  for (size_t ci = 0; ci < s.in_channels; ++ci) {
    for (long t = 0; t < T; ++t) {
      double acc = 0.0;
      for (size_t co = 0; co < s.out_channels; ++co) {
        const auto row = grad_out.subspan(co * s.time, s.time);
        for (size_t k = 0; k < s.kernel; ++k) {
          // out[t'] reads in[t' + k - pad]; in[t] is read by t' = t - k + pad.
          acc += static_cast<double>(w[(co * s.in_channels + ci) * s.kernel + k]) *
                 sample(row, t - static_cast<long>(k) + pad, T);
        }
      }
      grad_in[ci * s.time + static_cast<size_t>(t)] = static_cast<float>(acc);
    }
  }
}

void conv1d_backward_weights(std::span<const float> in, std::span<const float> grad_out, const Conv1dShape& s,
                             std::span<float> grad_w, std::span<float> grad_b) {
  const long T = static_cast<long>(s.time);
  const long pad = static_cast<long>((s.kernel - 1) / 2);
  for (size_t co = 0; co < s.out_channels; ++co) {
    for (size_t ci = 0; ci < s.in_channels; ++ci) {
      const auto row = in.subspan(ci * s.time, s.time);
      for (size_t k = 0; k < s.kernel; ++k) {
        double acc = 0.0;
        for (long t = 0; t < T; ++t) {
          acc += static_cast<double>(grad_out[co * s.time + static_cast<size_t>(t)]) *
                 sample(row, t + static_cast<long>(k) - pad, T);
        }
        grad_w[(co * s.in_channels + ci) * s.kernel + k] += static_cast<float>(acc);
      }
    }
    double gb = 0.0;
    for (size_t t = 0; t < s.time; ++t) gb += grad_out[co * s.time + t];
    grad_b[co] += static_cast<float>(gb);
  }
}

void layer_norm_channels(std::span<const float> x, std::span<const float> gain, std::span<const float> bias,
                         std::size_t channels, std::size_t time, float eps, std::span<float> y,
                         std::span<float> mean, std::span<float> rstd) {
  for (size_t t = 0; t < time; ++t) {
    double m = 0.0;
    for (size_t c = 0; c < channels; ++c) m += x[c * time + t];
    m /= static_cast<double>(channels);
    double v = 0.0;
    for (size_t c = 0; c < channels; ++c) {
      const double d = x[c * time + t] - m;
      v += d * d;
    }
    v /= static_cast<double>(channels);
    const double r = 1.0 / std::sqrt(v + eps);
    mean[t] = static_cast<float>(m);
    rstd[t] = static_cast<float>(r);
    for (size_t c = 0; c < channels; ++c) {
      y[c * time + t] = static_cast<float>(gain[c] * (x[c * time + t] - m) * r + bias[c]);
    }
  }
}

void layer_norm_channels_backward(std::span<const float> x, std::span<const float> grad_y,
                                  std::span<const float> gain, std::span<const float> mean,
                                  std::span<const float> rstd, std::size_t channels, std::size_t time,
                                  std::span<float> grad_x, std::span<float> grad_gain, std::span<float> grad_bias) {
  const double inv_c = 1.0 / static_cast<double>(channels);
  for (size_t t = 0; t < time; ++t) {
    double sum_g = 0.0, sum_gx = 0.0;
    for (size_t c = 0; c < channels; ++c) {
      const double xhat = (x[c * time + t] - mean[t]) * static_cast<double>(rstd[t]);
      const double gh = static_cast<double>(grad_y[c * time + t]) * gain[c];
      sum_g += gh;
      sum_gx += gh * xhat;
    }
    for (size_t c = 0; c < channels; ++c) {
      const double xhat = (x[c * time + t] - mean[t]) * static_cast<double>(rstd[t]);
      const double gh = static_cast<double>(grad_y[c * time + t]) * gain[c];
      grad_x[c * time + t] = static_cast<float>(rstd[t] * (gh - inv_c * sum_g - xhat * inv_c * sum_gx));
    }
  }
  for (size_t c = 0; c < channels; ++c) {
    double gg = 0.0, gb = 0.0;
    for (size_t t = 0; t < time; ++t) {
      const double xhat = (x[c * time + t] - mean[t]) * static_cast<double>(rstd[t]);
      gg += grad_y[c * time + t] * xhat;
      gb += grad_y[c * time + t];
    }
    grad_gain[c] += static_cast<float>(gg);
    grad_bias[c] += static_cast<float>(gb);
  }
}

void dense(std::span<const float> x, std::span<const float> w, std::span<const float> b, std::size_t in,
           std::size_t out, std::span<float> y) {
  for (size_t o = 0; o < out; ++o) {
    double acc = b[o];
    for (size_t i = 0; i < in; ++i) acc += static_cast<double>(w[o * in + i]) * x[i];
    y[o] = static_cast<float>(acc);
  }
}

void dense_backward(std::span<const float> x, std::span<const float> w, std::span<const float> grad_y,
                    std::size_t in, std::size_t out, std::span<float> grad_x, std::span<float> grad_w,
                    std::span<float> grad_b) {
  for (size_t i = 0; i < in; ++i) {
    double acc = 0.0;
    for (size_t o = 0; o < out; ++o) acc += static_cast<double>(w[o * in + i]) * grad_y[o];
    grad_x[i] = static_cast<float>(acc);
  }
  for (size_t o = 0; o < out; ++o) {
    for (size_t i = 0; i < in; ++i) grad_w[o * in + i] += grad_y[o] * x[i];
    grad_b[o] += grad_y[o];
  }
}

}  // namespace synthtag::kernels::reference
