// Copyright 2026 The synthtag Authors
// SPDX-License-Identifier: Apache-2.0

#include "synthtag/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace synthtag::kernels {
namespace {

using std::size_t;
using Index = std::ptrdiff_t;

// Valid output range [t0, t1) for a tap reading input[t + off].
inline void tap_range(Index off, Index T, Index& t0, Index& t1) {
  t0 = std::max<Index>(0, -off);
  t1 = std::min<Index>(T, T - off);
}

}  // namespace

void front_conv_maxfreq(std::span<const float> x, std::span<const float> w, std::span<const float> b,
                        const FrontShape& s, std::span<float> out, std::span<int> argmax) {
  const Index T = static_cast<Index>(s.time);
  const Index pad = static_cast<Index>((s.kw - 1) / 2);
  const Index rows = static_cast<Index>(s.freq - s.kh + 1);
  const Index C = static_cast<Index>(s.filters);
#pragma omp parallel
  {
    std::vector<float> acc(s.time);
#pragma omp for schedule(static)
    for (Index c = 0; c < C; ++c) {
      float* o = out.data() + c * T;
      int* am = argmax.data() + c * T;
      const float* wc = w.data() + c * static_cast<Index>(s.kh * s.kw);
      for (Index f = 0; f < rows; ++f) {
        std::fill(acc.begin(), acc.end(), b[static_cast<size_t>(c)]);
        for (Index i = 0; i < static_cast<Index>(s.kh); ++i) {
          const float* row = x.data() + (f + i) * T;
          for (Index j = 0; j < static_cast<Index>(s.kw); ++j) {
            const float wv = wc[i * static_cast<Index>(s.kw) + j];
            const Index off = j - pad;
            Index t0, t1;
            tap_range(off, T, t0, t1);
            float* a = acc.data();
            const float* r = row + off;
#pragma omp simd
            for (Index t = t0; t < t1; ++t) a[t] += wv * r[t];
          }
        }
        if (f == 0) {
          std::copy(acc.begin(), acc.end(), o);
          std::fill(am, am + T, 0);
        } else {
          const int fi = static_cast<int>(f);
          for (Index t = 0; t < T; ++t) {
            if (acc[static_cast<size_t>(t)] > o[t]) {
              o[t] = acc[static_cast<size_t>(t)];
              am[t] = fi;
            }
          }
        }
      }
    }
  }
}

void front_conv_maxfreq_backward(std::span<const float> x, std::span<const float> grad_out,
                                 std::span<const int> argmax, const FrontShape& s, std::span<float> grad_w,
                                 std::span<float> grad_b) {
  const Index T = static_cast<Index>(s.time);
  const Index pad = static_cast<Index>((s.kw - 1) / 2);
  const Index C = static_cast<Index>(s.filters);
  const Index kh = static_cast<Index>(s.kh), kw = static_cast<Index>(s.kw);
#pragma omp parallel
  {
    std::vector<double> local(s.kh * s.kw);
#pragma omp for schedule(static)
    for (Index c = 0; c < C; ++c) {
      std::fill(local.begin(), local.end(), 0.0);
      double gb = 0.0;
      for (Index t = 0; t < T; ++t) {
        const float g = grad_out[static_cast<size_t>(c * T + t)];
        if (g == 0.0f) continue;
        gb += g;
        const Index f = argmax[static_cast<size_t>(c * T + t)];
        for (Index i = 0; i < kh; ++i) {
          const float* row = x.data() + (f + i) * T;
          for (Index j = 0; j < kw; ++j) {
            const Index src = t + j - pad;
            if (src >= 0 && src < T) local[static_cast<size_t>(i * kw + j)] += static_cast<double>(g) * row[src];
          }
        }
      }
      float* gw = grad_w.data() + c * kh * kw;
      for (Index k = 0; k < kh * kw; ++k) gw[k] += static_cast<float>(local[static_cast<size_t>(k)]);
      grad_b[static_cast<size_t>(c)] += static_cast<float>(gb);
    }
  }
}

void conv1d(std::span<const float> in, std::span<const float> w, std::span<const float> b,
            const Conv1dShape& s, std::span<float> out) {
  const Index T = static_cast<Index>(s.time);
  const Index K = static_cast<Index>(s.kernel);
  const Index Cin = static_cast<Index>(s.in_channels);
  const Index Cout = static_cast<Index>(s.out_channels);
  const Index pad = (K - 1) / 2;
#pragma omp parallel for schedule(static)
  for (Index co = 0; co < Cout; ++co) {
    float* o = out.data() + co * T;
    std::fill(o, o + T, b[static_cast<size_t>(co)]);
    for (Index ci = 0; ci < Cin; ++ci) {
      const float* row = in.data() + ci * T;
      const float* wk = w.data() + (co * Cin + ci) * K;
      for (Index k = 0; k < K; ++k) {
        const float wv = wk[k];
        const Index off = k - pad;
        Index t0, t1;
        tap_range(off, T, t0, t1);
        const float* r = row + off;
#pragma omp simd
        for (Index t = t0; t < t1; ++t) o[t] += wv * r[t];
      }
    }
  }
}

void conv1d_backward_input(std::span<const float> grad_out, std::span<const float> w, const Conv1dShape& s,
                           std::span<float> grad_in) {
  const Index T = static_cast<Index>(s.time);
  const Index K = static_cast<Index>(s.kernel);
  const Index Cin = static_cast<Index>(s.in_channels);
  const Index Cout = static_cast<Index>(s.out_channels);
  const Index pad = (K - 1) / 2;
#pragma omp parallel for schedule(static)
  for (Index ci = 0; ci < Cin; ++ci) {
    float* gi = grad_in.data() + ci * T;
    std::fill(gi, gi + T, 0.0f);
    for (Index co = 0; co < Cout; ++co) {
      const float* g = grad_out.data() + co * T;
      const float* wk = w.data() + (co * Cin + ci) * K;
      for (Index k = 0; k < K; ++k) {
        const float wv = wk[k];
        const Index off = pad - k;
        Index t0, t1;
        tap_range(off, T, t0, t1);
        const float* r = g + off;
#pragma omp simd
        for (Index t = t0; t < t1; ++t) gi[t] += wv * r[t];
      }
    }
  }
}

void conv1d_backward_weights(std::span<const float> in, std::span<const float> grad_out, const Conv1dShape& s,
                             std::span<float> grad_w, std::span<float> grad_b) {
  const Index T = static_cast<Index>(s.time);
  const Index K = static_cast<Index>(s.kernel);
  const Index Cin = static_cast<Index>(s.in_channels);
  const Index Cout = static_cast<Index>(s.out_channels);
  const Index pad = (K - 1) / 2;
#pragma omp parallel for schedule(static)
  for (Index co = 0; co < Cout; ++co) {
    const float* g = grad_out.data() + co * T;
    for (Index ci = 0; ci < Cin; ++ci) {
      const float* row = in.data() + ci * T;
      float* gw = grad_w.data() + (co * Cin + ci) * K;
      for (Index k = 0; k < K; ++k) {
        const Index off = k - pad;
        Index t0, t1;
        tap_range(off, T, t0, t1);
        const float* r = row + off;
        float acc = 0.0f;
#pragma omp simd reduction(+ : acc)
        for (Index t = t0; t < t1; ++t) acc += g[t] * r[t];
        gw[k] += acc;
      }
    }
    float gb = 0.0f;
#pragma omp simd reduction(+ : gb)
    for (Index t = 0; t < T; ++t) gb += g[t];
    grad_b[static_cast<size_t>(co)] += gb;
  }
}

void layer_norm_channels(std::span<const float> x, std::span<const float> gain, std::span<const float> bias,
                         std::size_t channels, std::size_t time, float eps, std::span<float> y,
                         std::span<float> mean, std::span<float> rstd) {
  const Index T = static_cast<Index>(time);
  const Index C = static_cast<Index>(channels);
#pragma omp parallel for schedule(static)
  for (Index t = 0; t < T; ++t) {
    double m = 0.0;
    for (Index c = 0; c < C; ++c) m += x[static_cast<size_t>(c * T + t)];
    m /= static_cast<double>(C);
    double v = 0.0;
    for (Index c = 0; c < C; ++c) {
      const double d = x[static_cast<size_t>(c * T + t)] - m;
      v += d * d;
    }
    v /= static_cast<double>(C);
    const float mf = static_cast<float>(m);
    const float r = static_cast<float>(1.0 / std::sqrt(v + eps));
    mean[static_cast<size_t>(t)] = mf;
    rstd[static_cast<size_t>(t)] = r;
    for (Index c = 0; c < C; ++c) {
      const auto i = static_cast<size_t>(c * T + t);
      y[i] = gain[static_cast<size_t>(c)] * ((x[i] - mf) * r) + bias[static_cast<size_t>(c)];
    }
  }
}

void layer_norm_channels_backward(std::span<const float> x, std::span<const float> grad_y,
                                  std::span<const float> gain, std::span<const float> mean,
                                  std::span<const float> rstd, std::size_t channels, std::size_t time,
                                  std::span<float> grad_x, std::span<float> grad_gain, std::span<float> grad_bias) {
  const Index T = static_cast<Index>(time);
  const Index C = static_cast<Index>(channels);
  const double inv_c = 1.0 / static_cast<double>(C);
#pragma omp parallel for schedule(static)
  for (Index t = 0; t < T; ++t) {
    const float m = mean[static_cast<size_t>(t)];
    const float r = rstd[static_cast<size_t>(t)];
    double sum_g = 0.0, sum_gx = 0.0;
    for (Index c = 0; c < C; ++c) {
      const auto i = static_cast<size_t>(c * T + t);
      const double xhat = static_cast<double>((x[i] - m) * r);
      const double gh = static_cast<double>(grad_y[i]) * gain[static_cast<size_t>(c)];
      sum_g += gh;
      sum_gx += gh * xhat;
    }
    const double mg = sum_g * inv_c, mgx = sum_gx * inv_c;
    for (Index c = 0; c < C; ++c) {
      const auto i = static_cast<size_t>(c * T + t);
      const double xhat = static_cast<double>((x[i] - m) * r);
      const double gh = static_cast<double>(grad_y[i]) * gain[static_cast<size_t>(c)];
      grad_x[i] = static_cast<float>(r * (gh - mg - xhat * mgx));
    }
  }
#pragma omp parallel for schedule(static)
  for (Index c = 0; c < C; ++c) {
    double gg = 0.0, gb = 0.0;
    for (Index t = 0; t < T; ++t) {
      const auto i = static_cast<size_t>(c * T + t);
      const double xhat = static_cast<double>((x[i] - mean[static_cast<size_t>(t)]) * rstd[static_cast<size_t>(t)]);
      gg += grad_y[i] * xhat;
      gb += grad_y[i];
    }
    grad_gain[static_cast<size_t>(c)] += static_cast<float>(gg);
    grad_bias[static_cast<size_t>(c)] += static_cast<float>(gb);
  }
}

void dense(std::span<const float> x, std::span<const float> w, std::span<const float> b, std::size_t in,
           std::size_t out, std::span<float> y) {
  const Index O = static_cast<Index>(out);
  const Index I = static_cast<Index>(in);
#pragma omp parallel for schedule(static)
  for (Index o = 0; o < O; ++o) {
    const float* wr = w.data() + o * I;
    float acc = 0.0f;
#pragma omp simd reduction(+ : acc)
    for (Index i = 0; i < I; ++i) acc += wr[i] * x[static_cast<size_t>(i)];
    y[static_cast<size_t>(o)] = acc + b[static_cast<size_t>(o)];
  }
}

void dense_backward(std::span<const float> x, std::span<const float> w, std::span<const float> grad_y,
                    std::size_t in, std::size_t out, std::span<float> grad_x, std::span<float> grad_w,
                    std::span<float> grad_b) {
  const Index O = static_cast<Index>(out);
  const Index I = static_cast<Index>(in);
  std::fill(grad_x.begin(), grad_x.begin() + I, 0.0f);
  // grad_x = W^T g, accumulated row by row so that the inner loop stays contiguous.
  for (Index o = 0; o < O; ++o) {
    const float g = grad_y[static_cast<size_t>(o)];
    const float* wr = w.data() + o * I;
    float* gx = grad_x.data();
#pragma omp simd
    for (Index i = 0; i < I; ++i) gx[i] += g * wr[i];
  }
#pragma omp parallel for schedule(static)
  for (Index o = 0; o < O; ++o) {
    const float g = grad_y[static_cast<size_t>(o)];
    float* gw = grad_w.data() + o * I;
#pragma omp simd
    for (Index i = 0; i < I; ++i) gw[i] += g * x[static_cast<size_t>(i)];
    grad_b[static_cast<size_t>(o)] += g;
  }
}

}  // namespace synthtag::kernels
