// Copyright 2026 The synthtag Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Dense numeric kernels behind the tagger. Every kernel exists twice:
// synthtag::kernels is the OpenMP version used by the model, and
// synthtag::kernels::reference is a plain serial transcription of the same
// formula kept for tests and the benchmark.
//
// Layouts are row-major. Spectrogram-like inputs are [F][T], channel maps
// are [C][T], conv weights are [Cout][kh][kw] (front end) or [Cout][Cin][K]
// (1-D). "Same" padding along time puts (k - 1) / 2 zeros on the left.
// Parallel versions split work so that each output element is written by a
// single thread with a fixed summation order, making results independent of
// the thread count.
//
// Weight/bias gradient kernels accumulate (+=); input gradients overwrite.

#include <cstddef>
#include <span>

namespace synthtag::kernels {

struct FrontShape {
  std::size_t freq = 0;    // F
  std::size_t time = 0;    // T
  std::size_t filters = 0; // C
  std::size_t kh = 0;
  std::size_t kw = 0;
};

/// out[c][t] = max over f of (b[c] + sum_ij w[c][i][j] x[f+i][t+j-pad]),
/// argmax[c][t] = first maximising f. Frequency is "valid", time is "same".
void front_conv_maxfreq(std::span<const float> x, std::span<const float> w, std::span<const float> b,
                        const FrontShape& s, std::span<float> out, std::span<int> argmax);

/// Gradient of the above w.r.t. w and b given d out (C x T).
void front_conv_maxfreq_backward(std::span<const float> x, std::span<const float> grad_out,
                                 std::span<const int> argmax, const FrontShape& s, std::span<float> grad_w,
                                 std::span<float> grad_b);

struct Conv1dShape {
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t time = 0;
  std::size_t kernel = 0;
};

void conv1d(std::span<const float> in, std::span<const float> w, std::span<const float> b,
            const Conv1dShape& s, std::span<float> out);
void conv1d_backward_input(std::span<const float> grad_out, std::span<const float> w, const Conv1dShape& s,
                           std::span<float> grad_in);
void conv1d_backward_weights(std::span<const float> in, std::span<const float> grad_out, const Conv1dShape& s,
                             std::span<float> grad_w, std::span<float> grad_b);

/// Layer norm over channels at every time step of a [C][T] map, with
/// per-channel gain/bias. Saves mean and 1/std per time step.
void layer_norm_channels(std::span<const float> x, std::span<const float> gain, std::span<const float> bias,
                         std::size_t channels, std::size_t time, float eps, std::span<float> y,
                         std::span<float> mean, std::span<float> rstd);
void layer_norm_channels_backward(std::span<const float> x, std::span<const float> grad_y,
                                  std::span<const float> gain, std::span<const float> mean,
                                  std::span<const float> rstd, std::size_t channels, std::size_t time,
                                  std::span<float> grad_x, std::span<float> grad_gain, std::span<float> grad_bias);

/// y = W x + b with W [out][in].
void dense(std::span<const float> x, std::span<const float> w, std::span<const float> b, std::size_t in,
           std::size_t out, std::span<float> y);
void dense_backward(std::span<const float> x, std::span<const float> w, std::span<const float> grad_y,
                    std::size_t in, std::size_t out, std::span<float> grad_x, std::span<float> grad_w,
                    std::span<float> grad_b);

namespace reference {

void front_conv_maxfreq(std::span<const float> x, std::span<const float> w, std::span<const float> b,
                        const FrontShape& s, std::span<float> out, std::span<int> argmax);
void front_conv_maxfreq_backward(std::span<const float> x, std::span<const float> grad_out,
                                 std::span<const int> argmax, const FrontShape& s, std::span<float> grad_w,
                                 std::span<float> grad_b);
void conv1d(std::span<const float> in, std::span<const float> w, std::span<const float> b,
            const Conv1dShape& s, std::span<float> out);
void conv1d_backward_input(std::span<const float> grad_out, std::span<const float> w, const Conv1dShape& s,
                           std::span<float> grad_in);
void conv1d_backward_weights(std::span<const float> in, std::span<const float> grad_out, const Conv1dShape& s,
                             std::span<float> grad_w, std::span<float> grad_b);
void layer_norm_channels(std::span<const float> x, std::span<const float> gain, std::span<const float> bias,
                         std::size_t channels, std::size_t time, float eps, std::span<float> y,
                         std::span<float> mean, std::span<float> rstd);
void layer_norm_channels_backward(std::span<const float> x, std::span<const float> grad_y,
                                  std::span<const float> gain, std::span<const float> mean,
                                  std::span<const float> rstd, std::size_t channels, std::size_t time,
                                  std::span<float> grad_x, std::span<float> grad_gain, std::span<float> grad_bias);
void dense(std::span<const float> x, std::span<const float> w, std::span<const float> b, std::size_t in,
           std::size_t out, std::span<float> y);
void dense_backward(std::span<const float> x, std::span<const float> w, std::span<const float> grad_y,
                    std::size_t in, std::size_t out, std::span<float> grad_x, std::span<float> grad_w,
                    std::span<float> grad_b);

}  // namespace reference
}  // namespace synthtag::kernels
