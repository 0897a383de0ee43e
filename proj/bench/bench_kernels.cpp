// Copyright 2026 The synthtag Authors
// SPDX-License-Identifier: Apache-2.0

// OpenMP kernels against their serial reference transcriptions, at the
// shapes the default network sees for a 3 s window (96 x 187 frames).

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "synthtag/kernels.hpp"
#include "synthtag/model.hpp"

namespace k = synthtag::kernels;

namespace {

std::vector<float> noise(std::size_t n, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<float> d(0.0f, 1.0f);
  std::vector<float> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

constexpr bool kParallel = true, kSerial = false;

template <bool Parallel>
void BM_FrontConv(benchmark::State& state) {
  const k::FrontShape s{96, 187, 32, static_cast<std::size_t>(state.range(0)), 7};
  const auto x = noise(s.freq * s.time, 1);
  const auto w = noise(s.filters * s.kh * s.kw, 2);
  const auto b = noise(s.filters, 3);
  std::vector<float> out(s.filters * s.time);
  std::vector<int> arg(out.size());
  for (auto _ : state) {
    if constexpr (Parallel) {
      k::front_conv_maxfreq(x, w, b, s, out, arg);
    } else {
      k::reference::front_conv_maxfreq(x, w, b, s, out, arg);
    }
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(s.filters * s.time * (s.freq - s.kh + 1)));
}
BENCHMARK(BM_FrontConv<kParallel>)->Arg(38)->Arg(86);
BENCHMARK(BM_FrontConv<kSerial>)->Arg(38)->Arg(86);

template <bool Parallel>
void BM_Conv1d(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const k::Conv1dShape s{c, c, 187, 7};
  const auto x = noise(c * s.time, 4);
  const auto w = noise(c * c * s.kernel, 5);
  const auto b = noise(c, 6);
  std::vector<float> out(c * s.time);
  for (auto _ : state) {
    if constexpr (Parallel) {
      k::conv1d(x, w, b, s, out);
    } else {
      k::reference::conv1d(x, w, b, s, out);
    }
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_Conv1d<kParallel>)->Arg(64)->Arg(160);
BENCHMARK(BM_Conv1d<kSerial>)->Arg(64)->Arg(160);

template <bool Parallel>
void BM_Conv1dBackwardWeights(benchmark::State& state) {
  const k::Conv1dShape s{64, 64, 187, 7};
  const auto x = noise(64 * s.time, 7);
  const auto g = noise(64 * s.time, 8);
  std::vector<float> gw(64 * 64 * 7), gb(64);
  for (auto _ : state) {
    if constexpr (Parallel) {
      k::conv1d_backward_weights(x, g, s, gw, gb);
    } else {
      k::reference::conv1d_backward_weights(x, g, s, gw, gb);
    }
    benchmark::DoNotOptimize(gw.data());
  }
}
BENCHMARK(BM_Conv1dBackwardWeights<kParallel>);
BENCHMARK(BM_Conv1dBackwardWeights<kSerial>);

template <bool Parallel>
void BM_Dense(benchmark::State& state) {
  const std::size_t in = 448, out = 512;
  const auto x = noise(in, 9);
  const auto w = noise(in * out, 10);
  const auto b = noise(out, 11);
  std::vector<float> y(out);
  for (auto _ : state) {
    if constexpr (Parallel) {
      k::dense(x, w, b, in, out, y);
    } else {
      k::reference::dense(x, w, b, in, out, y);
    }
    benchmark::DoNotOptimize(y.data());
  }
}
BENCHMARK(BM_Dense<kParallel>);
BENCHMARK(BM_Dense<kSerial>);

template <bool Parallel>
void BM_LayerNorm(benchmark::State& state) {
  const std::size_t c = 64, t = 187;
  const auto x = noise(c * t, 12);
  const std::vector<float> gain(c, 1.0f), bias(c, 0.0f);
  std::vector<float> y(c * t), mean(t), rstd(t);
  for (auto _ : state) {
    if constexpr (Parallel) {
      k::layer_norm_channels(x, gain, bias, c, t, 1e-5f, y, mean, rstd);
    } else {
      k::reference::layer_norm_channels(x, gain, bias, c, t, 1e-5f, y, mean, rstd);
    }
    benchmark::DoNotOptimize(y.data());
  }
}
BENCHMARK(BM_LayerNorm<kParallel>);
BENCHMARK(BM_LayerNorm<kSerial>);

// Whole default network, one batch of four.
void BM_ModelForward(benchmark::State& state) {
  const synthtag::Model model(synthtag::ModelConfig{}, 1);
  std::vector<synthtag::MelSpectrogram> batch(4);
  for (unsigned i = 0; i < 4; ++i) batch[i] = {96, 187, noise(96 * 187, 20 + i)};
  for (auto _ : state) {
    auto out = model.forward(batch);
    benchmark::DoNotOptimize(out.probs.data());
  }
}
BENCHMARK(BM_ModelForward)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
