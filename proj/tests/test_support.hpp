// Copyright 2026 The synthtag Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "synthtag/audio.hpp"
#include "synthtag/dataset.hpp"
#include "synthtag/features.hpp"
#include "synthtag/model.hpp"
#include "synthtag/taxonomy.hpp"

namespace synthtag::testing {

/// Removes itself on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "t") {
    static std::uint64_t counter = 0;
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("synthtag-" + tag + "-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::vector<float> sine(double freq_hz, double seconds, int rate = kModelSampleRate, double amp = 0.5) {
  const auto n = static_cast<std::size_t>(std::llround(seconds * rate));
  std::vector<float> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = static_cast<float>(amp * std::sin(2.0 * std::numbers::pi * freq_hz * static_cast<double>(i) / rate));
  }
  return out;
}

inline AudioClip clip_of(std::vector<float> samples, int rate = kModelSampleRate) {
  AudioClip c;
  c.samples = std::move(samples);
  c.sample_rate = rate;
  return c;
}

/// Small architecture for gradient checks and toy training.
inline ModelConfig tiny_config(int n_classes = 3, int n_mels = 12) {
  ModelConfig c;
  c.n_mels = n_mels;
  c.n_classes = n_classes;
  c.embedding_dim = 8;
  c.timbral_heights = {4, n_mels / 2};
  c.timbral_width = 3;
  c.temporal_widths = {4, 8};
  c.front_channels = {3, 3, 3, 3};
  c.backend_channels = 6;
  c.backend_kernel = 3;
  c.backend_layers = 2;
  return c;
}

inline MelSpectrogram random_mel(std::size_t bands, std::size_t frames, std::mt19937_64& rng, float mean = 0.0f,
                                 float spread = 1.0f) {
  std::normal_distribution<float> n(mean, spread);
  MelSpectrogram m;
  m.bands = bands;
  m.frames = frames;
  m.values.resize(bands * frames);
  for (auto& v : m.values) v = n(rng);
  return m;
}

inline double max_abs_diff(const std::vector<float>& a, const std::vector<float>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(static_cast<double>(a[i]) - b[i]));
  return m;
}

/// Spectrogram-shaped toy data: class k lights up a band pair, the synthetic
/// domain adds a bright strip at the top of the spectrum.
struct ToyCorpus {
  std::vector<TrackRecord> real, synth;
  InMemoryFeatureSource source;
};

inline MelSpectrogram toy_mel(int label, Domain domain, std::size_t bands, std::size_t frames, std::mt19937_64& rng,
                              float noise = 0.6f) {
  MelSpectrogram m = random_mel(bands, frames, rng, 0.0f, noise);
  const std::size_t lo = (static_cast<std::size_t>(label) * 2) % (bands - 2);
  for (std::size_t t = 0; t < frames; ++t) {
    m.at(lo, t) += 2.0f;
    m.at(lo + 1, t) += 1.5f * static_cast<float>((t + static_cast<std::size_t>(label)) % 2);
    if (domain == Domain::Synthetic) m.at(bands - 1, t) += 2.5f;
  }
  return m;
}

inline ToyCorpus make_toy_corpus(int n_classes, int real_per_class, int synth_per_class, std::uint64_t seed,
                                 std::size_t bands = 12, std::size_t frames = 16) {
  ToyCorpus c;
  std::mt19937_64 rng(seed);
  for (int k = 0; k < n_classes; ++k) {
    const std::string genre(kGenres[static_cast<std::size_t>(k)]);
    for (int i = 0; i < real_per_class; ++i) {
      TrackRecord r{"real/" + genre + "." + std::to_string(i), genre, Domain::Real, 30.0};
      c.source.add(r.path, toy_mel(k, Domain::Real, bands, frames, rng));
      c.real.push_back(r);
    }
    for (int i = 0; i < synth_per_class; ++i) {
      TrackRecord r{"synth/" + genre + "-" + std::to_string(i), genre, Domain::Synthetic, 30.0};
      c.source.add(r.path, toy_mel(k, Domain::Synthetic, bands, frames, rng));
      c.synth.push_back(r);
    }
  }
  return c;
}

}  // namespace synthtag::testing
