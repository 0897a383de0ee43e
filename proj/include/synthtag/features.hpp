// Copyright 2026 The synthtag Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "synthtag/audio.hpp"

namespace synthtag {

inline constexpr int kWindowSize = 512;
inline constexpr int kHopSize = 256;
inline constexpr int kSpectrumBins = kWindowSize / 2 + 1;
inline constexpr int kMelBands = 96;

/// Number of STFT frames for `length` samples without padding (tail dropped).
constexpr std::size_t frame_count(std::size_t length, std::size_t window = kWindowSize,
                                  std::size_t hop = kHopSize) {
  return length < window ? 0 : 1 + (length - window) / hop;
}

/// Frames x bins, row-major.
struct PowerSpectrogram {
  std::size_t frames = 0;
  std::size_t bins = 0;
  std::vector<float> values;

  float at(std::size_t frame, std::size_t bin) const { return values[frame * bins + bin]; }
};

/// Triangular HTK-mel filters, bands x bins, row-major. Filters peak at 1.
struct MelFilterbank {
  std::size_t bands = 0;
  std::size_t bins = 0;
  double fmin_hz = 0.0;
  double fmax_hz = 0.0;
  std::vector<float> weights;
  std::vector<double> center_hz;

  float at(std::size_t band, std::size_t bin) const { return weights[band * bins + bin]; }
};

/// Bands x frames, row-major; the model input.
struct MelSpectrogram {
  std::size_t bands = 0;
  std::size_t frames = 0;
  std::vector<float> values;

  float at(std::size_t band, std::size_t frame) const { return values[band * frames + frame]; }
  float& at(std::size_t band, std::size_t frame) { return values[band * frames + frame]; }
};

double hz_to_mel(double hz);
double mel_to_hz(double mel);

MelFilterbank make_mel_filterbank(std::size_t bands = kMelBands, int window = kWindowSize,
                                  int sample_rate = kModelSampleRate, double fmin_hz = 0.0,
                                  double fmax_hz = kModelSampleRate / 2.0);

/// Periodic Hann window of the given length.
std::vector<float> hann_window(int length);

/// Hann-windowed |FFT|^2. Throws ClipTooShort when the clip is shorter than one window.
PowerSpectrogram stft_power(const AudioClip& clip, int window = kWindowSize, int hop = kHopSize);

/// ln(1 + fb * power) per frame, transposed to bands x frames.
MelSpectrogram mel_spectrogram(const AudioClip& clip, const MelFilterbank& fb);

/// Shared default 96-band filterbank for 16 kHz / 512-point frames.
const MelFilterbank& default_filterbank();

// Feature cache: <stem>.f32 holds little-endian float32 bands x frames,
// <stem>.json holds {"path", "bands", "frames", "label"}.
struct CachedFeature {
  MelSpectrogram mel;
  std::string source_path;
  std::string label;
};

void write_feature_cache(const std::filesystem::path& stem, const MelSpectrogram& mel,
                         const std::string& source_path, const std::string& label);
CachedFeature read_feature_cache(const std::filesystem::path& stem);

}  // namespace synthtag
