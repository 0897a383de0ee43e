// Copyright 2026 The synthtag Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace synthtag {

using Rng = std::mt19937_64;

inline constexpr int kModelSampleRate = 16000;
/// 10 s at the model rate.
inline constexpr std::size_t kCropSamples = 160000;

/// Mono waveform. After load_audio the rate is always kModelSampleRate.
struct AudioClip {
  std::vector<float> samples;
  int sample_rate = kModelSampleRate;
  std::string source_path;

  double duration_seconds() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
};

struct WavInfo {
  int sample_rate = 0;
  int channels = 0;
  int bits_per_sample = 0;
  std::size_t frames = 0;
  double duration_seconds() const {
    return sample_rate > 0 ? static_cast<double>(frames) / sample_rate : 0.0;
  }
};

/// Multi-channel PCM decoded to floats in [-1, 1], one vector per channel.
struct DecodedAudio {
  WavInfo info;
  std::vector<std::vector<float>> channels;
};

/// Parses a RIFF/WAVE byte stream (PCM 8/16/24/32-bit, IEEE float 32/64,
/// WAVE_FORMAT_EXTENSIBLE). Recognised non-WAV containers raise
/// UnsupportedFormat, everything broken raises UnreadableFile.
DecodedAudio decode_wav(std::span<const std::uint8_t> bytes, const std::string& name = "<memory>");

/// Reads only the header chunks; cheap duration probe for manifests.
WavInfo probe_wav(const std::filesystem::path& path);

/// Decodes, averages channels to mono, resamples to 16 kHz.
AudioClip load_audio(const std::filesystem::path& path);

/// Writes mono PCM. bits_per_sample is 16 or 24; samples are clipped to [-1, 1].
void write_wav(const std::filesystem::path& path, std::span<const float> samples, int sample_rate,
               int bits_per_sample = 16);

/// Writes interleaved multi-channel 16-bit PCM.
void write_wav_channels(const std::filesystem::path& path,
                        const std::vector<std::vector<float>>& channels, int sample_rate);

/// Band-limited polyphase (Kaiser-windowed sinc) rational resampler.
/// Output length is ceil(len * to / from). Identity when the rates match.
std::vector<float> resample(std::span<const float> input, int from_rate, int to_rate);

enum class CropMode { Random, Center };

/// Extracts `length` samples. Random: start ~ U{0..len-length} drawn from rng.
/// Center: start = (len - length) / 2. Throws ClipTooShort.
AudioClip crop(const AudioClip& clip, CropMode mode, Rng& rng, std::size_t length = kCropSamples);

}  // namespace synthtag
