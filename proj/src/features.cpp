// Copyright 2026 The synthtag Authors
// SPDX-License-Identifier: Apache-2.0

#include "synthtag/features.hpp"

#include <fftw3.h>

#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include <json.hpp>

#include "synthtag/error.hpp"

namespace synthtag {
namespace {

// FFTW planning is not thread-safe; execution with new-array execute is.
class RealFftPlan {
 public:
  static const RealFftPlan& get(int n) {
    static std::mutex mutex;
    static std::map<int, std::unique_ptr<RealFftPlan>> plans;
    std::lock_guard lock(mutex);
    auto& slot = plans[n];
    if (!slot) slot.reset(new RealFftPlan(n));
    return *slot;
  }

  void execute(double* in, fftw_complex* out) const { fftw_execute_dft_r2c(plan_, in, out); }
  int size() const { return n_; }

  ~RealFftPlan() { fftw_destroy_plan(plan_); }
  RealFftPlan(const RealFftPlan&) = delete;
  RealFftPlan& operator=(const RealFftPlan&) = delete;

 private:
  explicit RealFftPlan(int n) : n_(n) {
    auto* in = fftw_alloc_real(static_cast<std::size_t>(n));
    auto* out = fftw_alloc_complex(static_cast<std::size_t>(n / 2 + 1));
    plan_ = fftw_plan_dft_r2c_1d(n, in, out, FFTW_ESTIMATE);
    fftw_free(in);
    fftw_free(out);
  }

  int n_;
  fftw_plan plan_;
};

struct FftwBuffers {
  explicit FftwBuffers(int n)
      : in(fftw_alloc_real(static_cast<std::size_t>(n))),
        out(fftw_alloc_complex(static_cast<std::size_t>(n / 2 + 1))) {}
  ~FftwBuffers() {
    fftw_free(in);
    fftw_free(out);
  }
  FftwBuffers(const FftwBuffers&) = delete;
  FftwBuffers& operator=(const FftwBuffers&) = delete;
  double* in;
  fftw_complex* out;
};

}  // namespace

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MelFilterbank make_mel_filterbank(std::size_t bands, int window, int sample_rate, double fmin_hz,
                                  double fmax_hz) {
  if (bands == 0 || window < 2 || sample_rate <= 0 || fmin_hz < 0.0 || fmax_hz <= fmin_hz ||
      fmax_hz > sample_rate / 2.0) {
    throw Error(ErrorCode::InvalidConfig, "invalid mel filterbank parameters");
  }
  MelFilterbank fb;
  fb.bands = bands;
  fb.bins = static_cast<std::size_t>(window / 2 + 1);
  fb.fmin_hz = fmin_hz;
  fb.fmax_hz = fmax_hz;
  fb.weights.assign(fb.bands * fb.bins, 0.0f);
  fb.center_hz.resize(bands);

  const double mel_lo = hz_to_mel(fmin_hz);
  const double mel_hi = hz_to_mel(fmax_hz);
  std::vector<double> edges(bands + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) / static_cast<double>(bands + 1));
  }
  const double bin_hz = static_cast<double>(sample_rate) / window;
  for (std::size_t b = 0; b < bands; ++b) {
    const double lo = edges[b], mid = edges[b + 1], hi = edges[b + 2];
    fb.center_hz[b] = mid;
    for (std::size_t k = 0; k < fb.bins; ++k) {
      const double f = static_cast<double>(k) * bin_hz;
      double w = 0.0;
      if (f > lo && f <= mid) w = (f - lo) / (mid - lo);
      else if (f > mid && f < hi) w = (hi - f) / (hi - mid);
      fb.weights[b * fb.bins + k] = static_cast<float>(w);
    }
  }
  return fb;
}

const MelFilterbank& default_filterbank() {
  static const MelFilterbank fb = make_mel_filterbank();
  return fb;
}

std::vector<float> hann_window(int length) {
  std::vector<float> w(static_cast<std::size_t>(length));
  for (int i = 0; i < length; ++i) {
    w[static_cast<std::size_t>(i)] =
        static_cast<float>(0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / length));
  }
  return w;
}

PowerSpectrogram stft_power(const AudioClip& clip, int window, int hop) {
  if (window < 2 || hop < 1) throw Error(ErrorCode::InvalidArgument, "window and hop must be positive");
  const std::size_t len = clip.samples.size();
  if (len < static_cast<std::size_t>(window)) {
    throw Error(ErrorCode::ClipTooShort, clip.source_path + ": " + std::to_string(len) +
                                             " samples is shorter than one " +
                                             std::to_string(window) + "-sample window");
  }
  PowerSpectrogram spec;
  spec.frames = frame_count(len, static_cast<std::size_t>(window), static_cast<std::size_t>(hop));
  spec.bins = static_cast<std::size_t>(window / 2 + 1);
  spec.values.assign(spec.frames * spec.bins, 0.0f);

  const auto win = hann_window(window);
  const RealFftPlan& plan = RealFftPlan::get(window);
  const auto frames = static_cast<std::ptrdiff_t>(spec.frames);
#pragma omp parallel
  {
    FftwBuffers buf(window);
#pragma omp for schedule(static)
    for (std::ptrdiff_t t = 0; t < frames; ++t) {
      const float* x = clip.samples.data() + t * hop;
      for (int i = 0; i < window; ++i) buf.in[i] = static_cast<double>(x[i]) * win[static_cast<std::size_t>(i)];
      plan.execute(buf.in, buf.out);
      float* row = spec.values.data() + static_cast<std::size_t>(t) * spec.bins;
      for (std::size_t k = 0; k < spec.bins; ++k) {
        const double re = buf.out[k][0], im = buf.out[k][1];
        row[k] = static_cast<float>(re * re + im * im);
      }
    }
  }
  return spec;
}

MelSpectrogram mel_spectrogram(const AudioClip& clip, const MelFilterbank& fb) {
  const PowerSpectrogram power = stft_power(clip, static_cast<int>(2 * (fb.bins - 1)), kHopSize);
  MelSpectrogram mel;
  mel.bands = fb.bands;
  mel.frames = power.frames;
  mel.values.assign(mel.bands * mel.frames, 0.0f);
  const auto bands = static_cast<std::ptrdiff_t>(fb.bands);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < bands; ++b) {
    const float* w = fb.weights.data() + static_cast<std::size_t>(b) * fb.bins;
    float* out = mel.values.data() + static_cast<std::size_t>(b) * mel.frames;
    for (std::size_t t = 0; t < power.frames; ++t) {
      const float* p = power.values.data() + t * power.bins;
      double acc = 0.0;
      for (std::size_t k = 0; k < fb.bins; ++k) acc += static_cast<double>(w[k]) * p[k];
      out[t] = static_cast<float>(std::log1p(acc));
    }
  }
  return mel;
}

void write_feature_cache(const std::filesystem::path& stem, const MelSpectrogram& mel,
                         const std::string& source_path, const std::string& label) {
  auto blob = stem;
  blob += ".f32";
  auto sidecar = stem;
  sidecar += ".json";
  {
    std::ofstream out(blob, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + blob.string());
    out.write(reinterpret_cast<const char*>(mel.values.data()),
              static_cast<std::streamsize>(mel.values.size() * sizeof(float)));
    if (!out) throw Error(ErrorCode::IoError, "short write to " + blob.string());
  }
  nlohmann::json meta = {{"path", source_path}, {"bands", mel.bands}, {"frames", mel.frames},
                         {"T", mel.frames}, {"label", label}};
  std::ofstream out(sidecar, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + sidecar.string());
  out << meta.dump(2) << '\n';
}

CachedFeature read_feature_cache(const std::filesystem::path& stem) {
  auto blob = stem;
  blob += ".f32";
  auto sidecar = stem;
  sidecar += ".json";
  std::ifstream meta_in(sidecar);
  if (!meta_in) throw Error(ErrorCode::UnreadableFile, sidecar.string() + ": cannot open");
  nlohmann::json meta;
  try {
    meta_in >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::UnreadableFile, sidecar.string() + ": " + e.what());
  }
  CachedFeature out;
  out.source_path = meta.value("path", "");
  out.label = meta.value("label", "");
  out.mel.bands = meta.value("bands", std::size_t{kMelBands});
  out.mel.frames = meta.at("T").get<std::size_t>();
  const std::size_t count = out.mel.bands * out.mel.frames;
  std::error_code ec;
  if (std::filesystem::file_size(blob, ec) != count * sizeof(float) || ec) {
    throw Error(ErrorCode::UnreadableFile, blob.string() + ": size does not match sidecar");
  }
  out.mel.values.resize(count);
  std::ifstream in(blob, std::ios::binary);
  in.read(reinterpret_cast<char*>(out.mel.values.data()), static_cast<std::streamsize>(count * sizeof(float)));
  if (!in) throw Error(ErrorCode::UnreadableFile, blob.string() + ": short read");
  return out;
}

}  // namespace synthtag
