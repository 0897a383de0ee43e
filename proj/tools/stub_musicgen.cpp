// Copyright 2026 The synthtag Authors
// SPDX-License-Identifier: Apache-2.0

// Stand-in for a text-to-music generator speaking the adapter protocol:
// prompt on stdin, --duration and --output-dir arguments, output path on
// stdout. Each genre gets its own sine/noise texture so that miniature
// synthetic sets are learnable.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <iterator>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "synthtag/audio.hpp"
#include "synthtag/taxonomy.hpp"

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::vector<float> texture(int genre, double duration_s, int rate, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(std::llround(duration_s * rate));
  std::vector<float> out(n);
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> noise(0.0f, 1.0f);
  std::uniform_real_distribution<double> jitter(0.97, 1.03);
  const double f0 = 110.0 * std::pow(2.0, genre / 3.0) * jitter(rng);
  const double pulse_hz = 0.75 + 0.5 * genre;
  const double noise_level = 0.02 * (genre % 5);
  const int partials = 1 + genre % 4;
  const double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / rate;
    double tone = 0.0;
    for (int k = 1; k <= partials; ++k) tone += std::sin(two_pi * f0 * k * t) / k;
    const double envelope = 0.5 + 0.5 * std::cos(two_pi * pulse_hz * t);
    out[i] = static_cast<float>(0.25 * envelope * tone / partials + noise_level * noise(rng));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stub text-to-music generator"};
  double duration = 30.0;
  std::string output_dir = ".";
  int rate = 32000;
  bool silence = false;
  int fail_code = 0;
  app.add_option("--duration", duration, "Clip length in seconds")->check(CLI::PositiveNumber);
  app.add_option("--output-dir", output_dir, "Directory for the generated file");
  app.add_option("--sample-rate", rate, "Output sample rate");
  app.add_flag("--silence", silence, "Emit digital silence");
  app.add_option("--fail", fail_code, "Exit with this status without writing anything");
  CLI11_PARSE(app, argc, argv);

  const std::string prompt((std::istreambuf_iterator<char>(std::cin)), std::istreambuf_iterator<char>());
  if (fail_code != 0) {
    std::cerr << "stub_musicgen: failing on request\n";
    return fail_code;
  }
  std::istringstream words(prompt);
  std::string first;
  words >> first;
  const auto genre = synthtag::genre_index(first);
  const std::uint64_t seed = fnv1a(prompt);

  std::vector<float> samples;
  if (silence) {
    samples.assign(static_cast<std::size_t>(std::llround(duration * rate)), 0.0f);
  } else {
    samples = texture(genre.value_or(0), duration, rate, seed);
  }
  std::filesystem::create_directories(output_dir);
  char name[64];
  std::snprintf(name, sizeof name, "%s-%016llx.wav", genre ? first.c_str() : "unknown",
                static_cast<unsigned long long>(seed));
  const auto path = std::filesystem::path(output_dir) / name;
  try {
    synthtag::write_wav(path, samples, rate);
  } catch (const std::exception& e) {
    std::cerr << "stub_musicgen: " << e.what() << '\n';
    return 1;
  }
  std::cout << path.string() << '\n';
  return 0;
}
