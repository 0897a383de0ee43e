// Copyright 2026 The synthtag Authors
// SPDX-License-Identifier: Apache-2.0

#include "synthtag/audio.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <numeric>

#include "synthtag/error.hpp"

namespace synthtag {
namespace {

static_assert(std::endian::native == std::endian::little,
              "WAV and checkpoint I/O assume a little-endian host");

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t read_u16(const std::uint8_t* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }
std::uint32_t read_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

bool has_tag(std::span<const std::uint8_t> bytes, std::size_t offset, const char* tag) {
  const std::size_t n = std::strlen(tag);
  return bytes.size() >= offset + n && std::memcmp(bytes.data() + offset, tag, n) == 0;
}

struct FormatChunk {
  std::uint16_t format = 0;
  int channels = 0;
  int sample_rate = 0;
  int block_align = 0;
  int bits = 0;
};

struct ParsedHeader {
  FormatChunk fmt;
  std::size_t data_offset = 0;
  std::size_t data_size = 0;
};

[[noreturn]] void unreadable(const std::string& name, const std::string& why) {
  throw Error(ErrorCode::UnreadableFile, name + ": " + why);
}

[[noreturn]] void unsupported(const std::string& name, const std::string& why) {
  throw Error(ErrorCode::UnsupportedFormat, name + ": " + why);
}

// Walks the RIFF chunk list. `bytes` may be just a header prefix when probing,
// in which case the data chunk size is taken from its header.
ParsedHeader parse_header(std::span<const std::uint8_t> bytes, const std::string& name,
                          bool header_only) {
  if (bytes.empty()) unreadable(name, "empty file");
  if (has_tag(bytes, 0, "fLaC")) unsupported(name, "FLAC is not supported");
  if (has_tag(bytes, 0, "OggS")) unsupported(name, "Ogg is not supported");
  if (has_tag(bytes, 0, "ID3") || (bytes.size() >= 2 && bytes[0] == 0xFF && (bytes[1] & 0xE0) == 0xE0))
    unsupported(name, "MPEG audio is not supported");
  if (has_tag(bytes, 0, "FORM")) unsupported(name, "AIFF is not supported");
  if (has_tag(bytes, 0, "RF64")) unsupported(name, "RF64 is not supported");
  if (bytes.size() < 12 || !has_tag(bytes, 0, "RIFF")) unreadable(name, "not a RIFF file");
  if (!has_tag(bytes, 8, "WAVE")) unsupported(name, "RIFF file is not WAVE");

  ParsedHeader out;
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* chunk = bytes.data() + pos;
    const std::uint32_t size = read_u32(chunk + 4);
    const std::size_t body = pos + 8;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16 || body + 16 > bytes.size()) unreadable(name, "truncated fmt chunk");
      const std::uint8_t* f = bytes.data() + body;
      out.fmt.format = read_u16(f);
      out.fmt.channels = read_u16(f + 2);
      out.fmt.sample_rate = static_cast<int>(read_u32(f + 4));
      out.fmt.block_align = read_u16(f + 12);
      out.fmt.bits = read_u16(f + 14);
      if (out.fmt.format == kFormatExtensible) {
        if (size < 40 || body + 26 > bytes.size()) unreadable(name, "truncated extensible fmt chunk");
        out.fmt.format = read_u16(f + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (!have_fmt) unreadable(name, "data chunk before fmt chunk");
      out.data_offset = body;
      out.data_size = size;
      if (!header_only) {
        // Streamed writers leave the size field unset; clamp to what is present.
        out.data_size = std::min<std::size_t>(size, bytes.size() - body);
      }
      break;
    }
    pos = body + size + (size & 1u);
  }
  if (!have_fmt) unreadable(name, "missing fmt chunk");
  if (out.data_offset == 0) unreadable(name, "missing data chunk");
  const auto& fmt = out.fmt;
  if (fmt.format != kFormatPcm && fmt.format != kFormatFloat)
    unsupported(name, "WAV codec " + std::to_string(fmt.format) + " is not PCM or IEEE float");
  if (fmt.channels <= 0 || fmt.sample_rate <= 0) unreadable(name, "invalid channel count or rate");
  const bool ok_bits = fmt.format == kFormatPcm
                           ? (fmt.bits == 8 || fmt.bits == 16 || fmt.bits == 24 || fmt.bits == 32)
                           : (fmt.bits == 32 || fmt.bits == 64);
  if (!ok_bits) unsupported(name, std::to_string(fmt.bits) + "-bit samples are not supported");
  if (fmt.block_align != fmt.channels * fmt.bits / 8) unreadable(name, "inconsistent block alignment");
  return out;
}

float decode_sample(const std::uint8_t* p, const FormatChunk& fmt) {
  if (fmt.format == kFormatFloat) {
    if (fmt.bits == 32) {
      float v;
      std::memcpy(&v, p, 4);
      return v;
    }
    double v;
    std::memcpy(&v, p, 8);
    return static_cast<float>(v);
  }
  switch (fmt.bits) {
    case 8: return (static_cast<int>(p[0]) - 128) / 128.0f;
    case 16: return static_cast<std::int16_t>(read_u16(p)) / 32768.0f;
    case 24: {
      std::int32_t v = static_cast<std::int32_t>(p[0] | (p[1] << 8) | (p[2] << 16));
      if (v & 0x800000) v -= 0x1000000;
      return static_cast<float>(v / 8388608.0);
    }
    default:
      return static_cast<float>(static_cast<std::int32_t>(read_u32(p)) / 2147483648.0);
  }
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path, std::size_t limit = 0) {
  std::ifstream in(path, std::ios::binary);
  if (!in) unreadable(path.string(), "cannot open");
  std::vector<std::uint8_t> bytes;
  if (limit == 0) {
    bytes.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  } else {
    bytes.resize(limit);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(limit));
    bytes.resize(static_cast<std::size_t>(in.gcount()));
  }
  return bytes;
}

double kaiser(double x, double beta) {
  // x in [-1, 1]
  const double arg = 1.0 - x * x;
  if (arg <= 0.0) return 0.0;
  return std::cyl_bessel_i(0.0, beta * std::sqrt(arg)) / std::cyl_bessel_i(0.0, beta);
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}
void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

void write_pcm(const std::filesystem::path& path, const std::vector<std::vector<float>>& channels,
               int sample_rate, int bits) {
  if (channels.empty()) throw Error(ErrorCode::InvalidArgument, "no channels to write");
  if (bits != 16 && bits != 24) throw Error(ErrorCode::InvalidArgument, "bits must be 16 or 24");
  const std::size_t frames = channels.front().size();
  for (const auto& c : channels)
    if (c.size() != frames) throw Error(ErrorCode::ShapeMismatch, "channel lengths differ");
  const auto n_ch = static_cast<std::uint16_t>(channels.size());
  const std::uint16_t block = static_cast<std::uint16_t>(n_ch * bits / 8);
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(frames * block);

  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put_u32(out, 36 + data_bytes);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put_u32(out, 16);
  put_u16(out, kFormatPcm);
  put_u16(out, n_ch);
  put_u32(out, static_cast<std::uint32_t>(sample_rate));
  put_u32(out, static_cast<std::uint32_t>(sample_rate) * block);
  put_u16(out, block);
  put_u16(out, static_cast<std::uint16_t>(bits));
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put_u32(out, data_bytes);
  const double scale = bits == 16 ? 32767.0 : 8388607.0;
  for (std::size_t i = 0; i < frames; ++i) {
    for (const auto& c : channels) {
      const double v = std::clamp(static_cast<double>(c[i]), -1.0, 1.0);
      const auto q = static_cast<std::int32_t>(std::lround(v * scale));
      out.push_back(static_cast<std::uint8_t>(q & 0xFF));
      out.push_back(static_cast<std::uint8_t>((q >> 8) & 0xFF));
      if (bits == 24) out.push_back(static_cast<std::uint8_t>((q >> 16) & 0xFF));
    }
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!f) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

}  // namespace

DecodedAudio decode_wav(std::span<const std::uint8_t> bytes, const std::string& name) {
  const ParsedHeader header = parse_header(bytes, name, false);
  const auto& fmt = header.fmt;
  const std::size_t frames = header.data_size / static_cast<std::size_t>(fmt.block_align);
  if (frames == 0) unreadable(name, "no audio frames");

  DecodedAudio out;
  out.info = {fmt.sample_rate, fmt.channels, fmt.bits, frames};
  out.channels.assign(static_cast<std::size_t>(fmt.channels), std::vector<float>(frames));
  const std::size_t width = static_cast<std::size_t>(fmt.bits / 8);
  const std::uint8_t* data = bytes.data() + header.data_offset;
  for (std::size_t i = 0; i < frames; ++i) {
    const std::uint8_t* frame = data + i * static_cast<std::size_t>(fmt.block_align);
    for (int c = 0; c < fmt.channels; ++c) {
      out.channels[static_cast<std::size_t>(c)][i] = decode_sample(frame + c * width, fmt);
    }
  }
  return out;
}

WavInfo probe_wav(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) unreadable(path.string(), "file does not exist");
  // Header chunks (fmt, LIST, ...) live in the first few KiB of any sane WAV.
  const auto bytes = read_file(path, 1 << 16);
  const ParsedHeader header = parse_header(bytes, path.string(), true);
  const auto file_size = std::filesystem::file_size(path);
  const std::size_t data_size =
      std::min<std::size_t>(header.data_size, file_size > header.data_offset ? file_size - header.data_offset : 0);
  WavInfo info{header.fmt.sample_rate, header.fmt.channels, header.fmt.bits,
               data_size / static_cast<std::size_t>(header.fmt.block_align)};
  return info;
}

AudioClip load_audio(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) unreadable(path.string(), "file does not exist");
  const auto bytes = read_file(path);
  DecodedAudio decoded = decode_wav(bytes, path.string());

  std::vector<float> mono;
  if (decoded.channels.size() == 1) {
    mono = std::move(decoded.channels.front());
  } else {
    const std::size_t frames = decoded.info.frames;
    mono.assign(frames, 0.0f);
    const float inv = 1.0f / static_cast<float>(decoded.channels.size());
    for (std::size_t i = 0; i < frames; ++i) {
      float acc = 0.0f;
      for (const auto& ch : decoded.channels) acc += ch[i];
      mono[i] = acc * inv;
    }
  }

  AudioClip clip;
  clip.source_path = path.string();
  clip.sample_rate = kModelSampleRate;
  clip.samples = decoded.info.sample_rate == kModelSampleRate
                     ? std::move(mono)
                     : resample(mono, decoded.info.sample_rate, kModelSampleRate);
  return clip;
}

void write_wav(const std::filesystem::path& path, std::span<const float> samples, int sample_rate,
               int bits_per_sample) {
  write_pcm(path, {std::vector<float>(samples.begin(), samples.end())}, sample_rate, bits_per_sample);
}

void write_wav_channels(const std::filesystem::path& path,
                        const std::vector<std::vector<float>>& channels, int sample_rate) {
  write_pcm(path, channels, sample_rate, 16);
}

std::vector<float> resample(std::span<const float> input, int from_rate, int to_rate) {
  if (from_rate <= 0 || to_rate <= 0) throw Error(ErrorCode::InvalidArgument, "sample rates must be positive");
  if (from_rate == to_rate) return {input.begin(), input.end()};

  const int g = std::gcd(from_rate, to_rate);
  const std::int64_t up = to_rate / g;
  const std::int64_t down = from_rate / g;
  constexpr double kRolloff = 0.945;
  constexpr double kZeroCrossings = 16.0;
  constexpr double kBeta = 8.6;
  // Cutoff in cycles per input sample.
  const double fc = 0.5 * std::min(1.0, static_cast<double>(up) / static_cast<double>(down)) * kRolloff;
  const int half = static_cast<int>(std::ceil(kZeroCrossings / (2.0 * fc)));
  const int taps = 2 * half;

  // table[phase * taps + k] weights input[base - half + 1 + k] for output at base + phase/up.
  std::vector<float> table(static_cast<std::size_t>(up * taps));
  for (std::int64_t phase = 0; phase < up; ++phase) {
    const double frac = static_cast<double>(phase) / static_cast<double>(up);
    double sum = 0.0;
    std::vector<double> row(static_cast<std::size_t>(taps));
    for (int k = 0; k < taps; ++k) {
      const double u = static_cast<double>(k - half + 1) - frac;
      const double x = 2.0 * fc * u;
      const double sinc = x == 0.0 ? 1.0 : std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
      row[static_cast<std::size_t>(k)] = 2.0 * fc * sinc * kaiser(u / half, kBeta);
      sum += row[static_cast<std::size_t>(k)];
    }
    for (int k = 0; k < taps; ++k)
      table[static_cast<std::size_t>(phase * taps + k)] = static_cast<float>(row[static_cast<std::size_t>(k)] / sum);
  }

  const auto n_in = static_cast<std::int64_t>(input.size());
  const std::int64_t n_out = (n_in * up + down - 1) / down;
  std::vector<float> out(static_cast<std::size_t>(n_out));
#pragma omp parallel for schedule(static)
  for (std::int64_t n = 0; n < n_out; ++n) {
    const std::int64_t pos = n * down;
    const std::int64_t base = pos / up;
    const std::int64_t phase = pos % up;
    const float* w = table.data() + phase * taps;
    const std::int64_t first = base - half + 1;
    double acc = 0.0;
    const int k0 = static_cast<int>(std::max<std::int64_t>(0, -first));
    const int k1 = static_cast<int>(std::min<std::int64_t>(taps, n_in - first));
    for (int k = k0; k < k1; ++k) acc += static_cast<double>(w[k]) * input[static_cast<std::size_t>(first + k)];
    out[static_cast<std::size_t>(n)] = static_cast<float>(acc);
  }
  return out;
}

AudioClip crop(const AudioClip& clip, CropMode mode, Rng& rng, std::size_t length) {
  const std::size_t len = clip.samples.size();
  if (len < length) {
    throw Error(ErrorCode::ClipTooShort, clip.source_path + ": " + std::to_string(len) +
                                             " samples, need " + std::to_string(length));
  }
  std::size_t start = 0;
  if (mode == CropMode::Center) {
    start = (len - length) / 2;
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, len - length);
    start = pick(rng);
  }
  AudioClip out;
  out.sample_rate = clip.sample_rate;
  out.source_path = clip.source_path;
  out.samples.assign(clip.samples.begin() + static_cast<std::ptrdiff_t>(start),
                     clip.samples.begin() + static_cast<std::ptrdiff_t>(start + length));
  return out;
}

}  // namespace synthtag
