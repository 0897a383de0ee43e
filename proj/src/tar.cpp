// Copyright 2026 The synthtag Authors
// SPDX-License-Identifier: Apache-2.0

#include "synthtag/tar.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

#include "synthtag/error.hpp"

namespace synthtag::tar {
namespace {

constexpr std::size_t kBlock = 512;

void put_octal(std::uint8_t* field, std::size_t width, std::uint64_t value) {
  // width includes the terminating NUL.
  for (std::size_t i = width - 1; i-- > 0;) {
    field[i] = static_cast<std::uint8_t>('0' + (value & 7u));
    value >>= 3;
  }
  field[width - 1] = 0;
}

std::uint64_t get_octal(const std::uint8_t* field, std::size_t width, bool& ok) {
  std::uint64_t v = 0;
  std::size_t i = 0;
  while (i < width && field[i] == ' ') ++i;
  for (; i < width && field[i] != 0 && field[i] != ' '; ++i) {
    if (field[i] < '0' || field[i] > '7') {
      ok = false;
      return 0;
    }
    v = (v << 3) | static_cast<std::uint64_t>(field[i] - '0');
  }
  return v;
}

std::uint64_t checksum(const std::uint8_t* header) {
  std::uint64_t sum = 0;
  for (std::size_t i = 0; i < kBlock; ++i) sum += (i >= 148 && i < 156) ? ' ' : header[i];
  return sum;
}

[[noreturn]] void corrupt(const std::filesystem::path& file, const std::string& why) {
  throw Error(ErrorCode::CorruptCheckpoint, file.string() + ": " + why);
}

}  // namespace

void write_archive(const std::filesystem::path& file, const std::vector<Entry>& entries) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + file.string());
  for (const auto& e : entries) {
    if (e.name.size() >= 100) throw Error(ErrorCode::InvalidArgument, "tar entry name too long: " + e.name);
    std::uint8_t header[kBlock] = {};
    std::memcpy(header, e.name.data(), e.name.size());
    put_octal(header + 100, 8, 0644);
    put_octal(header + 108, 8, 0);
    put_octal(header + 116, 8, 0);
    put_octal(header + 124, 12, e.data.size());
    put_octal(header + 136, 12, 0);
    header[156] = '0';
    std::memcpy(header + 257, "ustar", 6);
    std::memcpy(header + 263, "00", 2);
    put_octal(header + 148, 7, checksum(header));
    header[155] = ' ';
    out.write(reinterpret_cast<const char*>(header), kBlock);
    out.write(reinterpret_cast<const char*>(e.data.data()), static_cast<std::streamsize>(e.data.size()));
    const std::size_t pad = (kBlock - e.data.size() % kBlock) % kBlock;
    static const char zeros[kBlock] = {};
    out.write(zeros, static_cast<std::streamsize>(pad));
  }
  static const char zeros[2 * kBlock] = {};
  out.write(zeros, sizeof zeros);
  if (!out) throw Error(ErrorCode::IoError, "short write to " + file.string());
}

std::vector<Entry> read_archive(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) corrupt(file, "cannot open");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::vector<Entry> entries;
  std::size_t pos = 0;
  bool terminated = false;
  while (pos + kBlock <= bytes.size()) {
    const std::uint8_t* h = bytes.data() + pos;
    if (std::all_of(h, h + kBlock, [](std::uint8_t b) { return b == 0; })) {
      terminated = true;
      break;
    }
    bool ok = true;
    const std::uint64_t stored = get_octal(h + 148, 8, ok);
    const std::uint64_t size = get_octal(h + 124, 12, ok);
    if (!ok || stored != checksum(h)) corrupt(file, "bad tar header checksum");
    if (h[156] != '0' && h[156] != 0) corrupt(file, "unexpected tar entry type");
    pos += kBlock;
    if (size > bytes.size() - pos) corrupt(file, "truncated tar entry");
    Entry e;
    e.name.assign(reinterpret_cast<const char*>(h), strnlen(reinterpret_cast<const char*>(h), 100));
    e.data.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                  bytes.begin() + static_cast<std::ptrdiff_t>(pos + size));
    entries.push_back(std::move(e));
    pos += (size + kBlock - 1) / kBlock * kBlock;
  }
  if (!terminated) corrupt(file, "missing end-of-archive marker");
  return entries;
}

}  // namespace synthtag::tar
