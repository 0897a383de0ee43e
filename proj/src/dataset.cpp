// Copyright 2026 The synthtag Authors
// SPDX-License-Identifier: Apache-2.0

#include "synthtag/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "synthtag/csv.hpp"
#include "synthtag/error.hpp"

namespace synthtag {
namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> read_lines(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::MissingFile, "fold file " + file.string() + " cannot be opened");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (!line.empty() && line.front() != '#') lines.push_back(line);
  }
  return lines;
}

std::optional<fs::path> resolve_track(const fs::path& root, const std::string& entry, const std::string& genre) {
  const fs::path given(entry);
  const fs::path name = given.filename();
  std::vector<fs::path> candidates;
  if (given.is_absolute()) candidates.push_back(given);
  candidates.push_back(root / given);
  candidates.push_back(root / genre / name);
  candidates.push_back(root / name);
  candidates.push_back(root / "genres_original" / genre / name);
  candidates.push_back(root / "genres" / genre / name);
  std::error_code ec;
  for (const auto& c : candidates) {
    if (fs::is_regular_file(c, ec)) return c;
  }
  return std::nullopt;
}

}  // namespace

std::string genre_from_filename(const std::string& path) {
  const std::string name = fs::path(path).filename().string();
  const auto dot = name.find('.');
  const std::string prefix = name.substr(0, dot);
  require_genre(prefix);
  return prefix;
}

std::vector<FoldSplit> load_gtzan_manifest(const fs::path& root, std::span<const fs::path> fold_files) {
  if (fold_files.size() != 3) {
    throw Error(ErrorCode::InvalidArgument, "expected 3 fold files, got " + std::to_string(fold_files.size()));
  }
  std::array<std::vector<TrackRecord>, 3> folds;
  std::set<std::string> seen;
  for (std::size_t f = 0; f < 3; ++f) {
    for (const auto& entry : read_lines(fold_files[f])) {
      const std::string genre = genre_from_filename(entry);
      const auto resolved = resolve_track(root, entry, genre);
      if (!resolved) {
        throw Error(ErrorCode::MissingFile, "track '" + entry + "' listed in " + fold_files[f].string() +
                                                " not found under " + root.string());
      }
      const std::string key = fs::path(entry).filename().string();
      if (!seen.insert(key).second) {
        throw Error(ErrorCode::InvalidArgument, "track '" + entry + "' is listed in more than one fold");
      }
      const WavInfo info = probe_wav(*resolved);
      folds[f].push_back({resolved->string(), genre, Domain::Real, info.duration_seconds()});
    }
  }
  std::vector<FoldSplit> splits;
  for (int f = 0; f < 3; ++f) {
    FoldSplit split;
    split.fold_id = f;
    split.val = folds[static_cast<std::size_t>(f)];
    for (int g = 0; g < 3; ++g) {
      if (g == f) continue;
      const auto& other = folds[static_cast<std::size_t>(g)];
      split.train.insert(split.train.end(), other.begin(), other.end());
    }
    splits.push_back(std::move(split));
  }
  return splits;
}

void write_manifest_csv(const fs::path& file, std::span<const TrackRecord> records) {
  std::vector<csv::Row> rows;
  rows.push_back({"path", "genre", "domain", "duration_s"});
  for (const auto& r : records) {
    rows.push_back({r.path, r.genre, std::string(to_string(r.domain)), csv::format_number(r.duration_s)});
  }
  csv::write_file(file, rows);
}

std::vector<TrackRecord> read_manifest_csv(const fs::path& file) {
  const auto rows = csv::read_file(file);
  if (rows.empty()) throw Error(ErrorCode::EmptyManifest, file.string() + " has no header");
  const csv::Row expected = {"path", "genre", "domain", "duration_s"};
  if (rows.front().size() < expected.size() || !std::equal(expected.begin(), expected.end(), rows.front().begin())) {
    throw Error(ErrorCode::UnreadableFile, file.string() + ": header must start with path,genre,domain,duration_s");
  }
  const fs::path base = file.parent_path();
  std::vector<TrackRecord> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (row.size() != rows.front().size()) {
      throw Error(ErrorCode::UnreadableFile, file.string() + ": row " + std::to_string(i) + " has " +
                                                 std::to_string(row.size()) + " fields");
    }
    require_genre(row[1]);
    fs::path p(row[0]);
    if (p.is_relative() && !base.empty()) p = base / p;
    double duration = 0.0;
    try {
      duration = std::stod(row[3]);
    } catch (const std::exception&) {
      throw Error(ErrorCode::UnreadableFile, file.string() + ": bad duration '" + row[3] + "'");
    }
    out.push_back({p.string(), row[1], parse_domain(row[2]), duration});
  }
  return out;
}

std::vector<FoldSplit> random_splits(std::span<const TrackRecord> records, int k, double val_fraction,
                                     std::uint64_t seed) {
  if (records.empty()) throw Error(ErrorCode::EmptyManifest, "cannot split an empty manifest");
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
    throw Error(ErrorCode::EmptyManifest, "val_fraction must lie in (0, 1), got " + std::to_string(val_fraction));
  }
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be positive");

  std::array<std::vector<std::size_t>, kGenreCount> by_genre;
  for (std::size_t i = 0; i < records.size(); ++i) {
    by_genre[static_cast<std::size_t>(records[i].label())].push_back(i);
  }
  Rng rng(seed);
  std::vector<FoldSplit> splits;
  for (int s = 0; s < k; ++s) {
    std::vector<bool> in_val(records.size(), false);
    for (auto members : by_genre) {
      std::shuffle(members.begin(), members.end(), rng);
      const auto n_val = static_cast<std::size_t>(std::llround(static_cast<double>(members.size()) * val_fraction));
      for (std::size_t j = 0; j < n_val; ++j) in_val[members[j]] = true;
    }
    FoldSplit split;
    split.fold_id = s;
    for (std::size_t i = 0; i < records.size(); ++i) {
      (in_val[i] ? split.val : split.train).push_back(records[i]);
    }
    splits.push_back(std::move(split));
  }
  return splits;
}

AudioFeatureSource::AudioFeatureSource(ClipLoader loader, std::size_t crop_samples, const MelFilterbank& fb)
    : loader_(std::move(loader)), crop_samples_(crop_samples), fb_(fb) {
  if (!loader_) loader_ = [](const std::string& path) { return load_audio(path); };
}

MelSpectrogram AudioFeatureSource::features(const TrackRecord& record, CropMode mode,
                                            std::uint64_t crop_seed) const {
  const AudioClip clip = loader_(record.path);
  Rng rng(crop_seed);
  return mel_spectrogram(crop(clip, mode, rng, crop_samples_), fb_);
}

MelSpectrogram InMemoryFeatureSource::features(const TrackRecord& record, CropMode, std::uint64_t) const {
  const auto it = table_.find(record.path);
  if (it == table_.end()) throw Error(ErrorCode::MissingFile, "no features for '" + record.path + "'");
  return it->second;
}

Batch load_items(std::span<const TrackRecord* const> records, BatchMode mode, Rng& rng,
                 const FeatureSource& source) {
  const CropMode crop_mode = mode == BatchMode::Train ? CropMode::Random : CropMode::Center;
  std::vector<std::uint64_t> seeds(records.size(), 0);
  if (mode == BatchMode::Train) {
    for (auto& s : seeds) s = rng();
  }
  Batch batch(records.size());
  const auto n = static_cast<std::ptrdiff_t>(records.size());
  // Exceptions must not escape the parallel region; rethrow the first one in order.
  std::vector<std::exception_ptr> errors(records.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    try {
      const TrackRecord& r = *records[idx];
      batch[idx].mel = source.features(r, crop_mode, seeds[idx]);
      batch[idx].label = r.label();
      batch[idx].domain = r.domain;
      batch[idx].id = r.path;
    } catch (...) {
      errors[idx] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return batch;
}

BatchIterator::BatchIterator(std::span<const TrackRecord> records, std::size_t batch_size, BatchMode mode,
                             Rng& rng, const FeatureSource& source)
    : batch_size_(batch_size), mode_(mode), rng_(rng), source_(source) {
  if (records.empty()) throw Error(ErrorCode::EmptySplit, "cannot iterate an empty split");
  if (batch_size == 0) throw Error(ErrorCode::InvalidArgument, "batch size must be positive");
  order_.reserve(records.size());
  for (const auto& r : records) order_.push_back(&r);
  if (mode_ == BatchMode::Train) std::shuffle(order_.begin(), order_.end(), rng_);
}

std::size_t BatchIterator::batch_count() const { return (order_.size() + batch_size_ - 1) / batch_size_; }

std::optional<Batch> BatchIterator::next() {
  if (cursor_ >= order_.size()) return std::nullopt;
  const std::size_t end = std::min(order_.size(), cursor_ + batch_size_);
  std::span<const TrackRecord* const> slice(order_.data() + cursor_, end - cursor_);
  cursor_ = end;
  return load_items(slice, mode_, rng_, source_);
}

RealPool::RealPool(std::span<const TrackRecord> records) : records_(records.begin(), records.end()) {
  for (std::size_t i = 0; i < records_.size(); ++i) {
    if (records_[i].domain != Domain::Real) {
      throw Error(ErrorCode::InvalidArgument, "DA pool must contain real records only: " + records_[i].path);
    }
    by_class_[static_cast<std::size_t>(records_[i].label())].push_back(i);
  }
}

const std::vector<std::size_t>& RealPool::of_class(int label) const {
  return by_class_.at(static_cast<std::size_t>(label));
}

DaPairIndices select_da_pairs(std::span<const int> synth_labels, const RealPool& pool, Rng& rng) {
  DaPairIndices out;
  out.positive.reserve(synth_labels.size());
  out.negative.reserve(synth_labels.size());
  for (int label : synth_labels) {
    const auto& same = pool.of_class(label);
    if (same.empty()) {
      throw Error(ErrorCode::MissingClassInPool,
                  "real pool has no '" + std::string(kGenres[static_cast<std::size_t>(label)]) + "' item");
    }
    const std::size_t n_other = pool.size() - same.size();
    if (n_other == 0) {
      throw Error(ErrorCode::MissingClassInPool, "real pool has no item with a label other than '" +
                                                     std::string(kGenres[static_cast<std::size_t>(label)]) + "'");
    }
    std::uniform_int_distribution<std::size_t> pick_pos(0, same.size() - 1);
    out.positive.push_back(same[pick_pos(rng)]);

    // Uniform over the pool items of other classes: the k-th such item in pool order.
    std::uniform_int_distribution<std::size_t> pick_neg(0, n_other - 1);
    std::size_t k = pick_neg(rng);
    for (std::size_t c = 0; c < kGenreCount; ++c) {
      if (static_cast<int>(c) == label) continue;
      const auto& members = pool.of_class(static_cast<int>(c));
      if (k < members.size()) {
        out.negative.push_back(members[k]);
        break;
      }
      k -= members.size();
    }
  }
  return out;
}

DaPairBatch sample_da_pairs(const Batch& batch, const RealPool& pool, Rng& rng, const FeatureSource& source) {
  DaPairBatch out;
  std::vector<int> labels;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (batch[i].domain == Domain::Synthetic) {
      out.synth_index.push_back(i);
      labels.push_back(batch[i].label);
    }
  }
  if (labels.empty()) return out;
  const DaPairIndices picks = select_da_pairs(labels, pool, rng);
  std::vector<const TrackRecord*> pos, neg;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    pos.push_back(&pool.records()[picks.positive[i]]);
    neg.push_back(&pool.records()[picks.negative[i]]);
  }
  out.pos_real = load_items(pos, BatchMode::Train, rng, source);
  out.neg_real = load_items(neg, BatchMode::Train, rng, source);
  return out;
}

}  // namespace synthtag
