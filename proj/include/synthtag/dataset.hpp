// Copyright 2026 The synthtag Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "synthtag/audio.hpp"
#include "synthtag/features.hpp"
#include "synthtag/taxonomy.hpp"

namespace synthtag {

struct TrackRecord {
  std::string path;
  std::string genre;
  Domain domain = Domain::Real;
  double duration_s = 0.0;

  int label() const { return require_genre(genre); }
  bool operator==(const TrackRecord&) const = default;
};

struct FoldSplit {
  int fold_id = 0;
  std::vector<TrackRecord> train;
  std::vector<TrackRecord> val;
};

/// Genre from a GTZAN-style file name, e.g. "blues.00042.wav" -> "blues".
/// Throws UnknownGenre when the prefix is not a taxonomy label.
std::string genre_from_filename(const std::string& path);

/// Reads three plain-text fold files (one file name per line). Fold i's
/// validation set is the content of fold_files[i]; its training set is the
/// union of the other two. Paths are resolved against `root`, also trying
/// <root>/<genre>/<name> and <root>/genres_original/<genre>/<name>.
std::vector<FoldSplit> load_gtzan_manifest(const std::filesystem::path& root,
                                           std::span<const std::filesystem::path> fold_files);

/// CSV with header path,genre,domain,duration_s.
void write_manifest_csv(const std::filesystem::path& file, std::span<const TrackRecord> records);
/// Relative paths are resolved against the CSV's directory. Extra trailing
/// columns (the synthetic manifest keeps prompt ids there) are ignored.
std::vector<TrackRecord> read_manifest_csv(const std::filesystem::path& file);

/// k seeded, genre-stratified shuffles. Per genre, round(count * val_fraction)
/// items go to validation.
std::vector<FoldSplit> random_splits(std::span<const TrackRecord> records, int k, double val_fraction,
                                     std::uint64_t seed);

struct BatchItem {
  MelSpectrogram mel;
  int label = 0;
  Domain domain = Domain::Real;
  std::string id;
};

using Batch = std::vector<BatchItem>;

/// Produces model inputs for a record. Random crops are driven by `crop_seed`
/// so that items can be loaded in parallel with a fixed outcome.
class FeatureSource {
 public:
  virtual ~FeatureSource() = default;
  virtual MelSpectrogram features(const TrackRecord& record, CropMode mode,
                                  std::uint64_t crop_seed) const = 0;
};

using ClipLoader = std::function<AudioClip(const std::string& path)>;

/// load -> 10 s crop -> log-mel.
class AudioFeatureSource final : public FeatureSource {
 public:
  explicit AudioFeatureSource(ClipLoader loader = {}, std::size_t crop_samples = kCropSamples,
                              const MelFilterbank& fb = default_filterbank());
  MelSpectrogram features(const TrackRecord& record, CropMode mode, std::uint64_t crop_seed) const override;

 private:
  ClipLoader loader_;
  std::size_t crop_samples_;
  const MelFilterbank& fb_;
};

/// Precomputed spectrograms keyed by record path. Crops are ignored.
class InMemoryFeatureSource final : public FeatureSource {
 public:
  void add(const std::string& path, MelSpectrogram mel) { table_[path] = std::move(mel); }
  MelSpectrogram features(const TrackRecord& record, CropMode mode, std::uint64_t crop_seed) const override;

 private:
  std::map<std::string, MelSpectrogram> table_;
};

enum class BatchMode { Train, Val };

/// One pass over a record list. Train mode shuffles the order and random-crops;
/// val mode keeps manifest order and center-crops. The last batch may be short.
class BatchIterator {
 public:
  BatchIterator(std::span<const TrackRecord> records, std::size_t batch_size, BatchMode mode, Rng& rng,
                const FeatureSource& source);

  std::optional<Batch> next();
  std::size_t batch_count() const;
  /// The epoch's record order.
  std::span<const TrackRecord* const> order() const { return order_; }

 private:
  std::vector<const TrackRecord*> order_;
  std::size_t batch_size_;
  BatchMode mode_;
  Rng& rng_;
  const FeatureSource& source_;
  std::size_t cursor_ = 0;
};

/// Loads the given records; crop seeds are drawn from rng in order.
Batch load_items(std::span<const TrackRecord* const> records, BatchMode mode, Rng& rng,
                 const FeatureSource& source);

/// Real training records indexed by class for pair sampling.
class RealPool {
 public:
  explicit RealPool(std::span<const TrackRecord> records);

  const std::vector<TrackRecord>& records() const { return records_; }
  const std::vector<std::size_t>& of_class(int label) const;
  std::size_t size() const { return records_.size(); }

 private:
  std::vector<TrackRecord> records_;
  std::array<std::vector<std::size_t>, kGenreCount> by_class_;
};

struct DaPairIndices {
  std::vector<std::size_t> positive;  ///< indices into RealPool::records()
  std::vector<std::size_t> negative;
};

/// For each label, one uniformly drawn same-class and one uniformly drawn
/// different-class pool item. Throws MissingClassInPool.
DaPairIndices select_da_pairs(std::span<const int> synth_labels, const RealPool& pool, Rng& rng);

struct DaPairBatch {
  std::vector<std::size_t> synth_index;  ///< positions of synthetic items in the source batch
  Batch pos_real;
  Batch neg_real;
};

/// Picks pairs for the synthetic items of `batch` and loads their features
/// with training-mode crops.
DaPairBatch sample_da_pairs(const Batch& batch, const RealPool& pool, Rng& rng, const FeatureSource& source);

}  // namespace synthtag
