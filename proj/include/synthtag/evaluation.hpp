// Copyright 2026 The synthtag Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "synthtag/dataset.hpp"
#include "synthtag/model.hpp"

namespace synthtag {

struct FoldResult {
  int fold_id = 0;
  double accuracy = 0.0;
  double loss = 0.0;
};

/// Center-crop accuracy and mean cross-entropy. Throws EmptySplit.
FoldResult evaluate(const Model& model, std::span<const TrackRecord> records, const FeatureSource& source,
                    int fold_id = 0, std::size_t batch_size = 16);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  ///< population (divide by N)
};

struct FoldAggregate {
  MeanStd accuracy;
  MeanStd loss;
  std::size_t folds = 0;
};

/// Throws TooFewFolds for fewer than two results.
FoldAggregate aggregate_folds(std::span<const FoldResult> results);

struct EmbeddingRecord {
  std::string id;
  std::string genre;
  Domain domain = Domain::Real;
  std::vector<float> embedding;

  bool operator==(const EmbeddingRecord&) const = default;
};

/// One embedding per record from its center 10 s crop.
std::vector<EmbeddingRecord> extract_embeddings(const Model& model, std::span<const TrackRecord> records,
                                                const FeatureSource& source);

/// JSON Lines: {"id", "genre", "domain", "embedding": [...]}
void write_embeddings_jsonl(const std::filesystem::path& file, std::span<const EmbeddingRecord> records);
std::vector<EmbeddingRecord> read_embeddings_jsonl(const std::filesystem::path& file);

void write_fold_result(const std::filesystem::path& file, const FoldResult& result, const std::string& regime);
FoldResult read_fold_result(const std::filesystem::path& file);

}  // namespace synthtag
