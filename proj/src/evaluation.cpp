// Copyright 2026 The synthtag Authors
// SPDX-License-Identifier: Apache-2.0

#include "synthtag/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "synthtag/error.hpp"
#include "synthtag/losses.hpp"

namespace synthtag {

FoldResult evaluate(const Model& model, std::span<const TrackRecord> records, const FeatureSource& source,
                    int fold_id, std::size_t batch_size) {
  if (records.empty()) throw Error(ErrorCode::EmptySplit, "cannot evaluate an empty split");
  std::vector<const TrackRecord*> ptrs;
  for (const auto& r : records) ptrs.push_back(&r);
  const auto n_classes = static_cast<std::size_t>(model.config().n_classes);

  Rng unused(0);
  double loss_sum = 0.0;
  std::size_t correct = 0;
  for (std::size_t start = 0; start < ptrs.size(); start += batch_size) {
    const std::size_t end = std::min(ptrs.size(), start + batch_size);
    const Batch batch = load_items(std::span(ptrs).subspan(start, end - start), BatchMode::Val, unused, source);
    std::vector<MelSpectrogram> inputs;
    std::vector<int> labels;
    for (const auto& item : batch) {
      if (item.label >= model.config().n_classes) {
        throw Error(ErrorCode::InvalidLabel, "label of " + item.id + " exceeds the model's class count");
      }
      inputs.push_back(item.mel);
      labels.push_back(item.label);
    }
    const ForwardOutput out = model.forward(inputs);
    loss_sum += losses::cross_entropy(out.probs, labels, n_classes) * static_cast<double>(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const auto p = out.prob(i);
      const auto pred = static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
      if (pred == labels[i]) ++correct;
    }
  }
  FoldResult r;
  r.fold_id = fold_id;
  r.accuracy = static_cast<double>(correct) / static_cast<double>(ptrs.size());
  r.loss = loss_sum / static_cast<double>(ptrs.size());
  return r;
}

FoldAggregate aggregate_folds(std::span<const FoldResult> results) {
  if (results.size() < 2) {
    throw Error(ErrorCode::TooFewFolds, "need at least 2 fold results, got " + std::to_string(results.size()));
  }
  auto stats = [&](auto member) {
    // Offsets from the first value keep identical folds exact.
    const double base = results.front().*member;
    double offset = 0.0;
    for (const auto& r : results) offset += r.*member - base;
    const double mean = base + offset / static_cast<double>(results.size());
    double var = 0.0;
    for (const auto& r : results) var += (r.*member - mean) * (r.*member - mean);
    var /= static_cast<double>(results.size());
    return MeanStd{mean, std::sqrt(var)};
  };
  return {stats(&FoldResult::accuracy), stats(&FoldResult::loss), results.size()};
}

std::vector<EmbeddingRecord> extract_embeddings(const Model& model, std::span<const TrackRecord> records,
                                                const FeatureSource& source) {
  std::vector<EmbeddingRecord> out;
  out.reserve(records.size());
  Rng unused(0);
  constexpr std::size_t kChunk = 16;
  std::vector<const TrackRecord*> ptrs;
  for (const auto& r : records) ptrs.push_back(&r);
  for (std::size_t start = 0; start < ptrs.size(); start += kChunk) {
    const std::size_t end = std::min(ptrs.size(), start + kChunk);
    const Batch batch = load_items(std::span(ptrs).subspan(start, end - start), BatchMode::Val, unused, source);
    std::vector<MelSpectrogram> inputs;
    for (const auto& item : batch) inputs.push_back(item.mel);
    const ForwardOutput fwd = model.forward(inputs);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const auto e = fwd.embedding(i);
      out.push_back({ptrs[start + i]->path, ptrs[start + i]->genre, ptrs[start + i]->domain, {e.begin(), e.end()}});
    }
  }
  return out;
}

void write_embeddings_jsonl(const std::filesystem::path& file, std::span<const EmbeddingRecord> records) {
  std::ofstream out(file, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + file.string());
  for (const auto& r : records) {
    nlohmann::json j = {{"id", r.id}, {"genre", r.genre}, {"domain", to_string(r.domain)}, {"embedding", r.embedding}};
    out << j.dump() << '\n';
  }
  if (!out) throw Error(ErrorCode::IoError, "short write to " + file.string());
}

std::vector<EmbeddingRecord> read_embeddings_jsonl(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::UnreadableFile, file.string() + ": cannot open");
  std::vector<EmbeddingRecord> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      out.push_back({j.at("id").get<std::string>(), j.at("genre").get<std::string>(),
                     parse_domain(j.at("domain").get<std::string>()), j.at("embedding").get<std::vector<float>>()});
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::UnreadableFile, file.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

void write_fold_result(const std::filesystem::path& file, const FoldResult& result, const std::string& regime) {
  std::ofstream out(file, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + file.string());
  out << nlohmann::json{{"regime", regime}, {"fold_id", result.fold_id}, {"accuracy", result.accuracy},
                        {"loss", result.loss}}
             .dump(2)
      << '\n';
}

FoldResult read_fold_result(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::UnreadableFile, file.string() + ": cannot open");
  try {
    nlohmann::json j;
    in >> j;
    return {j.at("fold_id").get<int>(), j.at("accuracy").get<double>(), j.at("loss").get<double>()};
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::UnreadableFile, file.string() + ": " + e.what());
  }
}

}  // namespace synthtag
