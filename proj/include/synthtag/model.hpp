// Copyright 2026 The synthtag Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "synthtag/features.hpp"

namespace synthtag {

/// Architecture hyperparameters. Front-end shapes are the timbral kernels
/// (height x timbral_width) followed by the temporal kernels (1 x width).
struct ModelConfig {
  int n_mels = kMelBands;
  int n_classes = 10;
  int embedding_dim = 512;
  std::vector<int> timbral_heights = {38, 86};
  int timbral_width = 7;
  std::vector<int> temporal_widths = {32, 64, 128};
  std::vector<int> front_channels = {32, 32, 32, 32, 32};
  int backend_channels = 64;
  int backend_kernel = 7;
  int backend_layers = 3;

  std::size_t front_shape_count() const { return timbral_heights.size() + temporal_widths.size(); }
  int front_total_channels() const;
  /// Throws InvalidConfig.
  void validate() const;

  bool operator==(const ModelConfig&) const = default;
};

nlohmann::json to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const nlohmann::json& j);

struct Parameter {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<float> values;
  bool trainable = true;
};

/// Named parameter arrays in a fixed order.
class ParameterSet {
 public:
  std::size_t add(std::string name, std::vector<std::size_t> shape);
  std::size_t size() const { return params_.size(); }
  std::size_t scalar_count() const;
  Parameter& operator[](std::size_t i) { return params_[i]; }
  const Parameter& operator[](std::size_t i) const { return params_[i]; }
  /// Throws InvalidArgument for unknown names.
  std::size_t index_of(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::vector<Parameter> params_;
  std::map<std::string, std::size_t> index_;
};

/// Same layout as a ParameterSet, zero-initialised.
struct Gradients {
  std::vector<std::vector<float>> values;

  explicit Gradients(const ParameterSet& params);
  void zero();
  void scale(float factor);
};

/// Intermediate activations of one forward pass, kept for backward.
struct ForwardCache {
  std::size_t frames = 0;
  std::vector<float> input;   // normalised input, n_mels x T
  std::vector<float> front;   // pre-ReLU frequency maxima, channels x T
  std::vector<int> front_argmax;
  std::vector<float> front_out;  // post-ReLU concatenation
  struct Block {
    std::vector<float> conv;  // conv output, C x T
    std::vector<float> mean, rstd;
    std::vector<float> norm;  // after layer norm
    std::vector<float> out;   // after ReLU (+ residual)
  };
  std::vector<Block> blocks;
  std::vector<float> pooled;  // [max over time | mean over time]
  std::vector<int> pool_argmax;
  std::vector<float> dense;
  float dense_mean = 0.0f, dense_rstd = 0.0f;
  std::vector<float> dense_norm;
  std::vector<float> embedding;
  std::vector<float> logits;
  std::vector<float> probs;
};

struct ForwardOutput {
  std::size_t batch = 0;
  std::size_t embedding_dim = 0;
  std::size_t n_classes = 0;
  std::vector<float> embeddings;  // batch x embedding_dim
  std::vector<float> probs;       // batch x n_classes

  std::span<const float> embedding(std::size_t i) const {
    return std::span(embeddings).subspan(i * embedding_dim, embedding_dim);
  }
  std::span<const float> prob(std::size_t i) const { return std::span(probs).subspan(i * n_classes, n_classes); }
};

/// Parallel multi-shape conv front end pooled over frequency, residual 1-D
/// conv back end with layer norm, max+mean pooling over time, layer-normed
/// dense embedding and a softmax classifier.
class Model {
 public:
  Model(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }

  /// Inputs must be n_mels x T with a shared T. Throws ShapeMismatch.
  ForwardOutput forward(std::span<const MelSpectrogram> batch) const;

  /// Single input; fills `cache` for backward.
  void forward_item(const MelSpectrogram& input, ForwardCache& cache) const;

  /// Accumulates parameter gradients for one item. `grad_embedding` is the
  /// loss gradient w.r.t. the embedding from terms other than the classifier,
  /// `grad_logits` the gradient w.r.t. the pre-softmax logits. Either may be empty.
  void backward_item(const ForwardCache& cache, std::span<const float> grad_embedding,
                     std::span<const float> grad_logits, Gradients& grads) const;

  /// Re-draws the head parameters (dense, its norm, classifier) from `seed`.
  void reinitialize_head(std::uint64_t seed);

 private:
  void initialize(std::uint64_t seed, bool head_only);
  bool any_trainable_below_head() const;

  ModelConfig config_;
  ParameterSet params_;
  struct Layout {
    std::vector<std::size_t> front_w, front_b;
    std::vector<std::size_t> conv_w, conv_b, norm_g, norm_b;
    std::size_t dense_w = 0, dense_b = 0, head_norm_g = 0, head_norm_b = 0, cls_w = 0, cls_b = 0;
  } layout_;
};

Model build_model(const ModelConfig& config, std::uint64_t seed);

/// True for parameters owned by the embedding layer or the classifier.
bool is_head_parameter(const std::string& name);

/// Marks everything but the 512-unit dense layer (with its norm) and the
/// classifier as non-trainable. Idempotent.
void freeze_feature_layers(Model& model);

struct TrainingMeta {
  std::string regime;
  int epoch = 0;
  double val_loss = 0.0;
};

struct ModelCheckpoint {
  Model model;
  TrainingMeta meta;
};

/// Tar archive with index.json and params/<name>.f32 (little-endian float32).
void save_checkpoint(const Model& model, const TrainingMeta& meta, const std::filesystem::path& file);
/// Throws CorruptCheckpoint for damaged archives.
ModelCheckpoint load_checkpoint(const std::filesystem::path& file);
/// Additionally throws ConfigMismatch unless the stored config equals `expected`.
ModelCheckpoint load_checkpoint(const std::filesystem::path& file, const ModelConfig& expected);

}  // namespace synthtag
