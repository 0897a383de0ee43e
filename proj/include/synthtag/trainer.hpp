// Copyright 2026 The synthtag Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "synthtag/dataset.hpp"
#include "synthtag/losses.hpp"
#include "synthtag/model.hpp"

namespace synthtag {

enum class RegimeKind { E2eReal, E2eSynth, E2eAdd, E2eDa, Tl, Ft };

inline constexpr RegimeKind kAllRegimes[] = {RegimeKind::E2eReal, RegimeKind::E2eSynth, RegimeKind::E2eAdd,
                                             RegimeKind::E2eDa,   RegimeKind::Tl,       RegimeKind::Ft};

/// Command-line spelling: e2e-real, e2e-synth, e2e-add, e2e-da, tl, ft.
std::string_view to_string(RegimeKind kind) noexcept;
/// Table spelling: E2E-real ... FT.
std::string_view display_name(RegimeKind kind) noexcept;
/// Accepts either spelling, case-insensitively. Throws RegimeConfigError.
RegimeKind parse_regime(std::string_view text);

struct Regime {
  RegimeKind kind = RegimeKind::E2eReal;
  std::optional<std::filesystem::path> init_checkpoint;
};

struct TrainingConfig {
  std::size_t batch_size = 4;
  double learning_rate = 1e-3;
  int patience = 5;
  int max_epochs = 100;
  losses::DaConfig da;
  std::uint64_t seed = 0;
  ModelConfig model;

  /// Defaults for a regime: FT uses learning rate 1e-4.
  static TrainingConfig for_regime(RegimeKind kind);
  void validate() const;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<std::vector<float>> m;
  std::vector<std::vector<float>> v;
  long step = 0;

  explicit AdamState(const ParameterSet& params);
};

/// Bias-corrected Adam on every trainable parameter; frozen ones are untouched.
void adam_step(ParameterSet& params, const Gradients& grads, AdamState& state, double lr,
               const AdamConfig& cfg = {});

struct StopDecision {
  bool stop = false;
  int best_epoch = 0;  ///< 1-based
};

/// Stops once `patience` consecutive epochs failed to strictly lower the
/// best validation loss. Epochs are 1-based.
StopDecision early_stopping_monitor(std::span<const double> val_losses, int patience);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_acc = 0.0;
};

struct TrainingHistory {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  int stopped_epoch = 0;
};

/// CSV: epoch,train_loss,val_loss,val_acc
void write_history_csv(const std::filesystem::path& file, const TrainingHistory& history);
TrainingHistory read_history_csv(const std::filesystem::path& file);

/// Record lists for one run.
struct TrainingData {
  std::vector<TrackRecord> train;
  std::vector<TrackRecord> val;
  std::vector<TrackRecord> real_pool;  ///< real training records, for DA pairs
};

/// Builds the run's train/val lists from a real fold and/or the synthetic
/// collection. E2E-add and E2E-DA add every synthetic record to the real
/// training split; E2E-synth uses a synthetic split. Throws RegimeConfigError
/// when the regime's inputs are missing.
TrainingData make_training_data(RegimeKind kind, const FoldSplit* real_fold, const FoldSplit* synth_split,
                                std::span<const TrackRecord> synth_all = {});

using LogFn = std::function<void(const std::string&)>;

/// Owns one run's model and optimizer; exposes epoch-level control.
class Trainer {
 public:
  Trainer(const Regime& regime, const TrainingConfig& config, TrainingData data, const FeatureSource& source,
          LogFn log = {});

  Model& model() { return model_; }
  const Model& model() const { return model_; }
  const TrainingData& data() const { return data_; }

  /// One optimizer step on a batch; returns the batch objective.
  double train_step(const Batch& batch);
  /// One shuffled pass over the training list followed by validation.
  EpochRecord run_epoch();
  int epochs_done() const { return epoch_; }

 private:
  Regime regime_;
  TrainingConfig config_;
  TrainingData data_;
  const FeatureSource& source_;
  LogFn log_;
  Model model_;
  AdamState adam_;
  Gradients grads_;
  Rng data_rng_;
  Rng pair_rng_;
  std::optional<RealPool> pool_;
  int epoch_ = 0;
};

struct TrainResult {
  ModelCheckpoint best;
  TrainingHistory history;
};

/// Full run with early stopping on validation cross-entropy; returns the
/// best-validation-loss epoch's weights.
TrainResult train(const Regime& regime, const TrainingConfig& config, TrainingData data, const FeatureSource& source,
                  LogFn log = {});

}  // namespace synthtag
