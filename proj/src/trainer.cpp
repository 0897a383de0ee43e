// Copyright 2026 The synthtag Authors
// SPDX-License-Identifier: Apache-2.0

#include "synthtag/trainer.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include "synthtag/csv.hpp"
#include "synthtag/error.hpp"
#include "synthtag/evaluation.hpp"

namespace synthtag {
namespace {

constexpr std::uint64_t kPairStreamSalt = 0x9E3779B97F4A7C15ull;

bool needs_checkpoint(RegimeKind k) { return k == RegimeKind::Tl || k == RegimeKind::Ft; }

Model make_model(const Regime& regime, const TrainingConfig& config) {
  if (needs_checkpoint(regime.kind)) {
    if (!regime.init_checkpoint) {
      throw Error(ErrorCode::RegimeConfigError, std::string(display_name(regime.kind)) + " requires an init checkpoint");
    }
    Model model = load_checkpoint(*regime.init_checkpoint, config.model).model;
    for (auto& p : model.params()) p.trainable = true;
    if (regime.kind == RegimeKind::Tl) {
      freeze_feature_layers(model);
      model.reinitialize_head(config.seed);
    }
    return model;
  }
  if (regime.init_checkpoint) {
    throw Error(ErrorCode::RegimeConfigError,
                std::string(display_name(regime.kind)) + " trains from scratch and takes no init checkpoint");
  }
  return build_model(config.model, config.seed);
}

}  // namespace

std::string_view to_string(RegimeKind kind) noexcept {
  switch (kind) {
    case RegimeKind::E2eReal: return "e2e-real";
    case RegimeKind::E2eSynth: return "e2e-synth";
    case RegimeKind::E2eAdd: return "e2e-add";
    case RegimeKind::E2eDa: return "e2e-da";
    case RegimeKind::Tl: return "tl";
    case RegimeKind::Ft: return "ft";
  }
  return "?";
}

std::string_view display_name(RegimeKind kind) noexcept {
  switch (kind) {
    case RegimeKind::E2eReal: return "E2E-real";
    case RegimeKind::E2eSynth: return "E2E-synth";
    case RegimeKind::E2eAdd: return "E2E-add";
    case RegimeKind::E2eDa: return "E2E-DA";
    case RegimeKind::Tl: return "TL";
    case RegimeKind::Ft: return "FT";
  }
  return "?";
}

RegimeKind parse_regime(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  std::replace(lower.begin(), lower.end(), '_', '-');
  for (RegimeKind k : kAllRegimes) {
    std::string disp(display_name(k));
    std::transform(disp.begin(), disp.end(), disp.begin(), [](unsigned char c) { return std::tolower(c); });
    if (lower == to_string(k) || lower == disp) return k;
  }
  throw Error(ErrorCode::RegimeConfigError, "unknown regime '" + std::string(text) + "'");
}

TrainingConfig TrainingConfig::for_regime(RegimeKind kind) {
  TrainingConfig c;
  if (kind == RegimeKind::Ft) c.learning_rate = 1e-4;
  return c;
}

void TrainingConfig::validate() const {
  if (!(learning_rate > 0.0)) throw Error(ErrorCode::InvalidConfig, "learning_rate must be positive");
  if (patience < 1) throw Error(ErrorCode::InvalidConfig, "patience must be at least 1");
  if (max_epochs < 1) throw Error(ErrorCode::InvalidConfig, "max_epochs must be at least 1");
  if (batch_size < 1) throw Error(ErrorCode::InvalidConfig, "batch_size must be positive");
  da.validate();
  model.validate();
}

AdamState::AdamState(const ParameterSet& params) {
  for (const auto& p : params) {
    m.emplace_back(p.values.size(), 0.0f);
    v.emplace_back(p.values.size(), 0.0f);
  }
}

void adam_step(ParameterSet& params, const Gradients& grads, AdamState& state, double lr, const AdamConfig& cfg) {
  if (grads.values.size() != params.size() || state.m.size() != params.size()) {
    throw Error(ErrorCode::ShapeMismatch, "parameter, gradient and optimizer state layouts differ");
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  const auto b1 = static_cast<float>(cfg.beta1), b2 = static_cast<float>(cfg.beta2);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = params[k];
    if (!p.trainable) continue;
    const auto& g = grads.values[k];
    if (g.size() != p.values.size()) throw Error(ErrorCode::ShapeMismatch, "gradient size differs for " + p.name);
    auto& m = state.m[k];
    auto& v = state.v[k];
    const auto n = static_cast<std::ptrdiff_t>(p.values.size());
#pragma omp parallel for schedule(static) if (n > 65536)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      const auto j = static_cast<std::size_t>(i);
      m[j] = b1 * m[j] + (1.0f - b1) * g[j];
      v[j] = b2 * v[j] + (1.0f - b2) * g[j] * g[j];
      const double m_hat = m[j] / bc1;
      const double v_hat = v[j] / bc2;
      p.values[j] -= static_cast<float>(lr * m_hat / (std::sqrt(v_hat) + cfg.eps));
    }
  }
}

StopDecision early_stopping_monitor(std::span<const double> val_losses, int patience) {
  if (val_losses.empty()) throw Error(ErrorCode::InvalidArgument, "no epochs recorded");
  if (patience < 1) throw Error(ErrorCode::InvalidArgument, "patience must be at least 1");
  std::size_t best = 0;
  for (std::size_t i = 1; i < val_losses.size(); ++i) {
    if (val_losses[i] < val_losses[best]) best = i;
  }
  const auto since_best = static_cast<int>(val_losses.size() - 1 - best);
  return {since_best >= patience, static_cast<int>(best) + 1};
}

void write_history_csv(const std::filesystem::path& file, const TrainingHistory& history) {
  std::vector<csv::Row> rows{{"epoch", "train_loss", "val_loss", "val_acc"}};
  for (const auto& e : history.epochs) {
    rows.push_back({std::to_string(e.epoch), csv::format_number(e.train_loss), csv::format_number(e.val_loss),
                    csv::format_number(e.val_acc)});
  }
  csv::write_file(file, rows);
}

TrainingHistory read_history_csv(const std::filesystem::path& file) {
  const auto rows = csv::read_file(file);
  TrainingHistory h;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != 4) throw Error(ErrorCode::UnreadableFile, file.string() + ": malformed history row");
    h.epochs.push_back({std::stoi(rows[i][0]), std::stod(rows[i][1]), std::stod(rows[i][2]), std::stod(rows[i][3])});
  }
  if (!h.epochs.empty()) {
    std::vector<double> losses;
    for (const auto& e : h.epochs) losses.push_back(e.val_loss);
    h.best_epoch = early_stopping_monitor(losses, 1).best_epoch;
    h.stopped_epoch = h.epochs.back().epoch;
  }
  return h;
}

TrainingData make_training_data(RegimeKind kind, const FoldSplit* real_fold, const FoldSplit* synth_split,
                                std::span<const TrackRecord> synth_all) {
  auto require = [&](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::RegimeConfigError, std::string(display_name(kind)) + " requires " + what);
  };
  TrainingData d;
  switch (kind) {
    case RegimeKind::E2eSynth:
      require(synth_split != nullptr, "a synthetic split");
      d.train = synth_split->train;
      d.val = synth_split->val;
      break;
    case RegimeKind::E2eAdd:
    case RegimeKind::E2eDa: {
      require(real_fold != nullptr, "a real fold");
      require(synth_split != nullptr || !synth_all.empty(), "synthetic records");
      d.train = real_fold->train;
      d.val = real_fold->val;
      d.real_pool = real_fold->train;
      if (!synth_all.empty()) {
        d.train.insert(d.train.end(), synth_all.begin(), synth_all.end());
      } else {
        d.train.insert(d.train.end(), synth_split->train.begin(), synth_split->train.end());
        d.train.insert(d.train.end(), synth_split->val.begin(), synth_split->val.end());
      }
      break;
    }
    case RegimeKind::E2eReal:
    case RegimeKind::Tl:
    case RegimeKind::Ft:
      require(real_fold != nullptr, "a real fold");
      d.train = real_fold->train;
      d.val = real_fold->val;
      break;
  }
  require(!d.train.empty(), "a non-empty training list");
  require(!d.val.empty(), "a non-empty validation list");
  return d;
}

Trainer::Trainer(const Regime& regime, const TrainingConfig& config, TrainingData data, const FeatureSource& source,
                 LogFn log)
    : regime_(regime),
      config_(config),
      data_(std::move(data)),
      source_(source),
      log_(std::move(log)),
      model_(make_model(regime, config)),
      adam_(model_.params()),
      grads_(model_.params()),
      data_rng_(config.seed),
      pair_rng_(config.seed ^ kPairStreamSalt) {
  config_.validate();
  if (data_.train.empty() || data_.val.empty()) {
    throw Error(ErrorCode::RegimeConfigError, "training and validation lists must be non-empty");
  }
  const bool has_real = std::any_of(data_.train.begin(), data_.train.end(),
                                    [](const TrackRecord& r) { return r.domain == Domain::Real; });
  const bool has_synth = std::any_of(data_.train.begin(), data_.train.end(),
                                     [](const TrackRecord& r) { return r.domain == Domain::Synthetic; });
  if ((regime_.kind == RegimeKind::E2eAdd || regime_.kind == RegimeKind::E2eDa) && !(has_real && has_synth)) {
    throw Error(ErrorCode::RegimeConfigError, std::string(display_name(regime_.kind)) +
                                                  " requires both real and synthetic training records");
  }
  if (regime_.kind == RegimeKind::E2eDa) {
    if (data_.real_pool.empty()) {
      for (const auto& r : data_.train)
        if (r.domain == Domain::Real) data_.real_pool.push_back(r);
    }
    pool_.emplace(data_.real_pool);
  }
}

double Trainer::train_step(const Batch& batch) {
  if (batch.empty()) return 0.0;
  const bool da = regime_.kind == RegimeKind::E2eDa;
  const double gamma = da ? config_.da.gamma : 0.0;
  const auto E = static_cast<std::size_t>(model_.config().embedding_dim);
  const auto N = static_cast<std::size_t>(model_.config().n_classes);
  const std::size_t B = batch.size();

  std::vector<ForwardCache> caches(B);
  std::vector<float> probs(B * N);
  std::vector<int> labels(B);
  for (std::size_t i = 0; i < B; ++i) {
    model_.forward_item(batch[i].mel, caches[i]);
    std::copy(caches[i].probs.begin(), caches[i].probs.end(), probs.begin() + static_cast<std::ptrdiff_t>(i * N));
    labels[i] = batch[i].label;
  }
  const double l_cls = losses::cross_entropy(probs, labels, N);

  grads_.zero();
  std::vector<std::vector<float>> d_emb(B, std::vector<float>(E, 0.0f));
  double objective = l_cls;

  // Auxiliary real partners: forward caches and embedding gradients.
  std::vector<ForwardCache> aux_caches;
  std::vector<std::vector<float>> aux_grads;

  if (da) {
    std::vector<std::size_t> synth_idx;
    for (std::size_t i = 0; i < B; ++i)
      if (batch[i].domain == Domain::Synthetic) synth_idx.push_back(i);

    double l_sa = 0.0;
    if (!synth_idx.empty() && config_.da.pairing == losses::Pairing::Single) {
      const DaPairBatch pairs = sample_da_pairs(batch, *pool_, pair_rng_, source_);
      const std::size_t S = pairs.synth_index.size();
      aux_caches.resize(2 * S);
      aux_grads.assign(2 * S, std::vector<float>(E, 0.0f));
      for (std::size_t s = 0; s < S; ++s) {
        model_.forward_item(pairs.pos_real[s].mel, aux_caches[s]);
        model_.forward_item(pairs.neg_real[s].mel, aux_caches[S + s]);
      }
      std::vector<losses::PairEmbeddings<float>> emb(S);
      std::vector<losses::PairGradients<float>> grad(S);
      for (std::size_t s = 0; s < S; ++s) {
        const std::size_t i = pairs.synth_index[s];
        emb[s] = {caches[i].embedding, aux_caches[s].embedding, aux_caches[S + s].embedding};
        grad[s] = {d_emb[i], aux_grads[s], aux_grads[S + s]};
      }
      l_sa = losses::semantic_alignment_loss<float>(emb, static_cast<float>(config_.da.margin), config_.da.hinge);
      losses::semantic_alignment_gradient<float>(emb, static_cast<float>(config_.da.margin), config_.da.hinge,
                                                 static_cast<float>(gamma), grad);
    } else if (!synth_idx.empty()) {
      // All-pairs: embed the whole real pool with training crops.
      std::vector<const TrackRecord*> ptrs;
      for (const auto& r : pool_->records()) ptrs.push_back(&r);
      const Batch real = load_items(ptrs, BatchMode::Train, pair_rng_, source_);
      aux_caches.resize(real.size());
      aux_grads.assign(real.size(), std::vector<float>(E, 0.0f));
      std::vector<std::span<const float>> s_emb, r_emb;
      std::vector<std::span<float>> s_grad, r_grad;
      std::vector<int> s_lab, r_lab;
      for (std::size_t j = 0; j < real.size(); ++j) {
        model_.forward_item(real[j].mel, aux_caches[j]);
        r_emb.emplace_back(aux_caches[j].embedding);
        r_grad.emplace_back(aux_grads[j]);
        r_lab.push_back(real[j].label);
      }
      for (std::size_t i : synth_idx) {
        s_emb.emplace_back(caches[i].embedding);
        s_grad.emplace_back(d_emb[i]);
        s_lab.push_back(batch[i].label);
      }
      l_sa = losses::semantic_alignment_loss_all_pairs<float>(s_emb, s_lab, r_emb, r_lab,
                                                              static_cast<float>(config_.da.margin), config_.da.hinge,
                                                              s_grad, r_grad, static_cast<float>(gamma));
    }
    objective = losses::combined_loss(l_sa, l_cls, gamma);
  }

  const auto cls_weight = static_cast<float>((1.0 - gamma) / static_cast<double>(B));
  std::vector<float> d_logits(N);
  for (std::size_t i = 0; i < B; ++i) {
    losses::cross_entropy_logit_grad(caches[i].probs, labels[i], cls_weight, d_logits);
    model_.backward_item(caches[i], d_emb[i], d_logits, grads_);
  }
  for (std::size_t j = 0; j < aux_caches.size(); ++j) {
    model_.backward_item(aux_caches[j], aux_grads[j], {}, grads_);
  }
  adam_step(model_.params(), grads_, adam_, config_.learning_rate);
  return objective;
}

EpochRecord Trainer::run_epoch() {
  BatchIterator it(data_.train, config_.batch_size, BatchMode::Train, data_rng_, source_);
  double loss_sum = 0.0;
  std::size_t items = 0;
  while (auto batch = it.next()) {
    loss_sum += train_step(*batch) * static_cast<double>(batch->size());
    items += batch->size();
  }
  ++epoch_;
  const FoldResult val = evaluate(model_, data_.val, source_);
  EpochRecord rec{epoch_, loss_sum / static_cast<double>(items), val.loss, val.accuracy};
  if (log_) {
    std::ostringstream line;
    line.precision(6);
    line << "epoch " << rec.epoch << " train_loss=" << rec.train_loss << " val_loss=" << rec.val_loss
         << " val_acc=" << rec.val_acc;
    log_(line.str());
  }
  return rec;
}

TrainResult train(const Regime& regime, const TrainingConfig& config, TrainingData data, const FeatureSource& source,
                  LogFn log) {
  Trainer trainer(regime, config, std::move(data), source, log);
  TrainingHistory history;
  std::vector<double> val_losses;
  std::vector<std::vector<float>> best_values;
  double best_loss = 0.0;
  for (int e = 0; e < config.max_epochs; ++e) {
    const EpochRecord rec = trainer.run_epoch();
    history.epochs.push_back(rec);
    val_losses.push_back(rec.val_loss);
    const StopDecision d = early_stopping_monitor(val_losses, config.patience);
    if (d.best_epoch == rec.epoch) {
      best_values.clear();
      for (const auto& p : trainer.model().params()) best_values.push_back(p.values);
      best_loss = rec.val_loss;
    }
    history.best_epoch = d.best_epoch;
    history.stopped_epoch = rec.epoch;
    if (d.stop) {
      if (log) log("early stop after epoch " + std::to_string(rec.epoch) + ", best epoch " + std::to_string(d.best_epoch));
      break;
    }
  }
  Model best = trainer.model();
  for (std::size_t k = 0; k < best.params().size(); ++k) best.params()[k].values = best_values[k];
  return {{std::move(best), {std::string(to_string(regime.kind)), history.best_epoch, best_loss}}, std::move(history)};
}

}  // namespace synthtag
