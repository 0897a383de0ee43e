// Copyright 2026 The synthtag Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <random>

#include "synthtag/error.hpp"
#include "synthtag/evaluation.hpp"
#include "synthtag/trainer.hpp"
#include "test_support.hpp"

using namespace synthtag;
using synthtag::testing::make_toy_corpus;
using synthtag::testing::TempDir;
using synthtag::testing::tiny_config;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::IoError;
}

TrainingConfig toy_config(RegimeKind kind, int epochs = 3) {
  auto c = TrainingConfig::for_regime(kind);
  c.model = tiny_config(3);
  c.max_epochs = epochs;
  c.batch_size = 4;
  c.seed = 7;
  return c;
}

// Real fold from half of the toy corpus' real records.
FoldSplit toy_fold(const synthtag::testing::ToyCorpus& toy) {
  FoldSplit f;
  for (std::size_t i = 0; i < toy.real.size(); ++i) (i % 3 == 0 ? f.val : f.train).push_back(toy.real[i]);
  return f;
}

bool same_params(const Model& a, const Model& b) {
  for (std::size_t i = 0; i < a.params().size(); ++i)
    if (a.params()[i].values != b.params()[i].values) return false;
  return true;
}

}  // namespace

TEST_CASE("Adam: zero gradient is a no-op, first step moves by lr against the gradient sign") {
  ParameterSet ps;
  ps.add("a.weight", {3});
  ps.add("frozen.weight", {2});
  ps[0].values = {1.0f, -2.0f, 0.5f};
  ps[1].values = {4.0f, 4.0f};
  ps[1].trainable = false;
  AdamState st(ps);
  Gradients g(ps);
  adam_step(ps, g, st, 1e-3);
  CHECK(ps[0].values == std::vector<float>{1.0f, -2.0f, 0.5f});

  CHECK(st.step == 1);

  AdamState fresh(ps);
  g.values[0] = {0.3f, -5.0f, 1e-3f};
  g.values[1] = {1.0f, 1.0f};
  adam_step(ps, g, fresh, 1e-3);
  // m_hat = g and v_hat = g^2 after bias correction, so the step is lr * g/|g|.
  CHECK(ps[0].values[0] == doctest::Approx(1.0 - 1e-3).epsilon(1e-5));
  CHECK(ps[0].values[1] == doctest::Approx(-2.0 + 1e-3).epsilon(1e-5));
  CHECK(ps[0].values[2] == doctest::Approx(0.5 - 1e-3).epsilon(1e-4));
  CHECK(ps[1].values == std::vector<float>{4.0f, 4.0f});

  // Second identical step: t = 2 bias correction gives the same unit step.
  adam_step(ps, g, fresh, 1e-3);
  CHECK(ps[0].values[0] == doctest::Approx(1.0 - 2e-3).epsilon(1e-5));
}

TEST_CASE("early stopping examples") {
  const std::vector<double> a = {1.0, 0.9, 0.95, 0.96, 0.97, 0.98, 0.99};
  auto d = early_stopping_monitor(std::span(a).first(6), 5);
  CHECK_FALSE(d.stop);
  d = early_stopping_monitor(a, 5);
  CHECK(d.stop);
  CHECK(d.best_epoch == 2);

  const std::vector<double> flat(6, 1.0);
  CHECK_FALSE(early_stopping_monitor(std::span(flat).first(5), 5).stop);
  d = early_stopping_monitor(flat, 5);
  CHECK(d.stop);
  CHECK(d.best_epoch == 1);

  // A new best resets the counter.
  const std::vector<double> reset = {1.0, 1.1, 1.1, 1.1, 1.1, 0.5, 0.6, 0.6, 0.6, 0.6};
  d = early_stopping_monitor(reset, 5);
  CHECK_FALSE(d.stop);
  CHECK(d.best_epoch == 6);

  std::vector<double> falling;
  for (int i = 0; i < 100; ++i) {
    falling.push_back(10.0 - 0.05 * i);
    REQUIRE_FALSE(early_stopping_monitor(falling, 5).stop);
  }
  CHECK(early_stopping_monitor(falling, 5).best_epoch == 100);
}

TEST_CASE("early stopping property: stop exactly when the tail since the best reaches patience") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    const int patience = 1 + static_cast<int>(rng() % 6);
    std::vector<double> losses(1 + rng() % 30);
    for (auto& l : losses) l = std::round(u(rng) * 8.0) / 8.0;  // coarse values force ties
    const auto d = early_stopping_monitor(losses, patience);
    std::size_t best = 0;
    for (std::size_t i = 1; i < losses.size(); ++i)
      if (losses[i] < losses[best]) best = i;
    REQUIRE(d.best_epoch == static_cast<int>(best) + 1);
    REQUIRE(d.stop == (static_cast<int>(losses.size() - 1 - best) >= patience));
  }
}

TEST_CASE("regime names") {
  for (RegimeKind k : kAllRegimes) {
    CHECK(parse_regime(to_string(k)) == k);
    CHECK(parse_regime(display_name(k)) == k);
  }
  CHECK(parse_regime("E2E_DA") == RegimeKind::E2eDa);
  CHECK(display_name(RegimeKind::E2eAdd) == "E2E-add");
  CHECK(code_of([] { parse_regime("e2e-fancy"); }) == ErrorCode::RegimeConfigError);
  CHECK(TrainingConfig::for_regime(RegimeKind::Ft).learning_rate == 1e-4);
  CHECK(TrainingConfig::for_regime(RegimeKind::Tl).learning_rate == 1e-3);
  CHECK(TrainingConfig::for_regime(RegimeKind::E2eReal).batch_size == 4);
  CHECK(TrainingConfig::for_regime(RegimeKind::E2eReal).patience == 5);
}

TEST_CASE("training lists per regime") {
  const auto toy = make_toy_corpus(3, 6, 4, 1);
  const FoldSplit fold = toy_fold(toy);
  const FoldSplit synth{0, {toy.synth.begin(), toy.synth.end() - 2}, {toy.synth.end() - 2, toy.synth.end()}};

  const auto add = make_training_data(RegimeKind::E2eAdd, &fold, nullptr, toy.synth);
  CHECK(add.train.size() == fold.train.size() + toy.synth.size());
  CHECK(add.val == fold.val);
  CHECK(add.real_pool == fold.train);
  const auto s = make_training_data(RegimeKind::E2eSynth, nullptr, &synth);
  CHECK(s.train == synth.train);
  CHECK(s.val == synth.val);
  const auto da = make_training_data(RegimeKind::E2eDa, &fold, &synth);
  CHECK(da.train.size() == fold.train.size() + toy.synth.size());

  CHECK(code_of([&] { make_training_data(RegimeKind::E2eSynth, &fold, nullptr); }) == ErrorCode::RegimeConfigError);
  CHECK(code_of([&] { make_training_data(RegimeKind::E2eDa, &fold, nullptr); }) == ErrorCode::RegimeConfigError);
  CHECK(code_of([&] { make_training_data(RegimeKind::Tl, nullptr, &synth); }) == ErrorCode::RegimeConfigError);
}

TEST_CASE("checkpoint requirements") {
  const auto toy = make_toy_corpus(3, 6, 0, 2);
  const FoldSplit fold = toy_fold(toy);
  const auto data = make_training_data(RegimeKind::E2eReal, &fold, nullptr);
  CHECK(code_of([&] { Trainer(Regime{RegimeKind::Tl, {}}, toy_config(RegimeKind::Tl), data, toy.source); }) ==
        ErrorCode::RegimeConfigError);
  CHECK(code_of([&] {
          Trainer(Regime{RegimeKind::E2eReal, "x.tar"}, toy_config(RegimeKind::E2eReal), data, toy.source);
        }) == ErrorCode::RegimeConfigError);
  TrainingData real_only = data;
  CHECK(code_of([&] { Trainer(Regime{RegimeKind::E2eAdd, {}}, toy_config(RegimeKind::E2eAdd), real_only, toy.source); }) ==
        ErrorCode::RegimeConfigError);
}

TEST_CASE("history invariants and best-epoch weights") {
  const auto toy = make_toy_corpus(3, 9, 0, 3);
  const FoldSplit fold = toy_fold(toy);
  auto cfg = toy_config(RegimeKind::E2eReal, 8);
  cfg.patience = 2;
  std::vector<std::string> lines;
  const auto res = train(Regime{RegimeKind::E2eReal, {}}, cfg, make_training_data(RegimeKind::E2eReal, &fold, nullptr),
                         toy.source, [&](const std::string& l) { lines.push_back(l); });
  const auto& h = res.history;
  REQUIRE(!h.epochs.empty());
  CHECK(h.epochs.size() <= 8);
  for (std::size_t i = 0; i < h.epochs.size(); ++i) {
    CHECK(h.epochs[i].epoch == static_cast<int>(i) + 1);
    CHECK(std::isfinite(h.epochs[i].train_loss));
    CHECK(h.epochs[i].val_acc >= 0.0);
    CHECK(h.epochs[i].val_acc <= 1.0);
  }
  CHECK(h.stopped_epoch == static_cast<int>(h.epochs.size()));
  std::size_t best = 0;
  for (std::size_t i = 1; i < h.epochs.size(); ++i)
    if (h.epochs[i].val_loss < h.epochs[best].val_loss) best = i;
  CHECK(h.best_epoch == static_cast<int>(best) + 1);
  CHECK(res.best.meta.epoch == h.best_epoch);
  CHECK(res.best.meta.regime == "e2e-real");
  CHECK(res.best.meta.val_loss == h.epochs[best].val_loss);
  // The returned weights reproduce the best epoch's validation loss.
  CHECK(evaluate(res.best.model, fold.val, toy.source).loss == doctest::Approx(h.epochs[best].val_loss).epsilon(1e-9));
  CHECK(lines.front().starts_with("epoch 1 train_loss="));

  TempDir dir;
  write_history_csv(dir / "h.csv", h);
  const auto back = read_history_csv(dir / "h.csv");
  REQUIRE(back.epochs.size() == h.epochs.size());
  for (std::size_t i = 0; i < h.epochs.size(); ++i) {
    CHECK(back.epochs[i].val_loss == h.epochs[i].val_loss);
    CHECK(back.epochs[i].train_loss == h.epochs[i].train_loss);
  }
}

TEST_CASE("runs are reproducible from the seed") {
  const auto toy = make_toy_corpus(3, 6, 4, 4);
  const FoldSplit fold = toy_fold(toy);
  const auto data = make_training_data(RegimeKind::E2eDa, &fold, nullptr, toy.synth);
  auto cfg = toy_config(RegimeKind::E2eDa, 2);
  const auto a = train(Regime{RegimeKind::E2eDa, {}}, cfg, data, toy.source);
  const auto b = train(Regime{RegimeKind::E2eDa, {}}, cfg, data, toy.source);
  CHECK(same_params(a.best.model, b.best.model));
  for (std::size_t i = 0; i < a.history.epochs.size(); ++i)
    CHECK(a.history.epochs[i].train_loss == b.history.epochs[i].train_loss);
  cfg.seed = 8;
  const auto c = train(Regime{RegimeKind::E2eDa, {}}, cfg, data, toy.source);
  CHECK_FALSE(same_params(a.best.model, c.best.model));
}

TEST_CASE("DA with gamma 0 reproduces ADD exactly") {
  const auto toy = make_toy_corpus(3, 6, 4, 5);
  const FoldSplit fold = toy_fold(toy);
  auto cfg_add = toy_config(RegimeKind::E2eAdd, 3);
  auto cfg_da = toy_config(RegimeKind::E2eDa, 3);
  cfg_da.da.gamma = 0.0;
  for (auto pairing : {losses::Pairing::Single, losses::Pairing::AllPairs}) {
    cfg_da.da.pairing = pairing;
    const auto add = train(Regime{RegimeKind::E2eAdd, {}}, cfg_add,
                           make_training_data(RegimeKind::E2eAdd, &fold, nullptr, toy.synth), toy.source);
    const auto da = train(Regime{RegimeKind::E2eDa, {}}, cfg_da,
                          make_training_data(RegimeKind::E2eDa, &fold, nullptr, toy.synth), toy.source);
    CHECK(same_params(add.best.model, da.best.model));
    REQUIRE(add.history.epochs.size() == da.history.epochs.size());
    for (std::size_t i = 0; i < add.history.epochs.size(); ++i) {
      CHECK(add.history.epochs[i].train_loss == da.history.epochs[i].train_loss);
      CHECK(add.history.epochs[i].val_loss == da.history.epochs[i].val_loss);
    }
  }
}

TEST_CASE("DA with gamma above 0 changes training") {
  const auto toy = make_toy_corpus(3, 6, 4, 6);
  const FoldSplit fold = toy_fold(toy);
  auto cfg = toy_config(RegimeKind::E2eDa, 1);
  const auto data = make_training_data(RegimeKind::E2eDa, &fold, nullptr, toy.synth);
  const auto g0 = [&] {
    auto c = cfg;
    c.da.gamma = 0.0;
    return train(Regime{RegimeKind::E2eDa, {}}, c, data, toy.source);
  }();
  const auto g7 = train(Regime{RegimeKind::E2eDa, {}}, cfg, data, toy.source);
  CHECK_FALSE(same_params(g0.best.model, g7.best.model));
}

TEST_CASE("TL trains only the head, FT trains everything") {
  TempDir dir;
  const auto toy = make_toy_corpus(3, 6, 6, 7);
  const FoldSplit synth{0, toy.synth, {toy.synth.begin(), toy.synth.begin() + 3}};
  const auto pre = train(Regime{RegimeKind::E2eSynth, {}}, toy_config(RegimeKind::E2eSynth, 2),
                         make_training_data(RegimeKind::E2eSynth, nullptr, &synth), toy.source);
  save_checkpoint(pre.best.model, pre.best.meta, dir / "synth.tar");
  const FoldSplit fold = toy_fold(toy);
  const auto real = make_training_data(RegimeKind::Tl, &fold, nullptr);

  const auto tl = train(Regime{RegimeKind::Tl, dir / "synth.tar"}, toy_config(RegimeKind::Tl, 2), real, toy.source);
  const auto ft = train(Regime{RegimeKind::Ft, dir / "synth.tar"}, toy_config(RegimeKind::Ft, 2), real, toy.source);
  for (std::size_t i = 0; i < pre.best.model.params().size(); ++i) {
    const auto& name = pre.best.model.params()[i].name;
    const auto& before = pre.best.model.params()[i].values;
    if (is_head_parameter(name)) {
      // The head is re-drawn before training, so it differs either way.
      CHECK(tl.best.model.params()[i].values != before);
      CHECK(tl.best.model.params()[i].trainable);
    } else {
      CHECK(tl.best.model.params()[i].values == before);
      CHECK_FALSE(tl.best.model.params()[i].trainable);
    }
    if (name.ends_with(".weight")) CHECK(ft.best.model.params()[i].values != before);
  }
  // TL head re-drawn from the run seed.
  Model expect = pre.best.model;
  expect.reinitialize_head(toy_config(RegimeKind::Tl).seed);
  Trainer t(Regime{RegimeKind::Tl, dir / "synth.tar"}, toy_config(RegimeKind::Tl), real, toy.source);
  CHECK(same_params(t.model(), expect));

  auto wrong = toy_config(RegimeKind::Ft);
  wrong.model.embedding_dim = 5;
  CHECK(code_of([&] { Trainer(Regime{RegimeKind::Ft, dir / "synth.tar"}, wrong, real, toy.source); }) ==
        ErrorCode::ConfigMismatch);
}

TEST_CASE("invalid training settings") {
  auto c = toy_config(RegimeKind::E2eDa);
  c.da.gamma = 1.2;
  CHECK(code_of([&] { c.validate(); }) == ErrorCode::InvalidGamma);
  c = toy_config(RegimeKind::E2eReal);
  c.batch_size = 0;
  CHECK(code_of([&] { c.validate(); }) == ErrorCode::InvalidConfig);
}
