// Copyright 2026 The synthtag Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <regex>

#include "synthtag/error.hpp"
#include "synthtag/evaluation.hpp"
#include "synthtag/report.hpp"
#include "synthtag/tsne.hpp"
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

std::size_t count_of(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (std::size_t pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

// Mean silhouette of a 2-D labelled embedding, written out directly.
double silhouette(const std::vector<Point2>& pts, const std::vector<int>& labels) {
  double total = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    std::map<int, std::pair<double, int>> by;
    for (std::size_t j = 0; j < pts.size(); ++j) {
      if (i == j) continue;
      const double d = std::hypot(pts[i][0] - pts[j][0], pts[i][1] - pts[j][1]);
      by[labels[j]].first += d;
      by[labels[j]].second += 1;
    }
    const double a = by[labels[i]].first / by[labels[i]].second;
    double b = 1e300;
    for (const auto& [l, s] : by)
      if (l != labels[i]) b = std::min(b, s.first / s.second);
    total += (b - a) / std::max(a, b);
  }
  return total / static_cast<double>(pts.size());
}

std::vector<std::vector<float>> clusters(int k, int per, std::size_t dim, std::mt19937_64& rng,
                                         std::vector<int>* labels) {
  std::normal_distribution<float> n(0.0f, 1.0f);
  std::vector<std::vector<float>> rows;
  for (int c = 0; c < k; ++c) {
    std::vector<float> center(dim);
    for (auto& v : center) v = 8.0f * n(rng);
    for (int i = 0; i < per; ++i) {
      auto r = center;
      for (auto& v : r) v += n(rng);
      rows.push_back(r);
      if (labels) labels->push_back(c);
    }
  }
  return rows;
}

}  // namespace

TEST_CASE("evaluation matches a direct forward pass") {
  const auto toy = make_toy_corpus(3, 5, 0, 1);
  const Model m(tiny_config(3), 3);
  const auto res = evaluate(m, toy.real, toy.source, 2, 4);
  CHECK(res.fold_id == 2);
  double loss = 0.0;
  int correct = 0;
  for (const auto& r : toy.real) {
    const std::vector<MelSpectrogram> one = {toy.source.features(r, CropMode::Center, 0)};
    const auto out = m.forward(one);
    const auto p = out.prob(0);
    loss -= std::log(std::max(static_cast<double>(p[static_cast<std::size_t>(r.label())]), 1e-12));
    correct += (std::max_element(p.begin(), p.end()) - p.begin()) == r.label();
  }
  CHECK(res.loss == doctest::Approx(loss / 15.0).epsilon(1e-6));
  CHECK(res.accuracy == doctest::Approx(correct / 15.0));
  CHECK(code_of([&] { evaluate(m, std::span<const TrackRecord>{}, toy.source); }) == ErrorCode::EmptySplit);
}

TEST_CASE("a uniform classifier scores ln N") {
  const auto toy = make_toy_corpus(3, 4, 0, 2);
  Model m(tiny_config(3), 4);
  auto& w = m.params()[m.params().index_of("head.classifier.weight")].values;
  std::fill(w.begin(), w.end(), 0.0f);
  const auto res = evaluate(m, toy.real, toy.source);
  CHECK(res.loss == doctest::Approx(std::log(3.0)).epsilon(1e-6));
}

TEST_CASE("fold aggregation") {
  const std::vector<FoldResult> r = {{0, 0.4, 1.0}, {1, 0.5, 2.0}, {2, 0.6, 3.0}};
  const auto a = aggregate_folds(r);
  CHECK(a.folds == 3);
  CHECK(a.accuracy.mean == doctest::Approx(0.5));
  CHECK(a.accuracy.std == doctest::Approx(std::sqrt(0.02 / 3.0)));
  CHECK(a.accuracy.std == doctest::Approx(0.08165).epsilon(1e-4));
  CHECK(a.loss.mean == doctest::Approx(2.0));
  const std::vector<FoldResult> same(3, {0, 0.7, 1.5});
  CHECK(aggregate_folds(same).accuracy.std == 0.0);
  CHECK(code_of([&] { aggregate_folds(std::span(r).first(1)); }) == ErrorCode::TooFewFolds);

  TempDir dir;
  write_fold_result(dir / "r.json", {1, 0.625, 1.125}, "tl");
  const auto back = read_fold_result(dir / "r.json");
  CHECK(back.fold_id == 1);
  CHECK(back.accuracy == 0.625);
  CHECK(back.loss == 1.125);
}

TEST_CASE("embedding export") {
  const auto toy = make_toy_corpus(3, 2, 2, 3);
  std::vector<TrackRecord> recs = toy.real;
  recs.insert(recs.end(), toy.synth.begin(), toy.synth.end());
  const Model m(tiny_config(3), 5);
  const auto e = extract_embeddings(m, recs, toy.source);
  REQUIRE(e.size() == recs.size());
  CHECK(e == extract_embeddings(m, recs, toy.source));
  for (std::size_t i = 0; i < recs.size(); ++i) {
    CHECK(e[i].genre == recs[i].genre);
    CHECK(e[i].domain == recs[i].domain);
    CHECK(e[i].embedding.size() == 8);
  }
  const std::vector<MelSpectrogram> one = {toy.source.features(recs[0], CropMode::Center, 0)};
  const auto out = m.forward(one);
  CHECK(std::equal(e[0].embedding.begin(), e[0].embedding.end(), out.embedding(0).begin()));

  TempDir dir;
  write_embeddings_jsonl(dir / "e.jsonl", e);
  const auto back = read_embeddings_jsonl(dir / "e.jsonl");
  REQUIRE(back.size() == e.size());
  for (std::size_t i = 0; i < e.size(); ++i) {
    CHECK(back[i].id == e[i].id);
    CHECK(back[i].domain == e[i].domain);
    CHECK(back[i].embedding == e[i].embedding);
  }
}

TEST_CASE("t-SNE separates clusters and is seeded") {
  std::mt19937_64 rng(6);
  std::vector<int> labels;
  auto rows = clusters(3, 20, 16, rng, &labels);
  TsneOptions opt;
  opt.iterations = 500;
  const auto pts = tsne_project(rows, opt);
  REQUIRE(pts.size() == 60);
  for (const auto& p : pts) CHECK((std::isfinite(p[0]) && std::isfinite(p[1])));
  CHECK(silhouette(pts, labels) > 0.5);
  CHECK(tsne_project(rows, opt) == pts);

  std::vector<int> two_labels;
  const auto two = clusters(2, 15, 512, rng, &two_labels);
  CHECK(silhouette(tsne_project(two), two_labels) > 0.0);
  opt.seed = 1;
  CHECK(tsne_project(rows, opt) != pts);
}

TEST_CASE("t-SNE places duplicate rows together") {
  std::mt19937_64 rng(7);
  auto rows = clusters(3, 12, 32, rng, nullptr);
  rows.push_back(rows[3]);
  rows.push_back(rows[20]);
  const auto pts = tsne_project(rows);
  double lo = 1e300, hi = -1e300;
  for (const auto& p : pts) {
    lo = std::min({lo, p[0], p[1]});
    hi = std::max({hi, p[0], p[1]});
  }
  const auto n = pts.size();
  CHECK(std::hypot(pts[3][0] - pts[n - 2][0], pts[3][1] - pts[n - 2][1]) < 1e-3 * (hi - lo));
  CHECK(std::hypot(pts[20][0] - pts[n - 1][0], pts[20][1] - pts[n - 1][1]) < 1e-3 * (hi - lo));
}

TEST_CASE("t-SNE input checks and perplexity reduction") {
  CHECK(effective_perplexity(100, 30.0) == 30.0);
  CHECK(effective_perplexity(91, 30.0) == 30.0);
  CHECK(effective_perplexity(90, 30.0) == 29.0);
  CHECK(effective_perplexity(10, 30.0) == 3.0);
  std::vector<std::vector<float>> four(4, std::vector<float>(3, 0.0f));
  CHECK(code_of([&] { tsne_project(four); }) == ErrorCode::TooFewPoints);
  std::vector<std::vector<float>> ragged(6, std::vector<float>(3, 1.0f));
  ragged[2].push_back(0.0f);
  CHECK(code_of([&] { tsne_project(ragged); }) == ErrorCode::ShapeMismatch);
  std::mt19937_64 rng(8);
  const auto small = clusters(2, 4, 5, rng, nullptr);
  TsneOptions opt;
  opt.iterations = 100;
  CHECK(tsne_project(small, opt).size() == 8);
}

TEST_CASE("results table") {
  std::vector<RegimeSummary> rows;
  for (RegimeKind k : {RegimeKind::Ft, RegimeKind::E2eDa, RegimeKind::E2eReal, RegimeKind::Tl, RegimeKind::E2eAdd,
                       RegimeKind::E2eSynth}) {
    RegimeSummary s{k, {}};
    s.aggregate.folds = 3;
    s.aggregate.accuracy = {0.467, 0.052};
    s.aggregate.loss = {1.61, 0.05};
    rows.push_back(s);
  }
  const auto ordered = order_rows(rows);
  std::vector<RegimeKind> kinds;
  for (const auto& r : ordered) kinds.push_back(r.regime);
  CHECK(kinds == std::vector<RegimeKind>(std::begin(kAllRegimes), std::end(kAllRegimes)));

  const auto text = format_report_text(rows);
  CHECK(text.find("46.7% (5.2%)") != std::string::npos);
  CHECK(text.find("1.61 (0.05)") != std::string::npos);
  CHECK(text.find("E2E-real") < text.find("E2E-synth"));
  CHECK(text.find("TL") < text.find("FT"));

  TempDir dir;
  emit_report(dir / "r.csv", dir / "r.txt", rows);
  const auto back = read_report_csv(dir / "r.csv");
  REQUIRE(back.size() == 6);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(back[i].regime == ordered[i].regime);
    CHECK(back[i].aggregate.accuracy.mean == 0.467);
    CHECK(back[i].aggregate.loss.std == 0.05);
    CHECK(back[i].aggregate.folds == 3);
  }
  CHECK(format_report_csv(rows).starts_with("regime,accuracy_mean,accuracy_std,loss_mean,loss_std,folds\n"));
  CHECK(code_of([&] { emit_report(dir / "x.csv", dir / "x.txt", {}); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("scatter plot") {
  std::vector<ScatterPoint> pts;
  for (const char* g : {"blues", "classical", "country", "rock"}) {
    for (int i = 0; i < 3; ++i) {
      pts.push_back({static_cast<double>(i), 1.0 * i, g, Domain::Real});
      pts.push_back({static_cast<double>(i) + 0.5, 2.0, g, Domain::Synthetic});
    }
  }
  const auto svg = render_scatter_svg(pts);
  CHECK((svg.starts_with("<svg") || svg.starts_with("<?xml")));
  CHECK(count_of(svg, "class=\"real\"") == 9);
  CHECK(count_of(svg, "class=\"synthetic\"") == 9);
  CHECK(count_of(svg, "data-genre=\"rock\"") == 0);

  ScatterOptions all;
  all.genres = {};
  const auto full = render_scatter_svg(pts, all);
  CHECK(count_of(full, "data-genre=\"rock\"") == 6);
  CHECK(count_of(full, "class=\"real\"") == 12);

  ScatterOptions none;
  none.genres = {"jazz"};
  CHECK(code_of([&] { render_scatter_svg(pts, none); }) == ErrorCode::EmptyPlot);
  CHECK(code_of([&] { render_scatter_svg(std::span<const ScatterPoint>{}, all); }) == ErrorCode::EmptyPlot);
  TempDir dir;
  emit_scatter(dir / "p.svg", pts);
  CHECK(std::filesystem::file_size(dir / "p.svg") == svg.size());
}
