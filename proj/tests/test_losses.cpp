// Copyright 2026 The synthtag Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <random>

#include "synthtag/losses.hpp"

using namespace synthtag;
using namespace synthtag::losses;

namespace {

using Vec = std::vector<double>;

Vec randvec(std::size_t d, std::mt19937_64& rng, double s = 1.0) {
  std::normal_distribution<double> n(0.0, s);
  Vec v(d);
  for (auto& x : v) x = n(rng);
  return v;
}

// Written out longhand, independent of the library templates.
double oracle_pair_term(const Vec& s, const Vec& p, const Vec& n, double margin, bool ccsa) {
  double dp = 0.0, dn = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    dp += (s[i] - p[i]) * (s[i] - p[i]);
    dn += (s[i] - n[i]) * (s[i] - n[i]);
  }
  double neg;
  if (ccsa) {
    const double h = margin - std::sqrt(dn);
    neg = h > 0 ? 0.5 * h * h : 0.0;
  } else {
    neg = margin - dn > 0 ? 0.5 * (margin - dn) : 0.0;
  }
  return 0.5 * dp + neg;
}

struct Triples {
  std::vector<Vec> s, p, n;
  std::vector<PairEmbeddings<double>> view() const {
    std::vector<PairEmbeddings<double>> out;
    for (std::size_t i = 0; i < s.size(); ++i) out.push_back({s[i], p[i], n[i]});
    return out;
  }
};

Triples random_triples(std::size_t count, std::size_t d, std::mt19937_64& rng) {
  Triples t;
  std::uniform_real_distribution<double> spread(0.1, 1.5);
  for (std::size_t i = 0; i < count; ++i) {
    const double sc = spread(rng);
    t.s.push_back(randvec(d, rng, sc));
    t.p.push_back(randvec(d, rng, sc));
    t.n.push_back(randvec(d, rng, sc));
  }
  return t;
}

}  // namespace

TEST_CASE("pair terms match a longhand oracle on random pairs") {
  std::mt19937_64 rng(1);
  const auto t = random_triples(1000, 16, rng);
  double oracle_sq = 0.0, oracle_ccsa = 0.0;
  for (std::size_t i = 0; i < 1000; ++i) {
    const double o = oracle_pair_term(t.s[i], t.p[i], t.n[i], 2.0, false);
    const double lib = positive_pair_distance<double>(t.s[i], t.p[i]) +
                       negative_pair_distance<double>(t.s[i], t.n[i], 2.0, HingeForm::SquaredDistance);
    REQUIRE(lib == doctest::Approx(o).epsilon(1e-6));
    oracle_sq += o;
    oracle_ccsa += oracle_pair_term(t.s[i], t.p[i], t.n[i], 2.0, true);
  }
  const auto pairs = t.view();
  CHECK(semantic_alignment_loss<double>(pairs, 2.0) == doctest::Approx(oracle_sq / 1000).epsilon(1e-6));
  CHECK(semantic_alignment_loss<double>(pairs, 2.0, HingeForm::Ccsa) ==
        doctest::Approx(oracle_ccsa / 1000).epsilon(1e-6));
}

TEST_CASE("hinge examples") {
  const Vec a = {0.0, 0.0}, b = {1.0, 0.0}, far = {3.0, 0.0};
  CHECK(positive_pair_distance<double>(a, b) == 0.5);
  CHECK(negative_pair_distance<double>(a, b, 2.0) == 0.5);       // 1/2 (2 - 1)
  CHECK(negative_pair_distance<double>(a, far, 2.0) == 0.0);     // already beyond the margin
  CHECK(negative_pair_distance<double>(a, b, 2.0, HingeForm::Ccsa) == 0.5);  // 1/2 (2 - 1)^2
  CHECK(negative_pair_distance<double>(a, a, 2.0) == 1.0);
  CHECK(semantic_alignment_loss<double>(std::span<const PairEmbeddings<double>>{}, 2.0) == 0.0);
}

TEST_CASE("gradients match central differences") {
  std::mt19937_64 rng(2);
  for (HingeForm form : {HingeForm::SquaredDistance, HingeForm::Ccsa}) {
    auto t = random_triples(5, 8, rng);
    const double weight = 0.7;
    std::vector<Vec> gs(5, Vec(8, 0.0)), gp(5, Vec(8, 0.0)), gn(5, Vec(8, 0.0));
    std::vector<PairGradients<double>> grads;
    for (std::size_t i = 0; i < 5; ++i) grads.push_back({gs[i], gp[i], gn[i]});
    semantic_alignment_gradient<double>(t.view(), 2.0, form, weight, grads);
    auto loss = [&] { return weight * semantic_alignment_loss<double>(t.view(), 2.0, form); };
    const double h = 1e-6;
    auto check = [&](std::vector<Vec>& x, const std::vector<Vec>& g) {
      for (std::size_t i = 0; i < x.size(); ++i) {
        for (std::size_t k = 0; k < 8; ++k) {
          const double keep = x[i][k];
          x[i][k] = keep + h;
          const double up = loss();
          x[i][k] = keep - h;
          const double down = loss();
          x[i][k] = keep;
          REQUIRE(std::abs(g[i][k] - (up - down) / (2 * h)) < 1e-4);
        }
      }
    };
    check(t.s, gs);
    check(t.p, gp);
    check(t.n, gn);
  }
}

TEST_CASE("all-pairs variant against brute force and finite differences") {
  std::mt19937_64 rng(3);
  const std::size_t d = 6;
  std::vector<Vec> synth, real;
  std::vector<int> sl = {0, 1, 2, 0}, rl = {0, 0, 1, 2, 2, 1, 0};
  for (std::size_t i = 0; i < sl.size(); ++i) synth.push_back(randvec(d, rng, 0.7));
  for (std::size_t j = 0; j < rl.size(); ++j) real.push_back(randvec(d, rng, 0.7));
  auto views = [](const std::vector<Vec>& v) {
    std::vector<std::span<const double>> out;
    for (const auto& x : v) out.emplace_back(x);
    return out;
  };

  double expect = 0.0;
  for (std::size_t i = 0; i < synth.size(); ++i) {
    double pos = 0.0, neg = 0.0;
    int np = 0, nn = 0;
    for (std::size_t j = 0; j < real.size(); ++j) {
      const Vec zero(d, 1e9);
      if (rl[j] == sl[i]) {
        pos += oracle_pair_term(synth[i], real[j], zero, 2.0, false);
        ++np;
      } else {
        neg += oracle_pair_term(synth[i], synth[i], real[j], 2.0, false);
        ++nn;
      }
    }
    expect += pos / np + neg / nn;
  }
  expect /= static_cast<double>(synth.size());
  const auto sv = views(synth), rv = views(real);
  CHECK(semantic_alignment_loss_all_pairs<double>(sv, sl, rv, rl, 2.0) == doctest::Approx(expect).epsilon(1e-9));

  std::vector<Vec> gs(synth.size(), Vec(d, 0.0)), gr(real.size(), Vec(d, 0.0));
  std::vector<std::span<double>> gsv, grv;
  for (auto& g : gs) gsv.emplace_back(g);
  for (auto& g : gr) grv.emplace_back(g);
  semantic_alignment_loss_all_pairs<double>(sv, sl, rv, rl, 2.0, HingeForm::SquaredDistance, gsv, grv, 1.0);
  auto loss = [&] { return semantic_alignment_loss_all_pairs<double>(views(synth), sl, views(real), rl, 2.0); };
  const double h = 1e-6;
  for (std::size_t i = 0; i < synth.size(); ++i) {
    for (std::size_t k = 0; k < d; ++k) {
      const double keep = synth[i][k];
      synth[i][k] = keep + h;
      const double up = loss();
      synth[i][k] = keep - h;
      const double down = loss();
      synth[i][k] = keep;
      REQUIRE(std::abs(gs[i][k] - (up - down) / (2 * h)) < 1e-4);
    }
  }
  for (std::size_t j = 0; j < real.size(); ++j) {
    for (std::size_t k = 0; k < d; ++k) {
      const double keep = real[j][k];
      real[j][k] = keep + h;
      const double up = loss();
      real[j][k] = keep - h;
      const double down = loss();
      real[j][k] = keep;
      REQUIRE(std::abs(gr[j][k] - (up - down) / (2 * h)) < 1e-4);
    }
  }
}

TEST_CASE("float instantiation agrees with double") {
  std::mt19937_64 rng(4);
  const auto t = random_triples(200, 8, rng);
  std::vector<std::vector<float>> s, p, n;
  for (std::size_t i = 0; i < 200; ++i) {
    s.emplace_back(t.s[i].begin(), t.s[i].end());
    p.emplace_back(t.p[i].begin(), t.p[i].end());
    n.emplace_back(t.n[i].begin(), t.n[i].end());
  }
  std::vector<PairEmbeddings<float>> fp;
  for (std::size_t i = 0; i < 200; ++i) fp.push_back({s[i], p[i], n[i]});
  const double lf = semantic_alignment_loss<float>(fp, 2.0f);
  const double ld = semantic_alignment_loss<double>(t.view(), 2.0);
  CHECK(lf == doctest::Approx(ld).epsilon(1e-4));
}

TEST_CASE("cross-entropy and combined objective") {
  const std::vector<float> probs = {0.7f, 0.2f, 0.1f, 0.0f, 1.0f, 0.0f};
  const std::vector<int> labels = {0, 2};
  const double expect = (-std::log(0.7) - std::log(1e-12)) / 2.0;
  CHECK(cross_entropy(probs, labels, 3) == doctest::Approx(expect).epsilon(1e-6));
  const std::vector<int> bad = {0, 3};
  CHECK_THROWS_WITH_AS(cross_entropy(probs, bad, 3), doctest::Contains("InvalidLabel"), Error);
  const std::vector<int> neg = {-1, 0};
  CHECK_THROWS_AS(cross_entropy(probs, neg, 3), Error);

  std::vector<float> g(3);
  cross_entropy_logit_grad(std::span(probs).first(3), 1, 0.5f, g);
  CHECK(g[0] == doctest::Approx(0.35));
  CHECK(g[1] == doctest::Approx(-0.4));
  CHECK(g[2] == doctest::Approx(0.05));

  CHECK(combined_loss(3.0, 1.0, 0.0) == 1.0);
  CHECK(combined_loss(3.0, 1.0, 1.0) == 3.0);
  CHECK(combined_loss(3.0, 1.0, 0.7) == doctest::Approx(0.7 * 3.0 + 0.3 * 1.0));
  for (double bad_gamma : {-0.1, 1.5, std::nan("")}) {
    try {
      combined_loss(1.0, 1.0, bad_gamma);
      FAIL("accepted gamma " << bad_gamma);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::InvalidGamma);
    }
    DaConfig c;
    c.gamma = bad_gamma;
    CHECK_THROWS_AS(c.validate(), Error);
  }
  DaConfig c;
  c.margin = 0.0;
  try {
    c.validate();
    FAIL("accepted zero margin");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidConfig);
  }
}

TEST_CASE("mismatched embedding sizes are rejected") {
  const Vec a = {1.0, 2.0}, b = {1.0};
  try {
    positive_pair_distance<double>(a, b);
    FAIL("accepted ragged pair");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ShapeMismatch);
  }
}
