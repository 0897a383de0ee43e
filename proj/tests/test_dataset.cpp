// Copyright 2026 The synthtag Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <fstream>
#include <map>
#include <set>

#include "synthtag/dataset.hpp"
#include "synthtag/error.hpp"
#include "test_support.hpp"

using namespace synthtag;
using synthtag::testing::TempDir;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::IoError;
}

std::string track_name(std::size_t genre, int i) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s.%05d.wav", std::string(kGenres[genre]).c_str(), i);
  return buf;
}

// Tiny 10 s files at 100 Hz: headers are all the manifest reads.
struct FakeGtzan {
  TempDir dir{"gtzan"};
  std::vector<std::filesystem::path> fold_files;
  std::set<std::string> names;

  explicit FakeGtzan(int per_genre, const std::string& layout = "genre") {
    const std::vector<float> silence(1000, 0.0f);
    std::array<std::ofstream, 3> folds;
    for (int f = 0; f < 3; ++f) {
      fold_files.push_back(dir / ("fold" + std::to_string(f) + ".txt"));
      folds[static_cast<std::size_t>(f)].open(fold_files.back());
    }
    for (std::size_t g = 0; g < kGenreCount; ++g) {
      for (int i = 0; i < per_genre; ++i) {
        const std::string name = track_name(g, i);
        std::filesystem::path where = dir.path();
        if (layout == "genre") where /= std::string(kGenres[g]);
        if (layout == "original") where = where / "genres_original" / std::string(kGenres[g]);
        std::filesystem::create_directories(where);
        write_wav(where / name, silence, 100);
        folds[static_cast<std::size_t>(i % 3)] << name << '\n';
        names.insert(name);
      }
    }
  }
  std::filesystem::path root() const { return dir.path(); }
};

std::vector<TrackRecord> synthetic_records(std::size_t per_genre) {
  std::vector<TrackRecord> out;
  for (std::size_t g = 0; g < kGenreCount; ++g)
    for (std::size_t i = 0; i < per_genre; ++i)
      out.push_back({"s/" + std::string(kGenres[g]) + std::to_string(i), std::string(kGenres[g]), Domain::Synthetic, 30.0});
  return out;
}

std::set<std::string> paths_of(const std::vector<TrackRecord>& r) {
  std::set<std::string> s;
  for (const auto& x : r) s.insert(x.path);
  return s;
}

}  // namespace

TEST_CASE("genre from GTZAN file names") {
  CHECK(genre_from_filename("blues.00042.wav") == "blues");
  CHECK(genre_from_filename("/data/genres/hiphop/hiphop.00007.wav") == "hiphop");
  CHECK(code_of([] { genre_from_filename("polka.00001.wav"); }) == ErrorCode::UnknownGenre);
}

TEST_CASE("1000-track manifest yields three disjoint covering folds") {
  FakeGtzan g(100);
  const auto folds = load_gtzan_manifest(g.root(), g.fold_files);
  REQUIRE(folds.size() == 3);
  std::set<std::string> val_union;
  std::size_t val_total = 0;
  for (const auto& f : folds) {
    const auto train = paths_of(f.train), val = paths_of(f.val);
    for (const auto& p : val) CHECK(train.count(p) == 0);
    CHECK(f.train.size() + f.val.size() == 1000);
    val_union.insert(val.begin(), val.end());
    val_total += f.val.size();
    for (const auto& r : f.val) {
      CHECK(r.domain == Domain::Real);
      CHECK(r.duration_s == doctest::Approx(10.0));
      CHECK(genre_from_filename(r.path) == r.genre);
    }
  }
  CHECK(val_union.size() == 1000);
  CHECK(val_total == 1000);
}

TEST_CASE("manifest paths resolve under common GTZAN layouts") {
  for (const std::string layout : {"flat", "genre", "original"}) {
    FakeGtzan g(3, layout);
    const auto folds = load_gtzan_manifest(g.root(), g.fold_files);
    CHECK(folds[0].val.size() + folds[1].val.size() + folds[2].val.size() == 30);
  }
}

TEST_CASE("missing and duplicated fold entries") {
  FakeGtzan g(3);
  std::filesystem::remove(g.root() / "jazz" / "jazz.00001.wav");
  try {
    load_gtzan_manifest(g.root(), g.fold_files);
    FAIL("expected MissingFile");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingFile);
    CHECK(std::string(e.what()).find("jazz.00001.wav") != std::string::npos);
  }
  FakeGtzan h(3);
  std::ofstream(h.fold_files[2], std::ios::app) << "blues.00000.wav\n";
  CHECK(code_of([&] { load_gtzan_manifest(h.root(), h.fold_files); }) == ErrorCode::InvalidArgument);
  std::ofstream(h.fold_files[1], std::ios::app) << "polka.00000.wav\n";
  CHECK(code_of([&] { load_gtzan_manifest(h.root(), h.fold_files); }) == ErrorCode::UnknownGenre);
}

TEST_CASE("manifest CSV round trip") {
  TempDir dir;
  std::vector<TrackRecord> recs = {{"audio/a,1.wav", "rock", Domain::Synthetic, 30.0},
                                   {"/abs/b.wav", "pop", Domain::Real, 29.5}};
  write_manifest_csv(dir / "m.csv", recs);
  const auto back = read_manifest_csv(dir / "m.csv");
  REQUIRE(back.size() == 2);
  CHECK(back[0].path == (dir.path() / "audio/a,1.wav").string());
  CHECK(back[1].path == "/abs/b.wav");
  CHECK(back[0].domain == Domain::Synthetic);
  CHECK(back[1].duration_s == 29.5);

  std::ofstream(dir / "extra.csv") << "path,genre,domain,duration_s,prompt_id\nx.wav,jazz,synthetic,30,jazz-00000\n";
  CHECK(read_manifest_csv(dir / "extra.csv").at(0).genre == "jazz");
  std::ofstream(dir / "bad.csv") << "path,genre,domain,duration_s\nx.wav,polka,real,30\n";
  CHECK(code_of([&] { read_manifest_csv(dir / "bad.csv"); }) == ErrorCode::UnknownGenre);
}

TEST_CASE("stratified random splits") {
  const auto recs = synthetic_records(1000);
  const auto splits = random_splits(recs, 3, 0.1, 9);
  REQUIRE(splits.size() == 3);
  for (const auto& s : splits) {
    CHECK(s.val.size() == 1000);
    CHECK(s.train.size() == 9000);
    std::map<std::string, int> per;
    for (const auto& r : s.val) per[r.genre]++;
    for (const auto& [g, n] : per) CHECK(n == 100);
  }
  CHECK(paths_of(splits[0].val) != paths_of(splits[1].val));
  const auto again = random_splits(recs, 3, 0.1, 9);
  for (int i = 0; i < 3; ++i) CHECK(again[static_cast<std::size_t>(i)].val == splits[static_cast<std::size_t>(i)].val);

  CHECK(code_of([&] { random_splits(recs, 3, 0.0, 1); }) == ErrorCode::EmptyManifest);
  CHECK(code_of([&] { random_splits(recs, 3, 1.0, 1); }) == ErrorCode::EmptyManifest);
  CHECK(code_of([&] { random_splits({}, 3, 0.1, 1); }) == ErrorCode::EmptyManifest);
}

TEST_CASE("property: per-genre validation counts stay within one of count * fraction") {
  std::mt19937_64 gen(123);
  for (int trial = 0; trial < 60; ++trial) {
    std::vector<TrackRecord> recs;
    std::map<std::string, int> counts;
    for (std::size_t g = 0; g < kGenreCount; ++g) {
      const int n = std::uniform_int_distribution<int>(0, 40)(gen);
      for (int i = 0; i < n; ++i) recs.push_back({std::to_string(trial) + "/" + std::to_string(g) + "/" + std::to_string(i),
                                                  std::string(kGenres[g]), Domain::Real, 30.0});
      counts[std::string(kGenres[g])] = n;
    }
    if (recs.empty()) continue;
    const double frac = std::uniform_real_distribution<double>(0.05, 0.95)(gen);
    for (const auto& s : random_splits(recs, 2, frac, gen())) {
      std::map<std::string, int> val;
      for (const auto& r : s.val) val[r.genre]++;
      for (const auto& [g, n] : counts) CHECK(std::abs(val[g] - n * frac) <= 1.0);
      CHECK(s.val.size() + s.train.size() == recs.size());
      const auto vp = paths_of(s.val);
      for (const auto& r : s.train) REQUIRE(vp.count(r.path) == 0);
    }
  }
}

TEST_CASE("batch iteration") {
  InMemoryFeatureSource src;
  std::mt19937_64 g(1);
  std::vector<TrackRecord> recs;
  for (int i = 0; i < 900; ++i) {
    TrackRecord r{"r" + std::to_string(i), std::string(kGenres[static_cast<std::size_t>(i % 10)]), Domain::Real, 30.0};
    src.add(r.path, testing::random_mel(2, 3, g));
    recs.push_back(r);
  }
  Rng rng(5);
  BatchIterator it(recs, 4, BatchMode::Train, rng, src);
  CHECK(it.batch_count() == 225);
  std::size_t batches = 0, items = 0;
  while (auto b = it.next()) {
    ++batches;
    items += b->size();
    CHECK(b->size() == 4);
  }
  CHECK(batches == 225);
  CHECK(items == 900);

  BatchIterator small(std::span<const TrackRecord>(recs).first(2), 4, BatchMode::Train, rng, src);
  const auto only = small.next();
  REQUIRE(only);
  CHECK(only->size() == 2);
  CHECK_FALSE(small.next());

  BatchIterator val(recs, 4, BatchMode::Val, rng, src);
  for (std::size_t i = 0; i < 900; ++i) REQUIRE(val.order()[i] == &recs[i]);

  Rng a(77), b(77);
  BatchIterator ia(recs, 4, BatchMode::Train, a, src), ib(recs, 4, BatchMode::Train, b, src);
  bool shuffled = false;
  for (std::size_t i = 0; i < 900; ++i) {
    REQUIRE(ia.order()[i] == ib.order()[i]);
    shuffled = shuffled || ia.order()[i] != &recs[i];
  }
  CHECK(shuffled);
}

TEST_CASE("audio source crops: val deterministic, train seeded") {
  std::mt19937_64 g(8);
  std::vector<float> x(16000 * 12);
  std::normal_distribution<float> n(0.0f, 0.1f);
  for (auto& v : x) v = n(g);
  AudioFeatureSource src([&](const std::string&) { return testing::clip_of(x); });
  const TrackRecord r{"clip", "rock", Domain::Real, 12.0};
  const auto v1 = src.features(r, CropMode::Center, 1);
  const auto v2 = src.features(r, CropMode::Center, 2);
  CHECK(v1.values == v2.values);
  CHECK(v1.frames == 624);
  CHECK(src.features(r, CropMode::Random, 3).values == src.features(r, CropMode::Random, 3).values);

  std::vector<TrackRecord> recs(6, r);
  std::vector<const TrackRecord*> ptrs;
  for (auto& x2 : recs) ptrs.push_back(&x2);
  Rng ra(4), rb(4);
  const auto ba = load_items(ptrs, BatchMode::Train, ra, src);
  const auto bb = load_items(ptrs, BatchMode::Train, rb, src);
  for (std::size_t i = 0; i < ba.size(); ++i) CHECK(ba[i].mel.values == bb[i].mel.values);
}

TEST_CASE("property: DA pairs respect label constraints") {
  std::mt19937_64 gen(99);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<TrackRecord> pool;
    std::set<int> present;
    const int n = std::uniform_int_distribution<int>(2, 40)(gen);
    for (int i = 0; i < n; ++i) {
      const auto g = static_cast<std::size_t>(std::uniform_int_distribution<int>(0, 9)(gen));
      pool.push_back({"p" + std::to_string(i), std::string(kGenres[g]), Domain::Real, 30.0});
      present.insert(static_cast<int>(g));
    }
    if (present.size() < 2) continue;
    const RealPool rp(pool);
    std::vector<int> labels;
    for (int l : present)
      if (std::bernoulli_distribution(0.6)(gen)) labels.push_back(l);
    if (labels.empty()) labels.push_back(*present.begin());
    Rng rng(gen());
    const auto pairs = select_da_pairs(labels, rp, rng);
    REQUIRE(pairs.positive.size() == labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
      REQUIRE(rp.records()[pairs.positive[i]].label() == labels[i]);
      REQUIRE(rp.records()[pairs.negative[i]].label() != labels[i]);
    }
  }
}

TEST_CASE("DA pair sampling errors, determinism and uniformity") {
  std::vector<TrackRecord> jazz_only = {{"a", "jazz", Domain::Real, 30}, {"b", "jazz", Domain::Real, 30}};
  const RealPool jp(jazz_only);
  Rng rng(1);
  const std::vector<int> jazz = {*genre_index("jazz")};
  CHECK(code_of([&] { select_da_pairs(jazz, jp, rng); }) == ErrorCode::MissingClassInPool);
  const std::vector<int> rock = {*genre_index("rock")};
  CHECK(code_of([&] { select_da_pairs(rock, jp, rng); }) == ErrorCode::MissingClassInPool);

  // Pool: 1 blues, 3 classical, 6 country. Negatives for blues must be uniform over the 9 others.
  std::vector<TrackRecord> pool;
  auto add = [&](const char* g, int n) {
    for (int i = 0; i < n; ++i) pool.push_back({std::string(g) + std::to_string(i), g, Domain::Real, 30});
  };
  add("blues", 1);
  add("classical", 3);
  add("country", 6);
  const RealPool rp(pool);
  const std::vector<int> blues(1, 0);
  std::map<std::size_t, int> hits;
  Rng r2(3);
  const int draws = 9000;
  for (int i = 0; i < draws; ++i) hits[select_da_pairs(blues, rp, r2).negative[0]]++;
  CHECK(hits.size() == 9);
  double chi2 = 0.0;
  for (const auto& [k, c] : hits) chi2 += (c - draws / 9.0) * (c - draws / 9.0) / (draws / 9.0);
  CHECK(chi2 < 26.12);  // 8 dof, p = 0.001

  Rng a(10), b(10);
  const std::vector<int> labels = {0, 1, 2, 1};
  const auto pa = select_da_pairs(labels, rp, a), pb = select_da_pairs(labels, rp, b);
  CHECK(pa.positive == pb.positive);
  CHECK(pa.negative == pb.negative);
}

TEST_CASE("sample_da_pairs pairs only the synthetic items of a batch") {
  InMemoryFeatureSource src;
  std::mt19937_64 g(2);
  std::vector<TrackRecord> pool;
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 2; ++i) {
      TrackRecord r{"real" + std::to_string(c) + std::to_string(i), std::string(kGenres[static_cast<std::size_t>(c)]),
                    Domain::Real, 30};
      src.add(r.path, testing::random_mel(2, 2, g));
      pool.push_back(r);
    }
  const RealPool rp(pool);
  Batch batch(4);
  batch[0] = {testing::random_mel(2, 2, g), 0, Domain::Real, "x0"};
  batch[1] = {testing::random_mel(2, 2, g), 1, Domain::Synthetic, "x1"};
  batch[2] = {testing::random_mel(2, 2, g), 2, Domain::Real, "x2"};
  batch[3] = {testing::random_mel(2, 2, g), 2, Domain::Synthetic, "x3"};
  Rng rng(6);
  const auto pairs = sample_da_pairs(batch, rp, rng, src);
  CHECK(pairs.synth_index == std::vector<std::size_t>{1, 3});
  REQUIRE(pairs.pos_real.size() == 2);
  CHECK(pairs.pos_real[0].label == 1);
  CHECK(pairs.neg_real[0].label != 1);
  CHECK(pairs.pos_real[1].label == 2);
  CHECK(pairs.neg_real[1].label != 2);
  for (const auto& p : pairs.pos_real) CHECK(p.domain == Domain::Real);
}
