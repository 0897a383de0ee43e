// Copyright 2026 The synthtag Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "synthtag/csv.hpp"
#include "synthtag/dataset.hpp"
#include "synthtag/error.hpp"
#include "synthtag/evaluation.hpp"
#include "synthtag/features.hpp"
#include "synthtag/model.hpp"
#include "synthtag/promptgen.hpp"
#include "synthtag/report.hpp"
#include "synthtag/trainer.hpp"
#include "synthtag/tsne.hpp"

namespace synthtag::cli {
namespace fs = std::filesystem;

namespace {

// Data selection shared by train, evaluate and export-embeddings.
struct DataArgs {
  std::string gtzan_root;
  std::vector<std::string> fold_files;
  std::string real_manifest;
  std::string synth_manifest;
  double val_fraction = 0.1;
  std::uint64_t split_seed = 0;

  void add_to(CLI::App* app) {
    app->add_option("--gtzan-root", gtzan_root, "GTZAN audio root")->check(CLI::ExistingDirectory);
    app->add_option("--fold-files", fold_files, "Three fold list files")->expected(3)->check(CLI::ExistingFile);
    app->add_option("--real-manifest", real_manifest, "Real-track manifest CSV (random splits)")
        ->check(CLI::ExistingFile);
    app->add_option("--synth-manifest", synth_manifest, "Synthetic manifest CSV")->check(CLI::ExistingFile);
    app->add_option("--val-fraction", val_fraction, "Validation share of random splits");
    app->add_option("--split-seed", split_seed, "Seed of the random splits");
  }

  bool has_real() const { return !gtzan_root.empty() || !real_manifest.empty(); }

  std::vector<FoldSplit> real_folds() const {
    if (!gtzan_root.empty()) {
      if (fold_files.size() != 3) throw Error(ErrorCode::UsageError, "--gtzan-root needs --fold-files with 3 files");
      std::vector<fs::path> files(fold_files.begin(), fold_files.end());
      return load_gtzan_manifest(gtzan_root, files);
    }
    if (!real_manifest.empty()) {
      const auto records = read_manifest_csv(real_manifest);
      return random_splits(records, 3, val_fraction, split_seed);
    }
    throw Error(ErrorCode::UsageError, "real data requires --gtzan-root with --fold-files, or --real-manifest");
  }

  std::vector<TrackRecord> synth_records() const {
    if (synth_manifest.empty()) throw Error(ErrorCode::UsageError, "synthetic data requires --synth-manifest");
    return read_manifest_csv(synth_manifest);
  }
};

struct ModelArgs {
  std::optional<int> front_channels;
  std::optional<int> backend_channels;
  std::optional<int> backend_layers;
  std::optional<int> embedding_dim;

  void add_to(CLI::App* app) {
    app->add_option("--front-channels", front_channels, "Filters per front-end kernel shape");
    app->add_option("--backend-channels", backend_channels, "Back-end conv channels");
    app->add_option("--backend-layers", backend_layers, "Back-end conv blocks");
    app->add_option("--embedding-dim", embedding_dim, "Width of the embedding layer");
  }
  bool any() const { return front_channels || backend_channels || backend_layers || embedding_dim; }
  void apply(ModelConfig& m) const {
    if (front_channels) m.front_channels.assign(m.front_shape_count(), *front_channels);
    if (backend_channels) m.backend_channels = *backend_channels;
    if (backend_layers) m.backend_layers = *backend_layers;
    if (embedding_dim) m.embedding_dim = *embedding_dim;
  }
};

std::string strip_code(const Error& e) {
  const std::string what = e.what();
  const std::string prefix = std::string(to_string(e.code())) + ": ";
  return what.rfind(prefix, 0) == 0 ? what.substr(prefix.size()) : what;
}

void print_error(std::ostream& err, const std::string& code, const std::string& message) {
  err << nlohmann::json{{"error", {{"code", code}, {"message", message}}}}.dump() << '\n';
}

std::vector<std::string> split_words(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

std::string replace_all(std::string s, const std::string& from, const std::string& to) {
  for (std::size_t p = s.find(from); p != std::string::npos; p = s.find(from, p + to.size())) s.replace(p, from.size(), to);
  return s;
}

// INI value quoting understood by the config reader.
std::string ini_string(const std::string& s) { return nlohmann::json(s).dump(); }

struct TrainArgs {
  std::string regime;
  std::string fold = "0";
  std::uint64_t seed = 0;
  std::string init_checkpoint;
  std::string out = "runs";
  std::size_t batch_size = 4;
  std::optional<double> lr;
  int patience = 5;
  int max_epochs = 100;
  double gamma = 0.7;
  double margin = 2.0;
  std::string hinge = "squared";
  std::string pairing = "single";
  DataArgs data;
  ModelArgs model;
};

std::string snapshot(const TrainArgs& a, int fold, const TrainingConfig& cfg) {
  std::ostringstream s;
  auto num = [](double v) { return csv::format_number(v); };
  s << "[train]\n";
  s << "regime = " << ini_string(a.regime) << '\n';
  s << "fold = " << ini_string(std::to_string(fold)) << '\n';
  s << "seed = " << cfg.seed << '\n';
  if (!a.init_checkpoint.empty()) s << "init-checkpoint = " << ini_string(a.init_checkpoint) << '\n';
  s << "out = " << ini_string(a.out) << '\n';
  s << "batch-size = " << cfg.batch_size << '\n';
  s << "lr = " << num(cfg.learning_rate) << '\n';
  s << "patience = " << cfg.patience << '\n';
  s << "max-epochs = " << cfg.max_epochs << '\n';
  s << "gamma = " << num(cfg.da.gamma) << '\n';
  s << "margin = " << num(cfg.da.margin) << '\n';
  s << "hinge = " << ini_string(a.hinge) << '\n';
  s << "pairing = " << ini_string(a.pairing) << '\n';
  if (!a.data.gtzan_root.empty()) s << "gtzan-root = " << ini_string(a.data.gtzan_root) << '\n';
  if (!a.data.fold_files.empty()) {
    s << "fold-files = [";
    for (std::size_t i = 0; i < a.data.fold_files.size(); ++i) s << (i ? ", " : "") << ini_string(a.data.fold_files[i]);
    s << "]\n";
  }
  if (!a.data.real_manifest.empty()) s << "real-manifest = " << ini_string(a.data.real_manifest) << '\n';
  if (!a.data.synth_manifest.empty()) s << "synth-manifest = " << ini_string(a.data.synth_manifest) << '\n';
  s << "val-fraction = " << num(a.data.val_fraction) << '\n';
  s << "split-seed = " << a.data.split_seed << '\n';
  const auto& m = cfg.model;
  s << "front-channels = " << m.front_channels.front() << '\n';
  s << "backend-channels = " << m.backend_channels << '\n';
  s << "backend-layers = " << m.backend_layers << '\n';
  s << "embedding-dim = " << m.embedding_dim << '\n';
  return s.str();
}

losses::HingeForm parse_hinge(const std::string& s) {
  if (s == "squared") return losses::HingeForm::SquaredDistance;
  if (s == "ccsa") return losses::HingeForm::Ccsa;
  throw Error(ErrorCode::UsageError, "--hinge must be squared or ccsa");
}

losses::Pairing parse_pairing(const std::string& s) {
  if (s == "single") return losses::Pairing::Single;
  if (s == "all") return losses::Pairing::AllPairs;
  throw Error(ErrorCode::UsageError, "--pairing must be single or all");
}

std::vector<int> parse_folds(const std::string& fold) {
  if (fold == "all") return {0, 1, 2};
  if (fold == "0" || fold == "1" || fold == "2") return {std::stoi(fold)};
  throw Error(ErrorCode::UsageError, "--fold must be 0, 1, 2 or all");
}

void run_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  const RegimeKind kind = [&] {
    try {
      return parse_regime(a.regime);
    } catch (const Error& e) {
      throw Error(ErrorCode::UsageError, strip_code(e));
    }
  }();
  const bool needs_init = kind == RegimeKind::Tl || kind == RegimeKind::Ft;
  if (needs_init && a.init_checkpoint.empty()) {
    throw Error(ErrorCode::UsageError, "--init-checkpoint is required for regime " + std::string(to_string(kind)));
  }
  if (!needs_init && !a.init_checkpoint.empty()) {
    throw Error(ErrorCode::UsageError, "--init-checkpoint is only valid for tl and ft");
  }
  const bool needs_real = kind != RegimeKind::E2eSynth;
  const bool needs_synth = kind == RegimeKind::E2eSynth || kind == RegimeKind::E2eAdd || kind == RegimeKind::E2eDa;
  if (needs_real && !a.data.has_real()) {
    throw Error(ErrorCode::UsageError, std::string(to_string(kind)) +
                                           " needs --gtzan-root with --fold-files, or --real-manifest");
  }
  if (needs_synth && a.data.synth_manifest.empty()) {
    throw Error(ErrorCode::UsageError, std::string(to_string(kind)) + " needs --synth-manifest");
  }
  const std::vector<int> folds = parse_folds(a.fold);

  TrainingConfig cfg = TrainingConfig::for_regime(kind);
  cfg.seed = a.seed;
  cfg.batch_size = a.batch_size;
  if (a.lr) cfg.learning_rate = *a.lr;
  cfg.patience = a.patience;
  cfg.max_epochs = a.max_epochs;
  cfg.da.gamma = a.gamma;
  cfg.da.margin = a.margin;
  cfg.da.hinge = parse_hinge(a.hinge);
  cfg.da.pairing = parse_pairing(a.pairing);
  a.model.apply(cfg.model);

  const std::vector<FoldSplit> real = needs_real ? a.data.real_folds() : std::vector<FoldSplit>{};
  const std::vector<TrackRecord> synth = needs_synth ? a.data.synth_records() : std::vector<TrackRecord>{};
  const std::vector<FoldSplit> synth_splits =
      kind == RegimeKind::E2eSynth ? random_splits(synth, 3, a.data.val_fraction, a.data.split_seed)
                                   : std::vector<FoldSplit>{};

  AudioFeatureSource source;
  for (int fold : folds) {
    TrainingConfig run_cfg = cfg;
    Regime regime{kind, std::nullopt};
    if (needs_init) {
      const fs::path init = replace_all(a.init_checkpoint, "{fold}", std::to_string(fold));
      if (!fs::exists(init)) throw Error(ErrorCode::UsageError, "--init-checkpoint " + init.string() + " does not exist");
      if (!a.model.any()) run_cfg.model = load_checkpoint(init).model.config();
      regime.init_checkpoint = init;
    }
    run_cfg.validate();
    const auto idx = static_cast<std::size_t>(fold);
    TrainingData data = make_training_data(kind, needs_real ? &real.at(idx) : nullptr,
                                           kind == RegimeKind::E2eSynth ? &synth_splits.at(idx) : nullptr, synth);

    const fs::path dir = fs::path(a.out) / std::string(to_string(kind)) / std::to_string(fold) / std::to_string(a.seed);
    fs::create_directories(dir);
    {
      std::ofstream snap(dir / "config.ini");
      snap << snapshot(a, fold, run_cfg);
    }
    std::ofstream log_file(dir / "train.log", std::ios::trunc);
    LogFn log = [&](const std::string& line) {
      log_file << line << '\n';
      log_file.flush();
      err << "[" << to_string(kind) << " fold " << fold << "] " << line << '\n';
    };
    log("train " + std::to_string(data.train.size()) + " records, val " + std::to_string(data.val.size()));
    TrainResult result = train(regime, run_cfg, std::move(data), source, log);
    save_checkpoint(result.best.model, result.best.meta, dir / "checkpoint.tar");
    write_history_csv(dir / "history.csv", result.history);
    const EpochRecord& best = result.history.epochs.at(static_cast<std::size_t>(result.history.best_epoch - 1));
    const FoldResult fr{fold, best.val_acc, best.val_loss};
    write_fold_result(dir / "result.json", fr, std::string(to_string(kind)));
    out << nlohmann::json{{"regime", to_string(kind)},   {"fold", fold},
                          {"seed", a.seed},              {"best_epoch", result.history.best_epoch},
                          {"stopped_epoch", result.history.stopped_epoch}, {"accuracy", fr.accuracy},
                          {"loss", fr.loss},             {"dir", dir.string()}}
               .dump()
        << '\n';
  }
}

struct EvalArgs {
  std::string checkpoint;
  std::string manifest;
  std::string fold = "0";
  std::string out;
  DataArgs data;
};

void run_evaluate(const EvalArgs& a, std::ostream& out) {
  const ModelCheckpoint ckpt = load_checkpoint(a.checkpoint);
  AudioFeatureSource source;
  std::vector<FoldResult> results;
  if (!a.manifest.empty()) {
    const auto records = read_manifest_csv(a.manifest);
    results.push_back(evaluate(ckpt.model, records, source, 0));
  } else {
    const auto folds = a.data.real_folds();
    for (int f : parse_folds(a.fold)) results.push_back(evaluate(ckpt.model, folds.at(static_cast<std::size_t>(f)).val, source, f));
  }
  for (const auto& r : results) {
    out << nlohmann::json{{"fold", r.fold_id}, {"accuracy", r.accuracy}, {"loss", r.loss}}.dump() << '\n';
  }
  if (!a.out.empty()) write_fold_result(a.out, results.front(), ckpt.meta.regime);
}

struct ExportArgs {
  std::string checkpoint;
  std::vector<std::string> manifests;
  std::string fold;
  std::string out;
  int limit_per_genre = 0;
  DataArgs data;
};

void run_export(const ExportArgs& a, std::ostream& out) {
  const ModelCheckpoint ckpt = load_checkpoint(a.checkpoint);
  std::vector<TrackRecord> records;
  for (const auto& m : a.manifests) {
    const auto r = read_manifest_csv(m);
    records.insert(records.end(), r.begin(), r.end());
  }
  if (!a.fold.empty()) {
    const auto f = static_cast<std::size_t>(parse_folds(a.fold).front());
    if (a.data.has_real()) {
      const auto real = a.data.real_folds();
      records.insert(records.end(), real.at(f).val.begin(), real.at(f).val.end());
    }
    if (!a.data.synth_manifest.empty()) {
      const auto splits = random_splits(a.data.synth_records(), 3, a.data.val_fraction, a.data.split_seed);
      records.insert(records.end(), splits.at(f).val.begin(), splits.at(f).val.end());
    }
  }
  if (records.empty()) throw Error(ErrorCode::UsageError, "no records: give --manifest or --fold with data flags");
  if (a.limit_per_genre > 0) {
    std::map<std::pair<std::string, Domain>, int> taken;
    std::vector<TrackRecord> kept;
    for (const auto& r : records)
      if (taken[{r.genre, r.domain}]++ < a.limit_per_genre) kept.push_back(r);
    records = std::move(kept);
  }
  AudioFeatureSource source;
  const auto emb = extract_embeddings(ckpt.model, records, source);
  write_embeddings_jsonl(a.out, emb);
  out << nlohmann::json{{"records", emb.size()}, {"out", a.out}}.dump() << '\n';
}

struct TsneArgs {
  std::string embeddings;
  std::string out;
  std::vector<std::string> genres;
  bool all_genres = false;
  double perplexity = 30.0;
  int iterations = 1000;
  std::uint64_t seed = 0;
  std::string points_out;
  std::string title;
};

void run_tsne(const TsneArgs& a, std::ostream& out) {
  auto records = read_embeddings_jsonl(a.embeddings);
  ScatterOptions opt;
  if (a.all_genres) {
    opt.genres.clear();
  } else if (!a.genres.empty()) {
    for (const auto& g : a.genres) require_genre(g);
    opt.genres = a.genres;
  }
  opt.title = a.title;
  if (!opt.genres.empty()) {
    const std::set<std::string> keep(opt.genres.begin(), opt.genres.end());
    std::erase_if(records, [&](const EmbeddingRecord& r) { return !keep.count(r.genre); });
  }
  if (records.empty()) throw Error(ErrorCode::EmptyPlot, "no embeddings left after the genre filter");
  std::vector<std::vector<float>> rows;
  for (const auto& r : records) rows.push_back(r.embedding);
  TsneOptions topt;
  topt.perplexity = a.perplexity;
  topt.iterations = a.iterations;
  topt.seed = a.seed;
  const auto pts = tsne_project(rows, topt);
  std::vector<ScatterPoint> scatter;
  std::vector<csv::Row> table{{"id", "genre", "domain", "x", "y"}};
  for (std::size_t i = 0; i < pts.size(); ++i) {
    scatter.push_back({pts[i][0], pts[i][1], records[i].genre, records[i].domain});
    table.push_back({records[i].id, records[i].genre, std::string(to_string(records[i].domain)),
                     csv::format_number(pts[i][0]), csv::format_number(pts[i][1])});
  }
  emit_scatter(a.out, scatter, opt);
  if (!a.points_out.empty()) csv::write_file(a.points_out, table);
  out << nlohmann::json{{"points", pts.size()}, {"out", a.out}}.dump() << '\n';
}

struct ReportArgs {
  std::string runs = "runs";
  std::optional<std::uint64_t> seed;
  std::string out_csv;
  std::string out_text;
};

void run_report(const ReportArgs& a, std::ostream& out) {
  std::map<RegimeKind, std::vector<FoldResult>> by_regime;
  for (RegimeKind k : kAllRegimes) {
    const fs::path base = fs::path(a.runs) / std::string(to_string(k));
    if (!fs::is_directory(base)) continue;
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(base)) {
      if (e.path().filename() != "result.json") continue;
      if (a.seed && e.path().parent_path().filename() != std::to_string(*a.seed)) continue;
      files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) by_regime[k].push_back(read_fold_result(f));
  }
  if (by_regime.empty()) throw Error(ErrorCode::UsageError, "no result.json files under " + a.runs);
  std::vector<RegimeSummary> rows;
  for (const auto& [k, results] : by_regime) rows.push_back({k, aggregate_folds(results)});
  const fs::path csv_file = a.out_csv.empty() ? fs::path(a.runs) / "report.csv" : fs::path(a.out_csv);
  const fs::path text_file = a.out_text.empty() ? fs::path(a.runs) / "report.txt" : fs::path(a.out_text);
  emit_report(csv_file, text_file, rows);
  out << format_report_text(rows);
}

struct GenPromptsArgs {
  std::string out;
  int n_per_genre = 1000;
  std::vector<std::string> genres;
  std::string model = std::string(promptgen::kDefaultModel);
  int max_in_flight = 4;
  int max_attempts = 6;
  int initial_delay_ms = 500;
};

void run_gen_prompts(const GenPromptsArgs& a, std::ostream& out, std::ostream& err) {
  auto client = promptgen::HttpChatClient::from_environment();
  promptgen::CorpusOptions opt;
  opt.genres = a.genres;
  opt.n_per_genre = a.n_per_genre;
  opt.model_name = a.model;
  opt.max_in_flight = a.max_in_flight;
  opt.retry.max_attempts = a.max_attempts;
  opt.retry.initial_delay = std::chrono::milliseconds(a.initial_delay_ms);
  opt.log = [&](const std::string& line) { err << line << '\n'; };
  const auto r = promptgen::generate_prompt_corpus(a.out, *client, opt);
  out << nlohmann::json{{"records", r.records.size()}, {"generated", r.generated}, {"skipped", r.skipped},
                        {"retries", r.retries}}
             .dump()
      << '\n';
}

struct BuildPromptsArgs {
  std::string corpus;
  std::string out;
};

void run_build_prompts(const BuildPromptsArgs& a, std::ostream& out) {
  const auto corpus = promptgen::read_corpus(a.corpus);
  std::ofstream file(a.out, std::ios::trunc);
  if (!file) throw Error(ErrorCode::IoError, "cannot write " + a.out);
  for (const auto& r : corpus) {
    file << nlohmann::json{{"id", r.id}, {"genre", r.genre},
                           {"musicgen_prompt", promptgen::build_musicgen_prompt(r.genre, r.llm_description)}}
                .dump()
         << '\n';
  }
  out << nlohmann::json{{"prompts", corpus.size()}, {"out", a.out}}.dump() << '\n';
}

struct GenAudioArgs {
  std::string corpus;
  std::string adapter;
  std::string out_dir;
  std::string manifest;
  double duration = 30.0;
  int timeout_s = 600;
  int limit = 0;
};

void run_gen_audio(const GenAudioArgs& a, std::ostream& out, std::ostream& err) {
  const auto corpus = promptgen::read_corpus(a.corpus);
  std::set<std::string> done;
  if (fs::exists(a.manifest)) {
    const auto rows = csv::read_file(a.manifest);
    for (std::size_t i = 1; i < rows.size(); ++i)
      if (rows[i].size() >= 5) done.insert(rows[i][4]);
  }
  promptgen::SubprocessAdapter adapter(split_words(a.adapter), std::chrono::seconds(a.timeout_s));
  int produced = 0;
  for (const auto& r : corpus) {
    if (a.limit > 0 && produced >= a.limit) break;
    if (done.count(r.id)) continue;
    const TrackRecord t = promptgen::request_audio(r, a.duration, adapter, a.out_dir, a.manifest);
    err << r.id << " -> " << t.path << '\n';
    ++produced;
  }
  out << nlohmann::json{{"generated", produced}, {"skipped", done.size()}, {"manifest", a.manifest}}.dump() << '\n';
}

struct FeatureArgs {
  std::string manifest;
  std::string out_dir;
  std::string crop = "center";
};

void run_extract(const FeatureArgs& a, std::ostream& out) {
  if (a.crop != "center" && a.crop != "full") throw Error(ErrorCode::UsageError, "--crop must be center or full");
  const auto records = read_manifest_csv(a.manifest);
  const auto& fb = default_filterbank();
  Rng unused(0);
  std::size_t n = 0;
  for (const auto& r : records) {
    AudioClip clip = load_audio(r.path);
    if (a.crop == "center") clip = crop(clip, CropMode::Center, unused);
    const fs::path stem = fs::path(a.out_dir) / r.genre / fs::path(r.path).stem();
    fs::create_directories(stem.parent_path());
    write_feature_cache(stem, mel_spectrogram(clip, fb), r.path, r.genre);
    ++n;
  }
  out << nlohmann::json{{"features", n}, {"out_dir", a.out_dir}}.dump() << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Genre tagging with synthetic training data"};
  app.name("synthtag");
  app.require_subcommand(1);

  FeatureArgs feat;
  auto* c_feat = app.add_subcommand("extract-features", "Cache log-mel spectrograms for a manifest");
  c_feat->add_option("--manifest", feat.manifest)->required()->check(CLI::ExistingFile);
  c_feat->add_option("--out-dir", feat.out_dir)->required();
  c_feat->add_option("--crop", feat.crop, "center (10 s) or full");

  GenPromptsArgs gp;
  auto* c_gp = app.add_subcommand("gen-prompts", "Write the LLM description corpus (JSON Lines)");
  c_gp->add_option("--out", gp.out)->required();
  c_gp->add_option("--n-per-genre", gp.n_per_genre)->check(CLI::PositiveNumber);
  c_gp->add_option("--genres", gp.genres);
  c_gp->add_option("--model", gp.model);
  c_gp->add_option("--max-in-flight", gp.max_in_flight)->check(CLI::PositiveNumber);
  c_gp->add_option("--max-attempts", gp.max_attempts)->check(CLI::PositiveNumber);
  c_gp->add_option("--initial-delay-ms", gp.initial_delay_ms);

  BuildPromptsArgs bp;
  auto* c_bp = app.add_subcommand("build-musicgen-prompts", "Derive generator prompts from a corpus");
  c_bp->add_option("--corpus", bp.corpus)->required()->check(CLI::ExistingFile);
  c_bp->add_option("--out", bp.out)->required();

  GenAudioArgs ga;
  auto* c_ga = app.add_subcommand("generate-audio", "Render corpus prompts through a generation adapter");
  c_ga->add_option("--corpus", ga.corpus)->required()->check(CLI::ExistingFile);
  c_ga->add_option("--adapter", ga.adapter, "Adapter command line")->required();
  c_ga->add_option("--out-dir", ga.out_dir)->required();
  c_ga->add_option("--manifest", ga.manifest)->required();
  c_ga->add_option("--duration", ga.duration)->check(CLI::PositiveNumber);
  c_ga->add_option("--timeout", ga.timeout_s, "Seconds per clip")->check(CLI::PositiveNumber);
  c_ga->add_option("--limit", ga.limit);

  TrainArgs tr;
  auto* c_tr = app.add_subcommand("train", "Train one regime on one or all folds");
  // CLI11 only reads config files on the root app, so train falls through to it and the
  // snapshot keeps its keys under [train].
  app.set_config("--config", "", "INI/TOML file of train option values; flags override");
  c_tr->fallthrough();
  c_tr->add_option("--regime", tr.regime, "e2e-real|e2e-synth|e2e-add|e2e-da|tl|ft")->required();
  c_tr->add_option("--fold", tr.fold, "0, 1, 2 or all");
  c_tr->add_option("--seed", tr.seed);
  c_tr->add_option("--init-checkpoint", tr.init_checkpoint, "Checkpoint for tl/ft; {fold} expands to the fold id");
  c_tr->add_option("--out", tr.out, "Runs directory");
  c_tr->add_option("--batch-size", tr.batch_size)->check(CLI::PositiveNumber);
  c_tr->add_option("--lr", tr.lr);
  c_tr->add_option("--patience", tr.patience);
  c_tr->add_option("--max-epochs", tr.max_epochs);
  c_tr->add_option("--gamma", tr.gamma);
  c_tr->add_option("--margin", tr.margin);
  c_tr->add_option("--hinge", tr.hinge, "squared or ccsa");
  c_tr->add_option("--pairing", tr.pairing, "single or all");
  tr.data.add_to(c_tr);
  tr.model.add_to(c_tr);

  EvalArgs ev;
  auto* c_ev = app.add_subcommand("evaluate", "Center-crop accuracy and loss of a checkpoint");
  c_ev->add_option("--checkpoint", ev.checkpoint)->required()->check(CLI::ExistingFile);
  c_ev->add_option("--manifest", ev.manifest)->check(CLI::ExistingFile);
  c_ev->add_option("--fold", ev.fold);
  c_ev->add_option("--out", ev.out);
  ev.data.add_to(c_ev);

  ExportArgs ex;
  auto* c_ex = app.add_subcommand("export-embeddings", "Write embedding-layer outputs as JSON Lines");
  c_ex->add_option("--checkpoint", ex.checkpoint)->required()->check(CLI::ExistingFile);
  c_ex->add_option("--manifest", ex.manifests)->check(CLI::ExistingFile);
  c_ex->add_option("--fold", ex.fold, "Take the validation tracks of this fold");
  c_ex->add_option("--limit-per-genre", ex.limit_per_genre);
  c_ex->add_option("--out", ex.out)->required();
  ex.data.add_to(c_ex);

  TsneArgs ts;
  auto* c_ts = app.add_subcommand("tsne-plot", "Project embeddings with t-SNE and draw an SVG scatter");
  c_ts->add_option("--embeddings", ts.embeddings)->required()->check(CLI::ExistingFile);
  c_ts->add_option("--out", ts.out)->required();
  c_ts->add_option("--genres", ts.genres, "Genres to show (default: first three)");
  c_ts->add_flag("--all-genres", ts.all_genres);
  c_ts->add_option("--perplexity", ts.perplexity);
  c_ts->add_option("--iterations", ts.iterations);
  c_ts->add_option("--seed", ts.seed);
  c_ts->add_option("--points-out", ts.points_out, "CSV of projected points");
  c_ts->add_option("--title", ts.title);

  ReportArgs rp;
  auto* c_rp = app.add_subcommand("report", "Aggregate fold results into a results table");
  c_rp->add_option("--runs", rp.runs)->check(CLI::ExistingDirectory);
  c_rp->add_option("--seed", rp.seed);
  c_rp->add_option("--out-csv", rp.out_csv);
  c_rp->add_option("--out-text", rp.out_text);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    const CLI::App* sub = nullptr;
    for (const auto* s : app.get_subcommands()) sub = s;
    err << (sub ? sub->help() : app.help());
    print_error(err, "UsageError", e.what());
    return 2;
  }

  try {
    if (*c_feat) run_extract(feat, out);
    if (*c_gp) run_gen_prompts(gp, out, err);
    if (*c_bp) run_build_prompts(bp, out);
    if (*c_ga) run_gen_audio(ga, out, err);
    if (*c_tr) run_train(tr, out, err);
    if (*c_ev) run_evaluate(ev, out);
    if (*c_ex) run_export(ex, out);
    if (*c_ts) run_tsne(ts, out);
    if (*c_rp) run_report(rp, out);
  } catch (const Error& e) {
    print_error(err, std::string(to_string(e.code())), strip_code(e));
    return e.code() == ErrorCode::UsageError ? 2 : 1;
  } catch (const std::exception& e) {
    print_error(err, "InternalError", e.what());
    return 1;
  }
  return 0;
}

}  // namespace synthtag::cli
