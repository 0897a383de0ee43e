// Copyright 2026 The synthtag Authors
// SPDX-License-Identifier: Apache-2.0

#include "synthtag/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <random>

#include "synthtag/error.hpp"
#include "synthtag/kernels.hpp"
#include "synthtag/tar.hpp"

namespace synthtag {
namespace {

constexpr float kNormEps = 1e-5f;

struct FrontBranch {
  std::size_t height;
  std::size_t width;
  std::size_t channels;
};

std::vector<FrontBranch> front_branches(const ModelConfig& c) {
  std::vector<FrontBranch> out;
  std::size_t k = 0;
  for (int h : c.timbral_heights) {
    out.push_back({static_cast<std::size_t>(h), static_cast<std::size_t>(c.timbral_width),
                   static_cast<std::size_t>(c.front_channels[k++])});
  }
  for (int w : c.temporal_widths) {
    out.push_back({1, static_cast<std::size_t>(w), static_cast<std::size_t>(c.front_channels[k++])});
  }
  return out;
}

void relu_inplace(std::span<float> v) {
  for (auto& x : v) x = x > 0.0f ? x : 0.0f;
}

void softmax(std::span<const float> logits, std::span<float> probs) {
  const float mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    probs[i] = std::exp(logits[i] - mx);
    sum += probs[i];
  }
  for (auto& p : probs) p = static_cast<float>(p / sum);
}

}  // namespace

int ModelConfig::front_total_channels() const {
  return std::accumulate(front_channels.begin(), front_channels.end(), 0);
}

void ModelConfig::validate() const {
  auto fail = [](const std::string& why) { throw Error(ErrorCode::InvalidConfig, why); };
  if (n_mels < 1) fail("n_mels must be positive");
  if (n_classes < 2) fail("n_classes must be at least 2");
  if (embedding_dim < 1) fail("embedding_dim must be positive");
  if (front_shape_count() == 0) fail("at least one front-end kernel shape is required");
  if (front_channels.size() != front_shape_count()) {
    fail("front_channels lists " + std::to_string(front_channels.size()) + " counts for " +
         std::to_string(front_shape_count()) + " kernel shapes");
  }
  for (int c : front_channels)
    if (c < 1) fail("front-end filter counts must be positive");
  for (int h : timbral_heights) {
    if (h < 1) fail("timbral heights must be positive");
    if (h > n_mels) fail("timbral height " + std::to_string(h) + " exceeds " + std::to_string(n_mels) + " mel bands");
  }
  if (!timbral_heights.empty() && timbral_width < 1) fail("timbral_width must be positive");
  for (int w : temporal_widths)
    if (w < 1) fail("temporal widths must be positive");
  if (backend_layers < 0) fail("backend_layers must be non-negative");
  if (backend_layers > 0 && (backend_channels < 1 || backend_kernel < 1)) {
    fail("backend channels and kernel must be positive");
  }
}

nlohmann::json to_json(const ModelConfig& c) {
  return {{"n_mels", c.n_mels},
          {"n_classes", c.n_classes},
          {"embedding_dim", c.embedding_dim},
          {"timbral_heights", c.timbral_heights},
          {"timbral_width", c.timbral_width},
          {"temporal_widths", c.temporal_widths},
          {"front_channels", c.front_channels},
          {"backend_channels", c.backend_channels},
          {"backend_kernel", c.backend_kernel},
          {"backend_layers", c.backend_layers}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.n_mels = j.at("n_mels").get<int>();
  c.n_classes = j.at("n_classes").get<int>();
  c.embedding_dim = j.at("embedding_dim").get<int>();
  c.timbral_heights = j.at("timbral_heights").get<std::vector<int>>();
  c.timbral_width = j.at("timbral_width").get<int>();
  c.temporal_widths = j.at("temporal_widths").get<std::vector<int>>();
  c.front_channels = j.at("front_channels").get<std::vector<int>>();
  c.backend_channels = j.at("backend_channels").get<int>();
  c.backend_kernel = j.at("backend_kernel").get<int>();
  c.backend_layers = j.at("backend_layers").get<int>();
  return c;
}

std::size_t ParameterSet::add(std::string name, std::vector<std::size_t> shape) {
  if (index_.count(name)) throw Error(ErrorCode::InvalidArgument, "duplicate parameter " + name);
  const std::size_t n = std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
  index_[name] = params_.size();
  params_.push_back({std::move(name), std::move(shape), std::vector<float>(n, 0.0f), true});
  return params_.size() - 1;
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.values.size();
  return n;
}

std::size_t ParameterSet::index_of(const std::string& name) const {
  const auto it = index_.find(name);
  if (it == index_.end()) throw Error(ErrorCode::InvalidArgument, "unknown parameter " + name);
  return it->second;
}

Gradients::Gradients(const ParameterSet& params) {
  values.reserve(params.size());
  for (const auto& p : params) values.emplace_back(p.values.size(), 0.0f);
}

void Gradients::zero() {
  for (auto& v : values) std::fill(v.begin(), v.end(), 0.0f);
}

void Gradients::scale(float factor) {
  for (auto& v : values)
    for (auto& x : v) x *= factor;
}

Model::Model(const ModelConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  const auto branches = front_branches(config_);
  for (std::size_t k = 0; k < branches.size(); ++k) {
    const auto& b = branches[k];
    const std::string prefix = "front." + std::to_string(k) + ".";
    layout_.front_w.push_back(params_.add(prefix + "weight", {b.channels, b.height, b.width}));
    layout_.front_b.push_back(params_.add(prefix + "bias", {b.channels}));
  }
  std::size_t in_ch = static_cast<std::size_t>(config_.front_total_channels());
  const auto bc = static_cast<std::size_t>(config_.backend_channels);
  for (int l = 0; l < config_.backend_layers; ++l) {
    const std::string prefix = "backend." + std::to_string(l) + ".";
    layout_.conv_w.push_back(params_.add(prefix + "conv.weight", {bc, in_ch, static_cast<std::size_t>(config_.backend_kernel)}));
    layout_.conv_b.push_back(params_.add(prefix + "conv.bias", {bc}));
    layout_.norm_g.push_back(params_.add(prefix + "norm.gain", {bc}));
    layout_.norm_b.push_back(params_.add(prefix + "norm.bias", {bc}));
    in_ch = bc;
  }
  const auto emb = static_cast<std::size_t>(config_.embedding_dim);
  layout_.dense_w = params_.add("head.dense.weight", {emb, 2 * in_ch});
  layout_.dense_b = params_.add("head.dense.bias", {emb});
  layout_.head_norm_g = params_.add("head.norm.gain", {emb});
  layout_.head_norm_b = params_.add("head.norm.bias", {emb});
  layout_.cls_w = params_.add("head.classifier.weight", {static_cast<std::size_t>(config_.n_classes), emb});
  layout_.cls_b = params_.add("head.classifier.bias", {static_cast<std::size_t>(config_.n_classes)});
  initialize(seed, false);
}

void Model::initialize(std::uint64_t seed, bool head_only) {
  Rng rng(seed);
  for (auto& p : params_) {
    if (head_only && !is_head_parameter(p.name)) continue;
    const bool is_weight = p.name.ends_with(".weight");
    if (p.name.ends_with(".gain")) {
      std::fill(p.values.begin(), p.values.end(), 1.0f);
    } else if (!is_weight) {
      std::fill(p.values.begin(), p.values.end(), 0.0f);
    } else {
      // fan-in = product of all but the leading (output) dimension
      const std::size_t fan_in = p.values.size() / p.shape.front();
      const bool feeds_relu = p.name != "head.classifier.weight";
      const float bound = static_cast<float>((feeds_relu ? std::sqrt(6.0) : 1.0) / std::sqrt(static_cast<double>(fan_in)));
      std::uniform_real_distribution<float> dist(-bound, bound);
      for (auto& v : p.values) v = dist(rng);
    }
  }
}

void Model::reinitialize_head(std::uint64_t seed) { initialize(seed, true); }

bool Model::any_trainable_below_head() const {
  return std::any_of(params_.begin(), params_.end(),
                     [](const Parameter& p) { return p.trainable && !is_head_parameter(p.name); });
}

void Model::forward_item(const MelSpectrogram& input, ForwardCache& cache) const {
  const auto F = static_cast<std::size_t>(config_.n_mels);
  const std::size_t T = input.frames;
  if (input.bands != F || input.values.size() != F * T || T == 0) {
    throw Error(ErrorCode::ShapeMismatch, "model expects " + std::to_string(F) + " x T input, got " +
                                              std::to_string(input.bands) + " x " + std::to_string(T));
  }
  cache.frames = T;

  // Input layer norm over the whole spectrogram, no affine terms.
  cache.input.resize(F * T);
  {
    double m = 0.0;
    for (float v : input.values) m += v;
    m /= static_cast<double>(input.values.size());
    double var = 0.0;
    for (float v : input.values) var += (v - m) * (v - m);
    var /= static_cast<double>(input.values.size());
    const float mf = static_cast<float>(m);
    const float r = static_cast<float>(1.0 / std::sqrt(var + kNormEps));
    for (std::size_t i = 0; i < input.values.size(); ++i) cache.input[i] = (input.values[i] - mf) * r;
  }

  const auto branches = front_branches(config_);
  const std::size_t Cf = static_cast<std::size_t>(config_.front_total_channels());
  cache.front.resize(Cf * T);
  cache.front_argmax.resize(Cf * T);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < branches.size(); ++k) {
    const auto& b = branches[k];
    const kernels::FrontShape shape{F, T, b.channels, b.height, b.width};
    kernels::front_conv_maxfreq(cache.input, params_[layout_.front_w[k]].values, params_[layout_.front_b[k]].values,
                                shape, std::span(cache.front).subspan(offset * T, b.channels * T),
                                std::span(cache.front_argmax).subspan(offset * T, b.channels * T));
    offset += b.channels;
  }
  cache.front_out = cache.front;
  relu_inplace(cache.front_out);

  cache.blocks.resize(static_cast<std::size_t>(config_.backend_layers));
  const std::vector<float>* prev = &cache.front_out;
  std::size_t in_ch = Cf;
  const auto bc = static_cast<std::size_t>(config_.backend_channels);
  for (std::size_t l = 0; l < cache.blocks.size(); ++l) {
    auto& blk = cache.blocks[l];
    const kernels::Conv1dShape shape{in_ch, bc, T, static_cast<std::size_t>(config_.backend_kernel)};
    blk.conv.resize(bc * T);
    kernels::conv1d(*prev, params_[layout_.conv_w[l]].values, params_[layout_.conv_b[l]].values, shape, blk.conv);
    blk.mean.resize(T);
    blk.rstd.resize(T);
    blk.norm.resize(bc * T);
    kernels::layer_norm_channels(blk.conv, params_[layout_.norm_g[l]].values, params_[layout_.norm_b[l]].values, bc,
                                 T, kNormEps, blk.norm, blk.mean, blk.rstd);
    blk.out = blk.norm;
    relu_inplace(blk.out);
    if (in_ch == bc) {
      for (std::size_t i = 0; i < blk.out.size(); ++i) blk.out[i] += (*prev)[i];
    }
    prev = &blk.out;
    in_ch = bc;
  }

  // Temporal max and mean pooling.
  cache.pooled.assign(2 * in_ch, 0.0f);
  cache.pool_argmax.assign(in_ch, 0);
  for (std::size_t c = 0; c < in_ch; ++c) {
    const float* row = prev->data() + c * T;
    std::size_t best = 0;
    double sum = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      if (row[t] > row[best]) best = t;
      sum += row[t];
    }
    cache.pooled[c] = row[best];
    cache.pool_argmax[c] = static_cast<int>(best);
    cache.pooled[in_ch + c] = static_cast<float>(sum / static_cast<double>(T));
  }

  const auto E = static_cast<std::size_t>(config_.embedding_dim);
  cache.dense.resize(E);
  kernels::dense(cache.pooled, params_[layout_.dense_w].values, params_[layout_.dense_b].values, 2 * in_ch, E,
                 cache.dense);
  cache.dense_norm.resize(E);
  kernels::layer_norm_channels(cache.dense, params_[layout_.head_norm_g].values, params_[layout_.head_norm_b].values,
                               E, 1, kNormEps, cache.dense_norm, std::span(&cache.dense_mean, 1),
                               std::span(&cache.dense_rstd, 1));
  cache.embedding = cache.dense_norm;
  relu_inplace(cache.embedding);

  const auto N = static_cast<std::size_t>(config_.n_classes);
  cache.logits.resize(N);
  kernels::dense(cache.embedding, params_[layout_.cls_w].values, params_[layout_.cls_b].values, E, N, cache.logits);
  cache.probs.resize(N);
  softmax(cache.logits, cache.probs);
}

ForwardOutput Model::forward(std::span<const MelSpectrogram> batch) const {
  ForwardOutput out;
  out.batch = batch.size();
  out.embedding_dim = static_cast<std::size_t>(config_.embedding_dim);
  out.n_classes = static_cast<std::size_t>(config_.n_classes);
  for (const auto& m : batch) {
    if (m.frames != batch.front().frames) {
      throw Error(ErrorCode::ShapeMismatch, "all inputs in a batch must share the frame count");
    }
  }
  out.embeddings.resize(out.batch * out.embedding_dim);
  out.probs.resize(out.batch * out.n_classes);
  ForwardCache cache;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    forward_item(batch[i], cache);
    std::copy(cache.embedding.begin(), cache.embedding.end(), out.embeddings.begin() + static_cast<std::ptrdiff_t>(i * out.embedding_dim));
    std::copy(cache.probs.begin(), cache.probs.end(), out.probs.begin() + static_cast<std::ptrdiff_t>(i * out.n_classes));
  }
  return out;
}

void Model::backward_item(const ForwardCache& cache, std::span<const float> grad_embedding,
                          std::span<const float> grad_logits, Gradients& grads) const {
  const auto F = static_cast<std::size_t>(config_.n_mels);
  const std::size_t T = cache.frames;
  const auto E = static_cast<std::size_t>(config_.embedding_dim);
  const auto N = static_cast<std::size_t>(config_.n_classes);
  auto g = [&](std::size_t idx) { return std::span<float>(grads.values[idx]); };

  std::vector<float> d_emb(E, 0.0f);
  if (!grad_embedding.empty()) std::copy(grad_embedding.begin(), grad_embedding.end(), d_emb.begin());
  if (!grad_logits.empty()) {
    std::vector<float> from_cls(E);
    kernels::dense_backward(cache.embedding, params_[layout_.cls_w].values, grad_logits, E, N, from_cls,
                            g(layout_.cls_w), g(layout_.cls_b));
    for (std::size_t i = 0; i < E; ++i) d_emb[i] += from_cls[i];
  }
  for (std::size_t i = 0; i < E; ++i) {
    if (cache.dense_norm[i] <= 0.0f) d_emb[i] = 0.0f;
  }
  std::vector<float> d_dense(E);
  kernels::layer_norm_channels_backward(cache.dense, d_emb, params_[layout_.head_norm_g].values,
                                        std::span(&cache.dense_mean, 1), std::span(&cache.dense_rstd, 1), E, 1,
                                        d_dense, g(layout_.head_norm_g), g(layout_.head_norm_b));
  const std::size_t pooled = cache.pooled.size();
  std::vector<float> d_pooled(pooled);
  kernels::dense_backward(cache.pooled, params_[layout_.dense_w].values, d_dense, pooled, E, d_pooled,
                          g(layout_.dense_w), g(layout_.dense_b));

  if (!any_trainable_below_head()) return;

  const std::size_t C = pooled / 2;
  std::vector<float> d_h(C * T, 0.0f);
  const float inv_t = 1.0f / static_cast<float>(T);
  for (std::size_t c = 0; c < C; ++c) {
    float* row = d_h.data() + c * T;
    const float avg = d_pooled[C + c] * inv_t;
    for (std::size_t t = 0; t < T; ++t) row[t] = avg;
    row[static_cast<std::size_t>(cache.pool_argmax[c])] += d_pooled[c];
  }

  const std::size_t Cf = static_cast<std::size_t>(config_.front_total_channels());
  const auto bc = static_cast<std::size_t>(config_.backend_channels);
  for (std::size_t l = cache.blocks.size(); l-- > 0;) {
    const auto& blk = cache.blocks[l];
    const std::vector<float>& block_in = l == 0 ? cache.front_out : cache.blocks[l - 1].out;
    const std::size_t in_ch = l == 0 ? Cf : bc;
    std::vector<float> d_norm(bc * T);
    for (std::size_t i = 0; i < d_norm.size(); ++i) d_norm[i] = blk.norm[i] > 0.0f ? d_h[i] : 0.0f;
    std::vector<float> d_conv(bc * T);
    kernels::layer_norm_channels_backward(blk.conv, d_norm, params_[layout_.norm_g[l]].values, blk.mean, blk.rstd,
                                          bc, T, d_conv, g(layout_.norm_g[l]), g(layout_.norm_b[l]));
    const kernels::Conv1dShape shape{in_ch, bc, T, static_cast<std::size_t>(config_.backend_kernel)};
    kernels::conv1d_backward_weights(block_in, d_conv, shape, g(layout_.conv_w[l]), g(layout_.conv_b[l]));
    std::vector<float> d_in(in_ch * T);
    kernels::conv1d_backward_input(d_conv, params_[layout_.conv_w[l]].values, shape, d_in);
    if (in_ch == bc) {
      for (std::size_t i = 0; i < d_in.size(); ++i) d_in[i] += d_h[i];
    }
    d_h = std::move(d_in);
  }

  // d_h is now the gradient w.r.t. the post-ReLU front-end output.
  for (std::size_t i = 0; i < d_h.size(); ++i) {
    if (cache.front[i] <= 0.0f) d_h[i] = 0.0f;
  }
  const auto branches = front_branches(config_);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < branches.size(); ++k) {
    const auto& b = branches[k];
    const kernels::FrontShape shape{F, T, b.channels, b.height, b.width};
    kernels::front_conv_maxfreq_backward(cache.input, std::span(d_h).subspan(offset * T, b.channels * T),
                                         std::span(cache.front_argmax).subspan(offset * T, b.channels * T), shape,
                                         g(layout_.front_w[k]), g(layout_.front_b[k]));
    offset += b.channels;
  }
}

Model build_model(const ModelConfig& config, std::uint64_t seed) { return Model(config, seed); }

bool is_head_parameter(const std::string& name) { return name.starts_with("head."); }

void freeze_feature_layers(Model& model) {
  for (auto& p : model.params()) p.trainable = is_head_parameter(p.name);
}

void save_checkpoint(const Model& model, const TrainingMeta& meta, const std::filesystem::path& file) {
  nlohmann::json index;
  index["format"] = "synthtag-checkpoint";
  index["version"] = 1;
  index["config"] = to_json(model.config());
  index["meta"] = {{"regime", meta.regime}, {"epoch", meta.epoch}, {"val_loss", meta.val_loss}};
  std::vector<tar::Entry> entries;
  entries.push_back({"index.json", {}});
  auto& arrays = index["arrays"];
  arrays = nlohmann::json::array();
  for (const auto& p : model.params()) {
    tar::Entry e;
    e.name = "params/" + p.name + ".f32";
    e.data.resize(p.values.size() * sizeof(float));
    std::memcpy(e.data.data(), p.values.data(), e.data.size());
    arrays.push_back({{"name", p.name}, {"shape", p.shape}, {"dtype", "float32"}, {"file", e.name}});
    entries.push_back(std::move(e));
  }
  const std::string text = index.dump(2);
  entries.front().data.assign(text.begin(), text.end());
  tar::write_archive(file, entries);
}

ModelCheckpoint load_checkpoint(const std::filesystem::path& file) {
  std::vector<tar::Entry> entries = tar::read_archive(file);
  auto corrupt = [&](const std::string& why) -> Error {
    return Error(ErrorCode::CorruptCheckpoint, file.string() + ": " + why);
  };
  std::map<std::string, const tar::Entry*> by_name;
  for (const auto& e : entries) by_name[e.name] = &e;
  const auto idx_it = by_name.find("index.json");
  if (idx_it == by_name.end()) throw corrupt("missing index.json");

  nlohmann::json index;
  ModelConfig config;
  TrainingMeta meta;
  try {
    index = nlohmann::json::parse(idx_it->second->data.begin(), idx_it->second->data.end());
    if (index.value("format", "") != "synthtag-checkpoint") throw corrupt("not a synthtag checkpoint");
    config = model_config_from_json(index.at("config"));
    meta.regime = index.at("meta").value("regime", "");
    meta.epoch = index.at("meta").value("epoch", 0);
    meta.val_loss = index.at("meta").value("val_loss", 0.0);
  } catch (const nlohmann::json::exception& e) {
    throw corrupt(std::string("bad index.json: ") + e.what());
  }
  Model model = [&] {
    try {
      return Model(config, 0);
    } catch (const Error& e) {
      throw corrupt(std::string("stored config is invalid: ") + e.what());
    }
  }();

  std::vector<bool> seen(model.params().size(), false);
  for (const auto& a : index.at("arrays")) {
    const std::string name = a.value("name", "");
    if (!model.params().contains(name)) throw corrupt("unexpected parameter " + name);
    const std::size_t i = model.params().index_of(name);
    if (seen[i]) throw corrupt("parameter listed twice: " + name);
    seen[i] = true;
    Parameter& p = model.params()[i];
    if (a.value("dtype", "") != "float32") throw corrupt("parameter " + name + " is not float32");
    if (a.at("shape").get<std::vector<std::size_t>>() != p.shape) throw corrupt("shape mismatch for " + name);
    const auto blob = by_name.find(a.value("file", ""));
    if (blob == by_name.end()) throw corrupt("missing array file for " + name);
    if (blob->second->data.size() != p.values.size() * sizeof(float)) throw corrupt("wrong byte count for " + name);
    std::memcpy(p.values.data(), blob->second->data.data(), blob->second->data.size());
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end()) throw corrupt("checkpoint is missing parameters");
  return {std::move(model), meta};
}

ModelCheckpoint load_checkpoint(const std::filesystem::path& file, const ModelConfig& expected) {
  ModelCheckpoint ckpt = load_checkpoint(file);
  if (!(ckpt.model.config() == expected)) {
    throw Error(ErrorCode::ConfigMismatch, file.string() + ": stored architecture " +
                                               to_json(ckpt.model.config()).dump() + " differs from requested " +
                                               to_json(expected).dump());
  }
  return ckpt;
}

}  // namespace synthtag
