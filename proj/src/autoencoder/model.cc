// Copyright 2026 The LEA Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "lea/autoencoder/model.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <thread>

#include "lea/error.h"
#include "lea/io/io.h"

namespace lea {

namespace {

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

constexpr std::size_t kInferenceChunk = 256;

}  // namespace

Tensor sinusoidal_positions(std::size_t tokens, std::size_t dim) {
  Tensor pe({tokens, dim});
  for (std::size_t t = 0; t < tokens; ++t) {
    for (std::size_t i = 0; i < dim; ++i) {
      const double freq = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / static_cast<double>(dim));
      pe(t, i) = (i % 2 == 0) ? std::sin(static_cast<double>(t) * freq)
                              : std::cos(static_cast<double>(t) * freq);
    }
  }
  return pe;
}

AutoencoderModel::AutoencoderModel(ModelConfig config, std::uint64_t seed)
    : config_(std::move(config)) {
  RngStream rng(seed, 0x696e6974ULL);
  for (const auto& [name, shape] : expected_param_shapes(config_)) {
    Tensor t(shape);
    if (ends_with(name, ".g")) {
      std::fill(t.storage().begin(), t.storage().end(), 1.0);
    } else if (ends_with(name, ".b")) {
      // zeros
    } else if (name == "enc.cls" || name == "dec.mask" || ends_with(name, "roi_type")) {
      for (auto& v : t.storage()) v = 0.02 * rng.normal();
    } else if (ends_with(name, ".conv.w")) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(config_.conv_kernel));
      for (auto& v : t.storage()) v = rng.uniform(-bound, bound);
    } else if (ends_with(name, ".mix.w")) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(config_.channels_per_roi));
      for (auto& v : t.storage()) v = rng.uniform(-bound, bound);
    } else {
      const double bound = std::sqrt(6.0 / static_cast<double>(shape[0] + shape[1]));
      for (auto& v : t.storage()) v = rng.uniform(-bound, bound);
    }
    params_.add(name, std::move(t), ends_with(name, ".w"));
  }
  enc_pos_ = sinusoidal_positions(config_.tokens(), config_.enc_dim);
  dec_pos_ = sinusoidal_positions(config_.tokens(), config_.dec_dim);
}

AutoencoderModel::AutoencoderModel(ModelConfig config, ParamStore params)
    : config_(std::move(config)) {
  const auto expected = expected_param_shapes(config_);
  for (const auto& [name, shape] : expected) {
    if (!params.contains(name)) throw FormatError("missing tensor '" + name + "'");
    const Tensor& t = params.at(name);
    if (t.shape() != shape) {
      throw FormatError("tensor '" + name + "' has shape " + shape_to_string(t.shape()) +
                        " but the model config implies " + shape_to_string(shape));
    }
    if (!t.all_finite()) throw FormatError("tensor '" + name + "' contains non-finite values");
    params_.add(name, t, ends_with(name, ".w"));
  }
  if (params.size() != expected.size()) {
    for (const auto& e : params.entries()) {
      if (!params_.contains(e.name)) throw FormatError("unexpected tensor '" + e.name + "'");
    }
  }
  enc_pos_ = sinusoidal_positions(config_.tokens(), config_.enc_dim);
  dec_pos_ = sinusoidal_positions(config_.tokens(), config_.dec_dim);
}

void AutoencoderModel::check_width(const Tensor& signals) const {
  if (signals.ndim() != 2 || signals.cols() != config_.layout.total()) {
    throw ShapeError("signal length mismatch: expected L = " + std::to_string(config_.layout.total()) +
                     ", got " + std::to_string(signals.ndim() == 2 ? signals.cols() : signals.size()));
  }
}

Var AutoencoderModel::roi_embed(Tape& tape, Var signals) const {
  std::vector<Var> parts;
  for (std::size_t i = 0; i < config_.layout.size(); ++i) {
    const std::string p = "embed.roi" + std::to_string(i);
    Var xi = ops::slice_cols(signals, config_.layout.offset(i), config_.layout[i].voxels);
    Var conv = ops::conv1d_same(xi, tape.param(p + ".conv.w"), tape.param(p + ".conv.b"));
    parts.push_back(ops::add_bias(ops::matmul(conv, tape.param(p + ".fc.w")), tape.param(p + ".fc.b")));
  }
  // Rows ordered ROI-major: i * (batch*C) + b * C + c.
  return ops::concat_rows(parts);
}

Var AutoencoderModel::block(Tape& tape, Var x, const std::string& prefix, std::size_t batch,
                            std::size_t heads, RngStream* dropout_rng) const {
  auto p = [&](const char* suffix) { return tape.param(prefix + suffix); };
  const std::size_t seq = config_.tokens();
  Var h = ops::layer_norm(x, p(".ln1.g"), p(".ln1.b"));
  const std::size_t dim = x.value().cols();
  Var qkv_bias = ops::concat_cols({p(".attn.q.b"), tape.constant(Tensor({dim})), p(".attn.v.b")});
  h = ops::add_bias(ops::matmul(h, p(".attn.qkv.w")), qkv_bias);
  h = ops::attention(h, batch, seq, heads);
  h = ops::add_bias(ops::matmul(h, p(".attn.out.w")), p(".attn.out.b"));
  if (dropout_rng) h = ops::dropout(h, config_.dropout, *dropout_rng);
  x = ops::add(x, h);
  h = ops::layer_norm(x, p(".ln2.g"), p(".ln2.b"));
  h = ops::gelu(ops::add_bias(ops::matmul(h, p(".mlp.fc1.w")), p(".mlp.fc1.b")));
  h = ops::add_bias(ops::matmul(h, p(".mlp.fc2.w")), p(".mlp.fc2.b"));
  if (dropout_rng) h = ops::dropout(h, config_.dropout, *dropout_rng);
  return ops::add(x, h);
}

namespace {

std::vector<long> type_index(std::size_t rois, std::size_t channels) {
  std::vector<long> idx{-1};
  for (std::size_t i = 0; i < rois; ++i)
    for (std::size_t c = 0; c < channels; ++c) idx.push_back(static_cast<long>(i));
  return idx;
}

}  // namespace

Var AutoencoderModel::encode_tokens(Tape& tape, Var signals, RngStream* dropout_rng) const {
  const std::size_t batch = signals.value().rows();
  const std::size_t r = config_.layout.size(), ch = config_.channels_per_roi;
  const std::size_t seq = config_.tokens();
  if (signals.value().cols() != config_.layout.total()) {
    throw ShapeError("signal length mismatch: expected L = " +
                     std::to_string(config_.layout.total()) + ", got " +
                     std::to_string(signals.value().cols()));
  }
  Var emb = roi_embed(tape, signals);
  Var all = ops::concat_rows({tape.param("enc.cls"), emb});
  std::vector<long> index(batch * seq);
  for (std::size_t b = 0; b < batch; ++b) {
    index[b * seq] = 0;
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t c = 0; c < ch; ++c)
        index[b * seq + 1 + i * ch + c] = static_cast<long>(1 + i * batch * ch + b * ch + c);
  }
  Var x = ops::gather_rows(all, std::move(index));
  Var type = ops::gather_rows(tape.param("enc.roi_type"), type_index(r, ch));
  x = ops::add_tiled(x, ops::add(type, tape.constant(enc_pos_)));
  for (std::size_t l = 0; l < config_.enc_depth; ++l) {
    x = block(tape, x, "enc.block" + std::to_string(l), batch, config_.num_heads, dropout_rng);
    if (!x.value().all_finite()) {
      throw NumericError("non-finite activation in encoder block " + std::to_string(l));
    }
  }
  return ops::layer_norm(x, tape.param("enc.norm.g"), tape.param("enc.norm.b"));
}

Var AutoencoderModel::cls_rows(Var tokens) const {
  const std::size_t seq = config_.tokens();
  const std::size_t batch = tokens.value().rows() / seq;
  std::vector<long> index(batch);
  for (std::size_t b = 0; b < batch; ++b) index[b] = static_cast<long>(b * seq);
  return ops::gather_rows(tokens, std::move(index));
}

Var AutoencoderModel::decode(Tape& tape, Var latents, RngStream* dropout_rng) const {
  if (latents.value().cols() != config_.enc_dim) {
    throw ShapeError("latent length mismatch: expected " + std::to_string(config_.enc_dim) +
                     ", got " + std::to_string(latents.value().cols()));
  }
  return decode_batch(tape, latents, dropout_rng);
}

Var AutoencoderModel::decode_batch(Tape& tape, Var latents, RngStream* dropout_rng) const {
  const std::size_t batch = latents.value().rows();
  const std::size_t r = config_.layout.size(), ch = config_.channels_per_roi;
  const std::size_t seq = config_.tokens();
  Var proj = ops::add_bias(ops::matmul(latents, tape.param("enc_to_dec.w")), tape.param("enc_to_dec.b"));
  Var all = ops::concat_rows({proj, tape.param("dec.mask")});
  std::vector<long> index(batch * seq, static_cast<long>(batch));
  for (std::size_t b = 0; b < batch; ++b) index[b * seq] = static_cast<long>(b);
  Var x = ops::gather_rows(all, std::move(index));
  Var type = ops::gather_rows(tape.param("dec.roi_type"), type_index(r, ch));
  x = ops::add_tiled(x, ops::add(type, tape.constant(dec_pos_)));
  for (std::size_t l = 0; l < config_.dec_depth; ++l) {
    x = block(tape, x, "dec.block" + std::to_string(l), batch, config_.num_heads, dropout_rng);
    if (!x.value().all_finite()) {
      throw NumericError("non-finite activation in decoder block " + std::to_string(l));
    }
  }
  x = ops::layer_norm(x, tape.param("dec.norm.g"), tape.param("dec.norm.b"));
  std::vector<Var> parts;
  for (std::size_t i = 0; i < r; ++i) {
    const std::string p = "project.roi" + std::to_string(i);
    std::vector<long> rows(batch * ch);
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t c = 0; c < ch; ++c)
        rows[b * ch + c] = static_cast<long>(b * seq + 1 + i * ch + c);
    Var y = ops::gather_rows(x, std::move(rows));
    y = ops::add_bias(ops::matmul(y, tape.param(p + ".fc.w")), tape.param(p + ".fc.b"));
    parts.push_back(ops::channel_mix(y, tape.param(p + ".mix.w"), tape.param(p + ".mix.b"), ch));
  }
  return ops::concat_cols(parts);
}

Var AutoencoderModel::reconstruction_loss(Tape& tape, const Tensor& signals,
                                          RngStream* dropout_rng) const {
  check_width(signals);
  Var x = tape.constant(signals);
  Var latents = cls_rows(encode_tokens(tape, x, dropout_rng));
  Var rec = decode(tape, latents, dropout_rng);
  return ops::mean_row_sq_norm(ops::sub(rec, x));
}

Tensor AutoencoderModel::roi_embed(const Tensor& signals) const {
  check_width(signals);
  Tape tape;
  tape.bind(params_, false);
  const Tensor roi_major = roi_embed(tape, tape.constant(signals)).value();
  const std::size_t batch = signals.rows(), r = config_.layout.size(), ch = config_.channels_per_roi;
  const std::size_t d = config_.enc_dim;
  Tensor out({batch * r * ch, d});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t c = 0; c < ch; ++c)
        std::copy_n(roi_major.data() + (i * batch * ch + b * ch + c) * d, d,
                    out.data() + (b * r * ch + i * ch + c) * d);
  return out;
}

Tensor AutoencoderModel::encode_tokens(const Tensor& signals) const {
  check_width(signals);
  Tape tape;
  tape.bind(params_, false);
  return encode_tokens(tape, tape.constant(signals)).value();
}

namespace {

// Applies `fn` to row chunks of `input`, optionally across threads, and
// stacks the results in order.
template <typename Fn>
Tensor map_row_chunks(const Tensor& input, int threads, Fn fn) {
  const std::size_t rows = input.rows();
  std::vector<std::pair<std::size_t, std::size_t>> chunks;
  for (std::size_t b = 0; b < rows; b += kInferenceChunk)
    chunks.emplace_back(b, std::min(kInferenceChunk, rows - b));
  std::vector<Tensor> results(chunks.size());
  auto work = [&](std::size_t first, std::size_t stride) {
    for (std::size_t c = first; c < chunks.size(); c += stride)
      results[c] = fn(input.row_slice(chunks[c].first, chunks[c].second));
  };
  const std::size_t nthreads = std::clamp<std::size_t>(threads, 1, chunks.size());
  if (nthreads == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(nthreads);
    for (std::size_t t = 0; t < nthreads; ++t) {
      pool.emplace_back([&, t] {
        try {
          work(t, nthreads);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  const std::size_t cols = results[0].cols();
  Tensor out({rows, cols});
  for (std::size_t c = 0; c < chunks.size(); ++c)
    std::copy(results[c].data(), results[c].data() + results[c].size(),
              out.data() + chunks[c].first * cols);
  return out;
}

}  // namespace

Tensor AutoencoderModel::encode(const Tensor& signals, int threads) const {
  check_width(signals);
  return map_row_chunks(signals, threads, [this](const Tensor& chunk) {
    Tape tape;
    tape.bind(params_, false);
    return cls_rows(encode_tokens(tape, tape.constant(chunk))).value();
  });
}

Tensor AutoencoderModel::decode_latent(const Tensor& latents, int threads) const {
  if (latents.ndim() != 2 || latents.cols() != config_.enc_dim) {
    throw ShapeError("latent length mismatch: expected " + std::to_string(config_.enc_dim) +
                     ", got " + shape_to_string(latents.shape()));
  }
  return map_row_chunks(latents, threads, [this](const Tensor& chunk) {
    Tape tape;
    tape.bind(params_, false);
    return decode_batch(tape, tape.constant(chunk), nullptr).value();
  });
}

Tensor AutoencoderModel::reconstruct_from_tokens(const Tensor& tokens) const {
  const std::size_t seq = config_.tokens();
  if (tokens.ndim() != 2 || tokens.rows() % seq != 0 || tokens.cols() != config_.enc_dim) {
    throw ShapeError("encoder output must be (batch*" + std::to_string(seq) + ") x " +
                     std::to_string(config_.enc_dim));
  }
  Tape tape;
  tape.bind(params_, false);
  Var latents = cls_rows(tape.constant(tokens));
  return decode_batch(tape, latents, nullptr).value();
}

double AutoencoderModel::reconstruction_loss(const Tensor& signals) const {
  check_width(signals);
  Tape tape;
  tape.bind(params_, false);
  return reconstruction_loss(tape, signals).value().item();
}

void TrainSchedule::validate() const {
  if (iters <= 0) throw ValidationError("schedule: iters must be positive");
  if (batch == 0) throw ValidationError("schedule: batch must be positive");
  if (!(lr0 > 0.0) || !(lr_min >= 0.0) || lr_min > lr0) {
    throw ValidationError("schedule: requires lr0 > 0 and 0 <= lr_min <= lr0");
  }
  if (!(adamw.beta1 >= 0.0 && adamw.beta1 < 1.0 && adamw.beta2 >= 0.0 && adamw.beta2 < 1.0)) {
    throw ValidationError("schedule: AdamW betas must lie in [0, 1)");
  }
}

TrainSchedule TrainSchedule::paper() {
  TrainSchedule s;
  s.iters = 100000;
  s.batch = 8;
  s.lr0 = 5e-5;
  s.lr_min = 1e-6;
  s.adamw = AdamWConfig{0.9, 0.95, 1e-8, 0.01};
  return s;
}

TrainSchedule TrainSchedule::desk() { return TrainSchedule{}; }

nlohmann::json TrainSchedule::to_json() const {
  return {{"iters", iters},
          {"batch", batch},
          {"lr0", lr0},
          {"lr_min", lr_min},
          {"seed", seed},
          {"adamw",
           {{"beta1", adamw.beta1},
            {"beta2", adamw.beta2},
            {"eps", adamw.eps},
            {"weight_decay", adamw.weight_decay}}}};
}

TrainSchedule TrainSchedule::from_json(const nlohmann::json& j) {
  TrainSchedule s;
  s.iters = j.value("iters", s.iters);
  s.batch = j.value("batch", s.batch);
  s.lr0 = j.value("lr0", s.lr0);
  s.lr_min = j.value("lr_min", s.lr_min);
  s.seed = j.value("seed", s.seed);
  if (j.contains("adamw")) {
    const auto& a = j["adamw"];
    s.adamw.beta1 = a.value("beta1", s.adamw.beta1);
    s.adamw.beta2 = a.value("beta2", s.adamw.beta2);
    s.adamw.eps = a.value("eps", s.adamw.eps);
    s.adamw.weight_decay = a.value("weight_decay", s.adamw.weight_decay);
  }
  s.validate();
  return s;
}

TrainResult train(AutoencoderModel& model, const Tensor& signals, const TrainSchedule& schedule,
                  const TrainCallback& callback) {
  schedule.validate();
  const auto& cfg = model.config();
  if (signals.ndim() != 2 || signals.cols() != cfg.layout.total()) {
    throw ShapeError("train: signals must be M x " + std::to_string(cfg.layout.total()));
  }
  const std::size_t n = signals.rows(), l = signals.cols();
  RngStream batch_rng(schedule.seed, 0x6261746368ULL);
  RngStream dropout_rng(schedule.seed, 0x64726f70ULL);
  RngStream* drop = cfg.dropout > 0.0 ? &dropout_rng : nullptr;

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::size_t cursor = n;

  AdamWState state{schedule.adamw, {}, 0};
  TrainResult result;
  result.loss_curve.reserve(static_cast<std::size_t>(schedule.iters));
  Tensor batch({schedule.batch, l});
  for (std::int64_t it = 0; it < schedule.iters; ++it) {
    for (std::size_t b = 0; b < schedule.batch; ++b) {
      if (cursor == n) {
        batch_rng.shuffle(std::span(order));
        cursor = 0;
      }
      std::copy_n(signals.data() + order[cursor++] * l, l, batch.data() + b * l);
    }
    Tape tape;
    tape.bind(model.params());
    double loss_value = 0.0;
    Var loss;
    try {
      loss = model.reconstruction_loss(tape, batch, drop);
      loss_value = loss.value().item();
    } catch (const NumericError&) {
      throw TrainingError(it, model.params());
    }
    if (!std::isfinite(loss_value)) throw TrainingError(it, model.params());
    tape.backward(loss);
    std::vector<Tensor> grads;
    grads.reserve(model.params().size());
    for (const auto& e : model.params().entries()) grads.push_back(tape.param_grad(e.name));
    const double lr = linear_lr(it, schedule.iters, schedule.lr0, schedule.lr_min);
    adamw_step(model.params(), grads, state, lr);
    result.loss_curve.push_back(loss_value);
    result.iterations = it + 1;
    if (callback) callback(it, loss_value, lr);
  }
  return result;
}

void save_model(const AutoencoderModel& model, const std::filesystem::path& path,
                const nlohmann::json& meta) {
  nlohmann::json header = meta.is_object() ? meta : nlohmann::json::object();
  header["config"] = model.config().to_json();
  std::vector<io::NamedTensor> tensors;
  for (const auto& e : model.params().entries()) tensors.push_back({e.name, e.value});
  io::write_container(path, "autoencoder", std::move(header), tensors);
}

LoadedModel load_model(const std::filesystem::path& path) {
  io::Container c = io::read_container(path, "autoencoder");
  if (!c.header.contains("config")) throw FormatError(path.string() + ": header has no config");
  ModelConfig config;
  try {
    config = ModelConfig::from_json(c.header["config"]);
  } catch (const ValidationError& e) {
    throw FormatError(path.string() + ": invalid config: " + e.what());
  }
  ParamStore params;
  for (auto& t : c.tensors) params.add(t.name, std::move(t.value));
  try {
    return {AutoencoderModel(std::move(config), std::move(params)), std::move(c.header)};
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace lea
