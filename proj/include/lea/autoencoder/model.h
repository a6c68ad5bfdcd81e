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

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include <json.hpp>

#include "lea/autoencoder/config.h"
#include "lea/error.h"
#include "lea/numerics/adamw.h"
#include "lea/numerics/ops.h"

namespace lea {

// ROI-tokenized masked autoencoder with a CLS-only bottleneck.
//
// Encoder: each ROI slice (N_i voxels) goes through a 1 -> C channel conv
// over the voxel axis and a per-ROI FC N_i -> enc_dim shared by the C
// channels, giving C tokens per ROI. A learned CLS token is prepended, fixed
// sinusoidal positions plus learned ROI-type embeddings are added, and
// enc_depth pre-norm transformer blocks run. The final-layernormed CLS row is
// the latent.
//
// Decoder: the latent is projected to dec_dim and followed by R*C copies of a
// learned mask token; decoder positions/types are added, dec_depth blocks
// run, the CLS row is dropped and each ROI's C rows are mapped back by a FC
// dec_dim -> N_i and a 1x1 conv C -> 1. Nothing but the latent reaches the
// decoder.
class AutoencoderModel {
 public:
  // Random initialization from `seed`.
  AutoencoderModel(ModelConfig config, std::uint64_t seed);
  // Adopts existing weights; throws FormatError naming any missing,
  // unexpected or mis-shaped tensor.
  AutoencoderModel(ModelConfig config, ParamStore params);

  const ModelConfig& config() const { return config_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  // Graph builders. The model's parameters must already be bound on the tape
  // (Tape::bind). `dropout_rng` enables dropout when non-null.
  Var roi_embed(Tape& tape, Var signals) const;
  Var encode_tokens(Tape& tape, Var signals, RngStream* dropout_rng = nullptr) const;
  Var cls_rows(Var tokens) const;
  Var decode(Tape& tape, Var latents, RngStream* dropout_rng = nullptr) const;
  // (1/M) sum_i ||f_i - decode(encode(f_i))||^2 over the rows of `signals`.
  Var reconstruction_loss(Tape& tape, const Tensor& signals,
                          RngStream* dropout_rng = nullptr) const;

  // Inference on batches of rows (M x L). Each output row depends only on
  // its input row, so any batching or thread split gives identical bits.
  Tensor roi_embed(const Tensor& signals) const;
  Tensor encode_tokens(const Tensor& signals) const;
  Tensor encode(const Tensor& signals, int threads = 1) const;
  Tensor decode_latent(const Tensor& latents, int threads = 1) const;
  // Decodes from a full encoder output ((M*T) x enc_dim); only CLS rows are read.
  Tensor reconstruct_from_tokens(const Tensor& tokens) const;
  double reconstruction_loss(const Tensor& signals) const;

 private:
  void check_width(const Tensor& signals) const;
  Var block(Tape& tape, Var x, const std::string& prefix, std::size_t batch, std::size_t heads,
            RngStream* dropout_rng) const;
  Var decode_batch(Tape& tape, Var latents, RngStream* dropout_rng) const;

  ModelConfig config_;
  ParamStore params_;
  Tensor enc_pos_;  // T x enc_dim, fixed sinusoidal
  Tensor dec_pos_;  // T x dec_dim
};

Tensor sinusoidal_positions(std::size_t tokens, std::size_t dim);

struct TrainSchedule {
  std::int64_t iters = 2000;
  std::size_t batch = 8;
  double lr0 = 1e-3;
  double lr_min = 0.0;
  std::uint64_t seed = 0;
  AdamWConfig adamw;

  void validate() const;
  // 100k iterations, batch 8, lr 5e-5 -> 1e-6, AdamW (0.9, 0.95), wd 0.01.
  static TrainSchedule paper();
  // 2k iterations, batch 8, lr 1e-3 -> 0, AdamW (0.9, 0.95), wd 0.01.
  static TrainSchedule desk();

  nlohmann::json to_json() const;
  static TrainSchedule from_json(const nlohmann::json& j);
};

struct TrainResult {
  std::vector<double> loss_curve;  // batch loss before each update
  std::int64_t iterations = 0;
};

class TrainingError : public NumericError {
 public:
  TrainingError(std::int64_t iteration, ParamStore snapshot)
      : NumericError("non-finite loss at iteration " + std::to_string(iteration)),
        iteration_(iteration),
        snapshot_(std::move(snapshot)) {}
  std::int64_t iteration() const { return iteration_; }
  // Weights before the failing step.
  const ParamStore& snapshot() const { return snapshot_; }

 private:
  std::int64_t iteration_;
  ParamStore snapshot_;
};

using TrainCallback = std::function<void(std::int64_t iteration, double loss, double lr)>;

// AdamW with linear learning-rate decay on the reconstruction loss.
// `signals` holds the (normalized) training rows. Deterministic in
// schedule.seed.
TrainResult train(AutoencoderModel& model, const Tensor& signals, const TrainSchedule& schedule,
                  const TrainCallback& callback = {});

// Checkpoint container (kind "autoencoder"); `meta` is stored alongside the
// config in the header. Weights are written as float32.
void save_model(const AutoencoderModel& model, const std::filesystem::path& path,
                const nlohmann::json& meta = nlohmann::json::object());

struct LoadedModel {
  AutoencoderModel model;
  nlohmann::json header;
};

LoadedModel load_model(const std::filesystem::path& path);

}  // namespace lea
