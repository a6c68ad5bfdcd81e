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
#include <string>
#include <vector>

#include <json.hpp>

#include "lea/dataset/fmri_dataset.h"
#include "lea/embeddings/embeddings.h"

namespace lea {

// Generative model with a shared latent z per sample:
//   z      = center[class] + class_jitter * N(0, I)     (centers ~ N(0, I))
//   signal = A z + noise_std_fmri * N(0, I)             A: L x d_z, unit-norm rows
//   embed  = B z + noise_std_emb * N(0, I)              B: D x d_z, unit-norm rows
struct SyntheticSpec {
  std::size_t latent_dim = 8;
  RoiLayout layout = RoiLayout::desk();
  std::size_t embedding_dim = 16;
  std::size_t num_classes = 50;
  std::size_t train_samples = 500;
  std::size_t test_samples = 100;
  double noise_std_fmri = 0.0;
  double noise_std_emb = 0.0;
  double class_jitter = 0.5;
  std::uint64_t seed = 7;
  std::string subject_id = "synth-01";

  void validate() const;
  // Per-coordinate signal variance, 1 + class_jitter^2.
  double signal_variance() const { return 1.0 + class_jitter * class_jitter; }
  // Sets both noise levels so signal variance / noise variance == snr.
  SyntheticSpec& with_snr(double snr);

  // d_z = 8, D = 16, the 120-voxel desk layout, 500 train / 100 test, SNR 10.
  static SyntheticSpec desk(std::uint64_t seed);

  nlohmann::json to_json() const;
  static SyntheticSpec from_json(const nlohmann::json& j);
};

struct SyntheticTruth {
  Tensor fmri_map;       // A, L x d_z
  Tensor embedding_map;  // B, D x d_z
  Tensor class_centers;  // K x d_z
  Tensor latents;        // M x d_z
  std::vector<std::size_t> labels;  // class index per sample
};

struct SyntheticData {
  FmriDataset dataset;          // raw signals, labels set, no norm_stats
  EmbeddingTable embeddings;    // one row per stimulus id
  EmbeddingTable prototypes;    // unit-norm B * center, ids are class names
  SyntheticTruth truth;
};

std::string synthetic_class_name(std::size_t k);

// Fully determined by spec.seed.
SyntheticData synth_generate(const SyntheticSpec& spec);

}  // namespace lea
