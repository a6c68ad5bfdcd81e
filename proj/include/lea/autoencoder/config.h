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
#include <utility>
#include <vector>

#include <json.hpp>

#include "lea/dataset/roi_layout.h"
#include "lea/numerics/tape.h"

namespace lea {

struct ModelConfig {
  std::size_t enc_depth = 4;
  std::size_t enc_dim = 64;
  std::size_t dec_depth = 2;
  std::size_t dec_dim = 32;
  std::size_t num_heads = 4;
  std::size_t channels_per_roi = 4;  // C, conv kernels per ROI
  std::size_t conv_kernel = 1;       // k, odd
  std::size_t mlp_ratio = 4;
  double dropout = 0.0;
  RoiLayout layout;

  void validate() const;
  // 1 CLS token + C tokens per ROI.
  std::size_t tokens() const { return 1 + layout.size() * channels_per_roi; }

  // 24/8 layers, 1024/512 dims, 16 heads, C = 32.
  static ModelConfig paper(RoiLayout layout);
  // 4/2 layers, 64/32 dims, 4 heads, C = 4.
  static ModelConfig desk(RoiLayout layout);

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Parameter names and shapes implied by a config, in creation order.
std::vector<std::pair<std::string, Shape>> expected_param_shapes(const ModelConfig& config);

}  // namespace lea
