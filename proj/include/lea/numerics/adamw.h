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

#include "lea/numerics/tape.h"

namespace lea {

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.95;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

// Moments for one parameter tensor.
struct AdamWMoments {
  Tensor m;
  Tensor v;
};

struct AdamWState {
  AdamWConfig config;
  std::vector<AdamWMoments> moments;  // aligned with ParamStore::entries()
  std::int64_t step = 0;
};

// One decoupled-weight-decay Adam update (Loshchilov & Hutter):
//   p <- p - lr * wd * p                     (entries with decay enabled)
//   m <- b1 m + (1 - b1) g,  v <- b2 v + (1 - b2) g^2
//   p <- p - lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps)
// `grads` is aligned with params.entries(). Throws ShapeError naming the
// offending parameter.
void adamw_step(ParamStore& params, const std::vector<Tensor>& grads, AdamWState& state,
                double lr);

// lr0 + (lr_min - lr0) * step / total_steps. Steps past the end clamp to
// lr_min with a logged warning.
double linear_lr(std::int64_t step, std::int64_t total_steps, double lr0, double lr_min);

}  // namespace lea
