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

#include "lea/numerics/adamw.h"

#include <cmath>

#include <spdlog/spdlog.h>

#include "lea/error.h"

namespace lea {

void adamw_step(ParamStore& params, const std::vector<Tensor>& grads, AdamWState& state,
                double lr) {
  auto& entries = params.entries();
  if (grads.size() != entries.size()) {
    throw ShapeError("adamw_step: " + std::to_string(grads.size()) + " gradients for " +
                     std::to_string(entries.size()) + " parameters");
  }
  if (!(lr > 0.0)) throw ValidationError("adamw_step: learning rate must be positive");
  if (state.moments.empty()) {
    for (const auto& e : entries) state.moments.push_back({Tensor(e.value.shape()), Tensor(e.value.shape())});
  }
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& shape = entries[i].value.shape();
    if (grads[i].shape() != shape || state.moments[i].m.shape() != shape) {
      throw ShapeError("adamw_step: parameter '" + entries[i].name + "' has shape " +
                       shape_to_string(shape) + " but gradient has " +
                       shape_to_string(grads[i].shape()));
    }
  }

  const AdamWConfig& c = state.config;
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    double* p = entries[i].value.data();
    const double* g = grads[i].data();
    double* m = state.moments[i].m.data();
    double* v = state.moments[i].v.data();
    const double decay = entries[i].decay ? lr * c.weight_decay : 0.0;
    for (std::size_t j = 0; j < entries[i].value.size(); ++j) {
      p[j] -= decay * p[j];
      m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * g[j];
      v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * g[j] * g[j];
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      p[j] -= lr * mhat / (std::sqrt(vhat) + c.eps);
    }
  }
}

double linear_lr(std::int64_t step, std::int64_t total_steps, double lr0, double lr_min) {
  if (total_steps <= 0) throw ValidationError("linear_lr: total_steps must be positive");
  if (step < 0) throw ValidationError("linear_lr: step must be non-negative");
  if (!(lr0 >= lr_min && lr_min >= 0.0)) {
    throw ValidationError("linear_lr: requires lr0 >= lr_min >= 0");
  }
  if (step > total_steps) {
    spdlog::warn("linear_lr: step {} past schedule end {}; clamping to lr_min", step,
                 total_steps);
    return lr_min;
  }
  return lr0 + (lr_min - lr0) * static_cast<double>(step) / static_cast<double>(total_steps);
}

}  // namespace lea
