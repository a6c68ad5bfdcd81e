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

#include "lea/numerics/grad_check.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lea/error.h"
#include "lea/numerics/rng.h"

namespace lea {

namespace {

double evaluate(const ScalarFunction& f, const ParamStore& params) {
  Tape tape;
  tape.bind(params);
  return f(tape).value().item();
}

}  // namespace

GradCheckResult grad_check(const ScalarFunction& f, const ParamStore& point,
                           const GradCheckOptions& options) {
  if (!(options.eps >= 1e-7 && options.eps <= 1e-3)) {
    throw ValidationError("grad_check: eps must lie in [1e-7, 1e-3]");
  }
  if (options.stencil != 2 && options.stencil != 4) {
    throw ValidationError("grad_check: stencil must be 2 or 4");
  }

  std::vector<Tensor> tape_grads;
  {
    Tape tape;
    tape.bind(point);
    Var loss = f(tape);
    if (!std::isfinite(loss.value().item())) throw NumericError("grad_check: loss is not finite");
    tape.backward(loss);
    for (const auto& e : point.entries()) tape_grads.push_back(tape.param_grad(e.name));
  }

  GradCheckResult result;
  ParamStore probe = point;
  RngStream rng(options.seed, 0x67726164);
  const double h = options.eps;
  for (std::size_t p = 0; p < probe.size(); ++p) {
    auto& entry = probe.entries()[p];
    const std::size_t n = entry.value.size();
    std::vector<std::size_t> coords(n);
    std::iota(coords.begin(), coords.end(), 0);
    if (options.max_coords_per_param && n > options.max_coords_per_param) {
      coords = rng.sample_without_replacement(n, options.max_coords_per_param);
      std::sort(coords.begin(), coords.end());
    }
    for (std::size_t idx : coords) {
      const double orig = entry.value[idx];
      auto at = [&](double offset) {
        entry.value[idx] = orig + offset;
        const double v = evaluate(f, probe);
        if (!std::isfinite(v)) {
          entry.value[idx] = orig;
          throw NumericError("grad_check: non-finite loss when perturbing '" + entry.name +
                             "'[" + std::to_string(idx) + "]");
        }
        return v;
      };
      double fd;
      if (options.stencil == 2) {
        const double d1 = at(h) - at(-h);
        fd = d1 / (2.0 * h);
      } else {
        // Differences first: equal values cancel exactly and roundoff stays small.
        const double d1 = at(h) - at(-h);
        const double d2 = at(2 * h) - at(-2 * h);
        fd = (8.0 * d1 - d2) / (12.0 * h);
      }
      entry.value[idx] = orig;
      const double g = tape_grads[p][idx];
      const double err = std::abs(g - fd) / std::max({std::abs(g), std::abs(fd), 1e-12});
      ++result.coords_checked;
      if (result.worst_param.empty() || err > result.max_rel_error) {
        result.max_rel_error = err;
        result.worst_param = entry.name;
        result.worst_index = idx;
        result.worst_tape = g;
        result.worst_fd = fd;
      }
    }
  }
  return result;
}

}  // namespace lea
