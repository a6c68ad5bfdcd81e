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
#include <functional>
#include <string>

#include "lea/numerics/tape.h"

namespace lea {

struct GradCheckOptions {
  double eps = 1e-4;
  // Finite-difference stencil: 2 (x +- h) or 4 (x +- h, x +- 2h).
  int stencil = 4;
  // 0 checks every coordinate; otherwise a seeded sample per parameter.
  std::size_t max_coords_per_param = 0;
  std::uint64_t seed = 0;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double worst_tape = 0.0;
  double worst_fd = 0.0;
  std::size_t coords_checked = 0;
};

// Builds a scalar loss on a tape whose parameters are already bound.
using ScalarFunction = std::function<Var(Tape&)>;

// Compares tape gradients of `f` at `point` with central finite differences.
// Error per coordinate is |g_tape - g_fd| / max(|g_tape|, |g_fd|, 1e-12).
GradCheckResult grad_check(const ScalarFunction& f, const ParamStore& point,
                           const GradCheckOptions& options = {});

}  // namespace lea
