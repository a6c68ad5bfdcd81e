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

#include "lea/numerics/tensor.h"

namespace lea {

// Lower-triangular L with A = L L^T. A is symmetrized as (A + A^T) / 2 first.
// Throws NotPositiveDefiniteError carrying the index of the first pivot <= 0,
// or <= relative_pivot_tol * max diagonal when a tolerance is given.
Tensor cholesky_factor(const Tensor& a, double relative_pivot_tol = 0.0);

// Solves A X = B for symmetric positive definite A (n x n), B n x k or n.
Tensor cholesky_solve(const Tensor& a, const Tensor& b);
// Same, reusing a factor from cholesky_factor.
Tensor cholesky_solve_factored(const Tensor& l, const Tensor& b);

struct SymEig {
  Tensor values;   // ascending, length n
  Tensor vectors;  // n x n, column i pairs with values[i]
};

// Eigendecomposition of a symmetric matrix. Rejects inputs whose asymmetry
// exceeds 1e-10 * max(1, max|A|).
SymEig sym_eig(const Tensor& a);

}  // namespace lea
