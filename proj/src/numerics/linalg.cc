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

#include "lea/numerics/linalg.h"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "lea/error.h"

namespace lea {

namespace {

void require_square(const Tensor& a, const char* what) {
  if (a.ndim() != 2 || a.rows() != a.cols()) {
    throw ShapeError(std::string(what) + ": expected a square matrix, got " +
                     shape_to_string(a.shape()));
  }
}

}  // namespace

Tensor cholesky_factor(const Tensor& a, double relative_pivot_tol) {
  require_square(a, "cholesky_factor");
  const std::size_t n = a.rows();
  Tensor l({n, n});
  double max_diag = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) l(i, j) = 0.5 * (a(i, j) + a(j, i));
    max_diag = std::max(max_diag, std::abs(a(i, i)));
  }
  const double floor = relative_pivot_tol * max_diag;

  // Left-looking column Cholesky on the lower triangle.
  for (std::size_t j = 0; j < n; ++j) {
    double* lj = l.data() + j * n;
    double d = lj[j];
    for (std::size_t p = 0; p < j; ++p) d -= lj[p] * lj[p];
    if (!(d > floor) || !(d > 0.0) || !std::isfinite(d)) throw NotPositiveDefiniteError(j, d);
    const double djj = std::sqrt(d);
    lj[j] = djj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double* li = l.data() + i * n;
      double s = li[j];
      for (std::size_t p = 0; p < j; ++p) s -= li[p] * lj[p];
      li[j] = s / djj;
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) l(i, j) = 0.0;
  return l;
}

Tensor cholesky_solve_factored(const Tensor& l, const Tensor& b) {
  const std::size_t n = l.rows();
  const bool vec = b.ndim() == 1;
  const std::size_t k = vec ? 1 : b.cols();
  if ((vec ? b.size() : b.rows()) != n) {
    throw ShapeError("cholesky_solve: right-hand side " + shape_to_string(b.shape()) +
                     " for system of size " + std::to_string(n));
  }
  Tensor x = vec ? b.reshaped({n, 1}) : b;
  double* xd = x.data();
  // Forward substitution L Y = B, row by row so each RHS column shares the loop.
  for (std::size_t i = 0; i < n; ++i) {
    double* xi = xd + i * k;
    for (std::size_t p = 0; p < i; ++p) {
      const double lip = l(i, p);
      const double* xp = xd + p * k;
      for (std::size_t c = 0; c < k; ++c) xi[c] -= lip * xp[c];
    }
    const double inv = 1.0 / l(i, i);
    for (std::size_t c = 0; c < k; ++c) xi[c] *= inv;
  }
  // Back substitution L^T X = Y.
  for (std::size_t i = n; i-- > 0;) {
    double* xi = xd + i * k;
    const double inv = 1.0 / l(i, i);
    for (std::size_t c = 0; c < k; ++c) xi[c] *= inv;
    for (std::size_t p = 0; p < i; ++p) {
      const double lip = l(i, p);
      double* xp = xd + p * k;
      for (std::size_t c = 0; c < k; ++c) xp[c] -= lip * xi[c];
    }
  }
  return vec ? x.reshaped({n}) : x;
}

Tensor cholesky_solve(const Tensor& a, const Tensor& b) {
  return cholesky_solve_factored(cholesky_factor(a), b);
}

SymEig sym_eig(const Tensor& a) {
  require_square(a, "sym_eig");
  const std::size_t n = a.rows();
  const double tol = 1e-10 * std::max(1.0, a.max_abs());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (std::abs(a(i, j) - a(j, i)) > tol) {
        throw ValidationError("sym_eig: matrix is not symmetric at (" + std::to_string(i) +
                              ", " + std::to_string(j) + ")");
      }
    }
  }
  Eigen::MatrixXd m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) m(i, j) = 0.5 * (a(i, j) + a(j, i));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
  if (solver.info() != Eigen::Success) throw NumericError("sym_eig: eigensolver did not converge");
  SymEig out{Tensor({n}), Tensor({n, n})};
  for (std::size_t i = 0; i < n; ++i) {
    out.values[i] = solver.eigenvalues()(i);
    for (std::size_t j = 0; j < n; ++j) out.vectors(j, i) = solver.eigenvectors()(j, i);
  }
  return out;
}

}  // namespace lea
