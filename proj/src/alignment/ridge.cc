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

#include "lea/alignment/ridge.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <spdlog/spdlog.h>

#include "lea/error.h"
#include "lea/io/io.h"
#include "lea/numerics/linalg.h"
#include "lea/numerics/rng.h"

namespace lea {
namespace {

// Relative pivot floor used for unregularized fits so that a numerically
// singular Gram matrix is reported instead of silently inverted.
constexpr double kSingularPivotTol = 1e-12;

std::vector<double> column_means(const Tensor& x, const std::vector<std::size_t>* rows = nullptr) {
  const std::size_t d = x.cols();
  std::vector<double> mean(d, 0.0);
  const std::size_t n = rows ? rows->size() : x.rows();
  for (std::size_t i = 0; i < n; ++i) {
    auto r = x.row(rows ? (*rows)[i] : i);
    for (std::size_t j = 0; j < d; ++j) mean[j] += r[j];
  }
  for (double& m : mean) m /= static_cast<double>(n);
  return mean;
}

Tensor centered(const Tensor& x, const std::vector<double>& mean,
                const std::vector<std::size_t>* rows = nullptr) {
  const std::size_t d = x.cols();
  const std::size_t n = rows ? rows->size() : x.rows();
  Tensor out({n, d});
  for (std::size_t i = 0; i < n; ++i) {
    auto src = x.row(rows ? (*rows)[i] : i);
    auto dst = out.row(i);
    for (std::size_t j = 0; j < d; ++j) dst[j] = src[j] - mean[j];
  }
  return out;
}

void require_pair(const Tensor& x, const Tensor& y, const char* what) {
  if (x.ndim() != 2 || y.ndim() != 2) throw ShapeError(std::string(what) + ": X and Y must be 2-D");
  if (x.rows() != y.rows())
    throw ShapeError(std::string(what) + ": X has " + std::to_string(x.rows()) + " rows, Y has " +
                     std::to_string(y.rows()));
  if (x.cols() == 0 || y.cols() == 0) throw ShapeError(std::string(what) + ": zero-width input");
  if (!x.all_finite() || !y.all_finite())
    throw ValidationError(std::string(what) + ": inputs contain non-finite values");
}

void add_ridge(Tensor& g, double lambda) {
  for (std::size_t i = 0; i < g.rows(); ++i) g(i, i) += lambda;
}

// Inverse square root of the sample covariance of centered rows.
Tensor whitening_transform(const Tensor& xc) {
  Tensor cov = gram(xc);
  const double inv_n = 1.0 / static_cast<double>(xc.rows());
  for (double& v : cov.values()) v *= inv_n;
  const SymEig eig = sym_eig(cov);
  const std::size_t d = cov.rows();
  const double top = std::max(eig.values[d - 1], 0.0);
  const double floor = std::max(top * 1e-10, std::numeric_limits<double>::min());
  Tensor out({d, d});
  for (std::size_t k = 0; k < d; ++k) {
    const double s = 1.0 / std::sqrt(std::max(eig.values[k], floor));
    for (std::size_t i = 0; i < d; ++i) {
      const double vik = eig.vectors(i, k) * s;
      for (std::size_t j = 0; j < d; ++j) out(i, j) += vik * eig.vectors(j, k);
    }
  }
  return out;
}

io::Json means_json(const std::vector<double>& v) { return io::Json(v); }

}  // namespace

std::string to_string(Direction d) {
  return d == Direction::kFmriToEmbedding ? "fmri_to_embedding" : "embedding_to_fmri";
}

Direction direction_from_string(const std::string& s) {
  if (s == "fmri_to_embedding") return Direction::kFmriToEmbedding;
  if (s == "embedding_to_fmri") return Direction::kEmbeddingToFmri;
  throw FormatError("unknown alignment direction '" + s + "'");
}

std::vector<double> RidgeMap::bias() const {
  std::vector<double> b = output_mean;
  for (std::size_t i = 0; i < input_dim(); ++i)
    for (std::size_t j = 0; j < output_dim(); ++j) b[j] -= input_mean[i] * weights(i, j);
  return b;
}

void RidgeMap::validate() const {
  if (weights.ndim() != 2 || weights.rows() == 0 || weights.cols() == 0)
    throw ShapeError("ridge map: weights must be a non-empty matrix");
  if (input_mean.size() != input_dim() || output_mean.size() != output_dim())
    throw ShapeError("ridge map: mean lengths do not match W " + shape_to_string(weights.shape()));
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ValidationError("ridge map: lambda must be >= 0");
  if (!weights.all_finite()) throw NumericError("ridge map: non-finite weights");
}

Tensor RidgeMap::apply(const Tensor& x) const {
  if (x.cols() != input_dim())
    throw ShapeError("ridge map expects inputs of width " + std::to_string(input_dim()) + ", got " +
                     std::to_string(x.cols()));
  const std::size_t n = x.ndim() == 1 ? 1 : x.rows();
  const Tensor xc = centered(x.ndim() == 1 ? x.reshaped({1, x.cols()}) : x, input_mean);
  Tensor y({n, output_dim()});
  gemm_nn(xc.data(), weights.data(), y.data(), n, input_dim(), output_dim(), false);
  for (std::size_t i = 0; i < n; ++i) {
    auto r = y.row(i);
    for (std::size_t j = 0; j < output_dim(); ++j) r[j] += output_mean[j];
  }
  return y;
}

std::vector<double> RidgeMap::apply(std::span<const double> x) const {
  Tensor t({1, x.size()}, std::vector<double>(x.begin(), x.end()));
  return apply(t).storage();
}

RidgeMap fit_ridge(const Tensor& x, const Tensor& y, double lambda, const RidgeOptions& options) {
  require_pair(x, y, "fit_ridge");
  if (x.rows() < 2) throw ValidationError("fit_ridge: need at least 2 paired samples");
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw ValidationError("fit_ridge: lambda must be a finite value >= 0");

  RidgeMap map;
  map.lambda = lambda;
  map.input_mean = column_means(x);
  map.output_mean = column_means(y);
  Tensor xc = centered(x, map.input_mean);
  const Tensor yc = centered(y, map.output_mean);

  Tensor whiten;
  if (options.whiten) {
    whiten = whitening_transform(xc);
    xc = matmul(xc, whiten);
  }

  Tensor g = gram(xc);
  add_ridge(g, lambda);
  const Tensor rhs = matmul_tn(xc, yc);

  Tensor l;
  try {
    l = cholesky_factor(g, lambda == 0.0 ? kSingularPivotTol : 0.0);
  } catch (const NotPositiveDefiniteError& e) {
    throw NotPositiveDefiniteError(
        e.pivot(), e.value(),
        "X^T X is singular (rank-deficient inputs or fewer samples than features); use lambda > 0");
  }
  Tensor w = cholesky_solve_factored(l, rhs);

  // One step of iterative refinement on the normal equations.
  Tensor resid = matmul(g, w);
  for (std::size_t i = 0; i < resid.size(); ++i) resid[i] = rhs[i] - resid[i];
  const Tensor dw = cholesky_solve_factored(l, resid);
  for (std::size_t i = 0; i < w.size(); ++i) w[i] += dw[i];

  resid = matmul(g, w);
  double worst = 0.0;
  for (std::size_t i = 0; i < resid.size(); ++i) worst = std::max(worst, std::abs(resid[i] - rhs[i]));
  const double scale = rhs.max_abs();
  map.normal_residual = scale > 0.0 ? worst / scale : worst;

  map.weights = options.whiten ? matmul(whiten, w) : std::move(w);
  if (!map.weights.all_finite()) throw NumericError("fit_ridge: solution is not finite");
  return map;
}

double ridge_objective(const Tensor& x, const Tensor& y, const Tensor& w, double lambda) {
  require_pair(x, y, "ridge_objective");
  expect_shape(w, {x.cols(), y.cols()}, "ridge_objective W");
  const Tensor xc = centered(x, column_means(x));
  const Tensor yc = centered(y, column_means(y));
  const Tensor pred = matmul(xc, w);
  double loss = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = pred[i] - yc[i];
    loss += e * e;
  }
  double reg = 0.0;
  for (double v : w.values()) reg += v * v;
  return loss + lambda * reg;
}

std::vector<double> default_lambda_grid() {
  std::vector<double> grid;
  for (int i = 0; i < 13; ++i) grid.push_back(std::pow(10.0, -4.0 + 8.0 * i / 12.0));
  return grid;
}

LambdaSelection select_lambda(const Tensor& x, const Tensor& y, const std::vector<double>& grid,
                              std::size_t k_folds, std::uint64_t seed) {
  require_pair(x, y, "select_lambda");
  if (grid.empty()) throw ValidationError("select_lambda: empty lambda grid");
  for (double lam : grid)
    if (!(lam > 0.0) || !std::isfinite(lam))
      throw ValidationError("select_lambda: grid values must be finite and > 0");
  const std::size_t n = x.rows();
  if (k_folds < 2) throw ValidationError("select_lambda: need at least 2 folds");
  if (n < k_folds)
    throw ValidationError("select_lambda: " + std::to_string(n) + " samples are too few for " +
                          std::to_string(k_folds) + " folds");

  LambdaSelection sel;
  sel.grid = grid;
  sel.mean_mse.assign(grid.size(), 0.0);
  sel.fold_mse.assign(grid.size(), std::vector<double>(k_folds, 0.0));

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  RngStream rng(seed, 0x6376);
  rng.shuffle(std::span<std::size_t>(perm));
  sel.fold_of_sample.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) sel.fold_of_sample[perm[i]] = i % k_folds;

  const std::size_t din = x.cols(), dout = y.cols();
  for (std::size_t f = 0; f < k_folds; ++f) {
    std::vector<std::size_t> train, test;
    for (std::size_t i = 0; i < n; ++i) (sel.fold_of_sample[i] == f ? test : train).push_back(i);
    const auto xm = column_means(x, &train), ym = column_means(y, &train);
    const Tensor xtr = centered(x, xm, &train), ytr = centered(y, ym, &train);
    const Tensor xte = centered(x, xm, &test), yte = centered(y, ym, &test);

    // One eigendecomposition per fold serves the whole grid:
    // W(lambda) = Q diag(1 / (s + lambda)) Q^T Xc^T Yc.
    const SymEig eig = sym_eig(gram(xtr));
    const Tensor qt_rhs = matmul_tn(eig.vectors, matmul_tn(xtr, ytr));  // din x dout
    const Tensor te_q = matmul(xte, eig.vectors);                        // n_te x din
    Tensor scaled({din, dout});
    for (std::size_t g = 0; g < grid.size(); ++g) {
      for (std::size_t k = 0; k < din; ++k) {
        const double s = 1.0 / (std::max(eig.values[k], 0.0) + grid[g]);
        for (std::size_t j = 0; j < dout; ++j) scaled(k, j) = qt_rhs(k, j) * s;
      }
      const Tensor pred = matmul(te_q, scaled);
      double sse = 0.0;
      for (std::size_t i = 0; i < pred.size(); ++i) {
        const double e = pred[i] - yte[i];
        sse += e * e;
      }
      sel.fold_mse[g][f] = sse / static_cast<double>(pred.size());
    }
  }

  double best = std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g < grid.size(); ++g) {
    double m = 0.0;
    for (double v : sel.fold_mse[g]) m += v;
    m /= static_cast<double>(k_folds);
    sel.mean_mse[g] = m;
    if (m < best || (m == best && grid[g] > sel.lambda)) {
      best = m;
      sel.lambda = grid[g];
    }
  }
  spdlog::debug("select_lambda: chose {} (cv mse {})", sel.lambda, best);
  return sel;
}

void AlignmentPair::validate() const {
  f2v.validate();
  v2f.validate();
  if (f2v.input_dim() != v2f.output_dim() || f2v.output_dim() != v2f.input_dim())
    throw ShapeError("alignment pair: directions have inconsistent dimensions");
  if (f2v.direction != Direction::kFmriToEmbedding || v2f.direction != Direction::kEmbeddingToFmri)
    throw ValidationError("alignment pair: maps are labelled with the wrong direction");
}

AlignmentPair fit_pair(const Tensor& latents, const Tensor& embeddings, double lambda_f2v,
                       double lambda_v2f, const std::string& subject_id, const RidgeOptions& options) {
  AlignmentPair pair;
  pair.subject_id = subject_id;
  pair.f2v = fit_ridge(latents, embeddings, lambda_f2v, options);
  pair.f2v.direction = Direction::kFmriToEmbedding;
  pair.f2v.subject_id = subject_id;
  pair.v2f = fit_ridge(embeddings, latents, lambda_v2f, options);
  pair.v2f.direction = Direction::kEmbeddingToFmri;
  pair.v2f.subject_id = subject_id;
  return pair;
}

PairFit fit_pair_cv(const Tensor& latents, const Tensor& embeddings, const std::vector<double>& grid,
                    std::size_t k_folds, std::uint64_t seed, const std::string& subject_id,
                    const RidgeOptions& options) {
  PairFit out;
  out.cv_f2v = select_lambda(latents, embeddings, grid, k_folds, seed);
  out.cv_v2f = select_lambda(embeddings, latents, grid, k_folds, seed);
  out.pair = fit_pair(latents, embeddings, out.cv_f2v.lambda, out.cv_v2f.lambda, subject_id, options);
  return out;
}

void save_alignment(const AlignmentPair& pair, const std::filesystem::path& path) {
  pair.validate();
  io::Json maps = io::Json::array();
  std::vector<io::NamedTensor> tensors;
  for (const auto& [name, map] : {std::pair<std::string, const RidgeMap*>{"f2v", &pair.f2v},
                                  std::pair<std::string, const RidgeMap*>{"v2f", &pair.v2f}}) {
    maps.push_back(io::Json{{"name", name},
                    {"direction", to_string(map->direction)},
                    {"lambda", map->lambda},
                    {"dims", io::Json::array({map->input_dim(), map->output_dim()})},
                    {"input_mean", means_json(map->input_mean)},
                    {"output_mean", means_json(map->output_mean)},
                    {"normal_residual", map->normal_residual}});
    tensors.push_back({name + ".W", map->weights});
  }
  io::write_container(path, "alignment", {{"subject_id", pair.subject_id}, {"fit_stimulus_ids", pair.fit_stimulus_ids}, {"maps", maps}}, tensors);
}

AlignmentPair load_alignment(const std::filesystem::path& path) {
  const io::Container c = io::read_container(path, "alignment");
  AlignmentPair pair;
  try {
    pair.subject_id = c.header.at("subject_id").get<std::string>();
    pair.fit_stimulus_ids =
        c.header.value("fit_stimulus_ids", std::vector<std::string>{});
    bool have_f2v = false, have_v2f = false;
    for (const auto& m : c.header.at("maps")) {
      RidgeMap map;
      const auto name = m.at("name").get<std::string>();
      map.direction = direction_from_string(m.at("direction").get<std::string>());
      map.lambda = m.at("lambda").get<double>();
      map.input_mean = m.at("input_mean").get<std::vector<double>>();
      map.output_mean = m.at("output_mean").get<std::vector<double>>();
      map.normal_residual = m.value("normal_residual", 0.0);
      map.subject_id = pair.subject_id;
      map.weights = c.tensor(name + ".W");
      const auto dims = m.at("dims").get<std::vector<std::size_t>>();
      if (dims.size() != 2 || dims[0] != map.input_dim() || dims[1] != map.output_dim())
        throw FormatError("alignment map '" + name + "' dims disagree with its weight tensor");
      if (name == "f2v") {
        pair.f2v = std::move(map);
        have_f2v = true;
      } else if (name == "v2f") {
        pair.v2f = std::move(map);
        have_v2f = true;
      } else {
        throw FormatError("alignment file has unknown map '" + name + "'");
      }
    }
    if (!have_f2v || !have_v2f) throw FormatError("alignment file must contain both f2v and v2f maps");
  } catch (const io::Json::exception& e) {
    throw FormatError(std::string("malformed alignment header: ") + e.what());
  }
  pair.validate();
  return pair;
}

}  // namespace lea
