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
#include <span>
#include <string>
#include <vector>

#include "lea/numerics/tensor.h"

namespace lea {

enum class Direction { kFmriToEmbedding, kEmbeddingToFmri };

std::string to_string(Direction d);
Direction direction_from_string(const std::string& s);

// Affine map y = (x - input_mean) W + output_mean fitted by centered ridge
// regression.
struct RidgeMap {
  Tensor weights;  // D_in x D_out
  std::vector<double> input_mean;
  std::vector<double> output_mean;
  double lambda = 0.0;
  Direction direction = Direction::kFmriToEmbedding;
  std::string subject_id;
  // max |(Xc^T Xc + lambda I) W - Xc^T Yc| / max |Xc^T Yc| at fit time.
  double normal_residual = 0.0;

  std::size_t input_dim() const { return weights.rows(); }
  std::size_t output_dim() const { return weights.cols(); }
  // Equivalent bias: output_mean - input_mean W.
  std::vector<double> bias() const;

  Tensor apply(const Tensor& x) const;
  std::vector<double> apply(std::span<const double> x) const;
  void validate() const;
};

struct RidgeOptions {
  // Whiten centered inputs with the inverse square root of their covariance
  // before the fit; folded back into W so apply() is unchanged.
  bool whiten = false;
};

// Centers X and Y, solves (Xc^T Xc + lambda I) W = Xc^T Yc by Cholesky with
// one step of iterative refinement. Requires n >= 2 and lambda >= 0; with
// lambda == 0 a rank-deficient X raises NotPositiveDefiniteError.
RidgeMap fit_ridge(const Tensor& x, const Tensor& y, double lambda, const RidgeOptions& options = {});

// ||Xc W - Yc||_F^2 + lambda ||W||_F^2 with X, Y centered by their own means.
double ridge_objective(const Tensor& x, const Tensor& y, const Tensor& w, double lambda);

// 13-point log grid 1e-4 ... 1e4.
std::vector<double> default_lambda_grid();

struct LambdaSelection {
  double lambda = 0.0;
  std::vector<double> grid;
  std::vector<double> mean_mse;              // per grid point
  std::vector<std::vector<double>> fold_mse;  // [grid point][fold]
  std::vector<std::size_t> fold_of_sample;
};

// k-fold cross-validation of held-out MSE. Lowest mean MSE wins, exact ties
// go to the larger lambda, folds are a seeded permutation.
LambdaSelection select_lambda(const Tensor& x, const Tensor& y, const std::vector<double>& grid,
                              std::size_t k_folds, std::uint64_t seed);

struct AlignmentPair {
  RidgeMap f2v;  // fMRI latent -> stimulus embedding
  RidgeMap v2f;  // stimulus embedding -> fMRI latent
  std::string subject_id;
  // Stimulus ids whose pairs were used for fitting; lets evaluation enforce a
  // held-out (zero-shot) condition. Empty when unknown.
  std::vector<std::string> fit_stimulus_ids;

  void validate() const;
};

// Two independent ridge fits between paired rows.
AlignmentPair fit_pair(const Tensor& latents, const Tensor& embeddings, double lambda_f2v,
                       double lambda_v2f, const std::string& subject_id,
                       const RidgeOptions& options = {});

struct PairFit {
  AlignmentPair pair;
  LambdaSelection cv_f2v;
  LambdaSelection cv_v2f;
};

// Selects each direction's lambda independently by CV, then fits on all rows.
PairFit fit_pair_cv(const Tensor& latents, const Tensor& embeddings, const std::vector<double>& grid,
                    std::size_t k_folds, std::uint64_t seed, const std::string& subject_id,
                    const RidgeOptions& options = {});

// Container kind "alignment": header {subject_id, fit_stimulus_ids, maps: [{name, direction,
// lambda, dims, input_mean, output_mean, normal_residual}]} with tensors
// "<name>.W" as float32.
void save_alignment(const AlignmentPair& pair, const std::filesystem::path& path);
AlignmentPair load_alignment(const std::filesystem::path& path);

}  // namespace lea
