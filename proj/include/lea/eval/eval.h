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
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "lea/alignment/ridge.h"
#include "lea/autoencoder/model.h"
#include "lea/embeddings/embeddings.h"
#include "lea/numerics/tensor.h"

namespace lea::eval {

// Vertices whose variance falls below this are excluded from the Pearson mean.
inline constexpr double kDegenerateVariance = 1e-12;

struct PearsonResult {
  double mean = 0.0;
  std::vector<double> per_vertex;  // NaN for degenerate vertices
  std::size_t degenerate = 0;
};

// Per-vertex Pearson correlation across the N rows. Throws if N < 2, shapes
// differ, or every vertex is degenerate.
PearsonResult pearsonr_vertexwise(const Tensor& pred, const Tensor& gt);

// Top-1 accuracy over seeded trials: a random target plus n-1 distinct
// distractor ground truths; correct iff the target's own ground truth is
// strictly the most similar. Trial t draws from stream t of the seed, so the
// result does not depend on evaluation order.
double nway_accuracy(const Tensor& pred, const Tensor& gt, std::size_t n, std::size_t trials,
                     std::uint64_t seed);

// Percentage of ordered pairs i != j with cos(pred_i, gt_i) > cos(pred_i, gt_j).
double pairwise_identification(const Tensor& pred, const Tensor& gt);

// Mean row-wise cosine. A zero row throws naming its index.
double mean_cosine(const Tensor& pred, const Tensor& gt);

// Frechet distance between Gaussians fitted to two feature sets (unbiased
// covariances). Returns d, not d^2.
double frechet(const Tensor& feat_a, const Tensor& feat_b);

struct ZeroShotResult {
  double accuracy = 0.0;
  std::vector<std::size_t> predicted;
};

// Argmax cosine against K prototypes; ties go to the lower class index.
ZeroShotResult zero_shot_accuracy(const Tensor& pred, const std::vector<std::size_t>& labels,
                                  const Tensor& prototypes);

struct RoundtripOptions {
  // Reject stimuli whose pairs were used to fit the alignment.
  bool require_held_out = true;
  int threads = 1;
};

struct RoundtripReport {
  std::size_t samples = 0;
  bool held_out = false;          // no stimulus overlaps the alignment fit set
  double mean_cosine = 0.0;       // v vs v -> f -> signal -> f -> v
  double top1 = 0.0;              // retrieval of the source id from the gallery
  double direct_mean_cosine = 0.0;  // v vs v -> f -> v, no signal round trip
  double direct_top1 = 0.0;
  std::vector<double> cosines;

  nlohmann::json to_json() const;
};

// Image-to-fMRI-to-image round trip. `ids` name each embedding row and must
// exist in the gallery.
RoundtripReport roundtrip_report(const AlignmentPair& pair, const AutoencoderModel& model,
                                 const std::vector<std::string>& ids, const Tensor& embeddings,
                                 const Gallery& gallery, const RoundtripOptions& options = {});

struct FakeProbeOptions {
  std::size_t num_fakes = 100;
  std::uint64_t seed = 0;
  double scale = 5.0;  // multiple of the training-signal std
  std::size_t bootstrap = 2000;
  double confidence = 0.95;
  int threads = 1;
};

struct FakeProbeReport {
  std::vector<double> real_max_similarity;
  std::vector<double> fake_max_similarity;
  double real_mean = 0.0;
  double fake_mean = 0.0;
  double gap = 0.0;  // real_mean - fake_mean
  double ci_low = 0.0;
  double ci_high = 0.0;
  double signal_std = 0.0;
  FakeProbeOptions options;

  nlohmann::json to_json() const;
};

// Gaussian "fake fMRI" reliability probe: fakes are N(0, (scale * signal_std)^2)
// vectors in the model's input space; both fakes and real signals go through
// encode -> f2v and are scored by their best gallery similarity. The gap's
// CI is a percentile bootstrap resampling each group independently.
FakeProbeReport fake_fmri_probe(const AutoencoderModel& model, const AlignmentPair& pair,
                                const Gallery& gallery, const Tensor& real_signals,
                                double signal_std, const FakeProbeOptions& options);

struct EvalReport {
  std::map<std::string, double> metrics;
  PearsonResult pearson;
  std::size_t n_way = 50;
  std::size_t trials = 1000;
  std::uint64_t seed = 0;
  nlohmann::json metadata = nlohmann::json::object();  // subject, input checksums

  void validate() const;
  nlohmann::json to_json() const;
};

struct EvalInputs {
  const AutoencoderModel* model = nullptr;
  const AlignmentPair* pair = nullptr;
  Tensor signals;     // model input space, N x L
  Tensor embeddings;  // paired stimulus embeddings, N x D
  // Optional zero-shot classification.
  const Tensor* prototypes = nullptr;
  std::vector<std::size_t> labels;
  int threads = 1;
};

// Runs every metric on paired test data:
//   fMRI -> embedding: n-way, pairwise identification, mean cosine, Frechet,
//   and zero-shot accuracy when prototypes are given;
//   embedding -> fMRI: vertex-wise Pearson of decoded signals.
EvalReport evaluate(const EvalInputs& inputs, std::size_t n_way, std::size_t trials,
                    std::uint64_t seed);

// vertex,pearson rows; degenerate vertices are written as "nan".
void write_pearson_csv(const PearsonResult& result, const std::filesystem::path& path);

}  // namespace lea::eval
