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

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lea/dataset/roi_layout.h"
#include "lea/numerics/tensor.h"

namespace lea {

enum class Split { kTrain, kTest };

std::string to_string(Split s);
Split split_from_string(const std::string& s);

// Per-vertex z-scoring statistics fitted on the training split.
struct NormStats {
  std::vector<double> mean;
  std::vector<double> std;
  std::vector<std::size_t> degenerate;  // vertexes with std < 1e-8, output forced to 0

  friend bool operator==(const NormStats&, const NormStats&) = default;
};

// One subject's recordings: M samples x L voxels.
struct FmriDataset {
  std::string subject_id;
  RoiLayout layout;
  Tensor signals;
  std::vector<std::string> sample_ids;
  std::vector<std::string> stimulus_ids;
  std::vector<Split> split;
  // Optional class label per sample (empty when unknown).
  std::vector<std::string> labels;
  std::optional<NormStats> norm_stats;

  std::size_t num_samples() const { return stimulus_ids.size(); }
  // Throws ValidationError describing the first violated invariant.
  void validate() const;
  std::vector<std::size_t> indices(Split s) const;
  Tensor select_rows(const std::vector<std::size_t>& rows) const;
  std::vector<std::string> select_stimuli(const std::vector<std::size_t>& rows) const;

  friend bool operator==(const FmriDataset&, const FmriDataset&) = default;
};

// Directory bundle: manifest.json plus a raw float32 little-endian,
// row-major M x L signal file.
void save_bundle(const FmriDataset& dataset, const std::filesystem::path& dir,
                 const std::string& signal_file = "signals.f32");
FmriDataset load_bundle(const std::filesystem::path& dir);

NormStats zscore_fit(const FmriDataset& dataset);
Tensor zscore_apply(const Tensor& signals, const NormStats& stats);
// Returns a copy with normalized signals and `stats` attached.
FmriDataset zscore_apply(const FmriDataset& dataset, const NormStats& stats);
// Inverse on non-degenerate vertexes; degenerate ones map back to their mean.
Tensor zscore_unapply(const Tensor& normalized, const NormStats& stats);

nlohmann::json norm_stats_to_json(const NormStats& stats);
NormStats norm_stats_from_json(const nlohmann::json& j);

}  // namespace lea
