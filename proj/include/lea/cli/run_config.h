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
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lea/autoencoder/config.h"
#include "lea/autoencoder/model.h"
#include "lea/dataset/synthetic.h"

namespace lea::cli {

enum class Preset { kDesk, kPaper };

std::string to_string(Preset p);
Preset preset_from_string(const std::string& s);

// Everything a command needs, resolved from an optional JSON config file
// and command-line flags (flags win).
//
// Config file keys: preset, seed, out, subject, threads,
//   data: {bundle: path} or {synthetic: {...}} (at most one),
//   embeddings, prototypes, checkpoint, alignment: paths,
//   model: {...}, schedule: {...}   (overrides applied over the preset),
//   train: {include_test_signals},
//   align: {lambda_grid, folds, whiten},
//   eval: {n_way, trials, num_fakes, fake_scale, split, top_k}.
struct RunConfig {
  Preset preset = Preset::kDesk;
  std::optional<std::uint64_t> seed;
  std::filesystem::path out = ".";
  std::string subject;  // empty: take the dataset's subject id

  std::optional<std::filesystem::path> data_bundle;
  std::optional<nlohmann::json> synthetic;  // overrides for the synthetic spec
  std::optional<std::filesystem::path> embeddings;
  std::optional<std::filesystem::path> prototypes;
  std::optional<std::filesystem::path> checkpoint;
  std::optional<std::filesystem::path> alignment;

  nlohmann::json model_overrides = nlohmann::json::object();
  nlohmann::json schedule_overrides = nlohmann::json::object();

  // Also train the autoencoder on test-split signals (never their stimulus
  // pairs). Normalization statistics still come from the train split.
  bool include_test_signals = false;

  std::vector<double> lambda_grid;  // empty: default grid
  std::size_t folds = 5;
  bool whiten = false;

  std::size_t n_way = 50;
  std::size_t trials = 1000;
  std::size_t num_fakes = 100;
  double fake_scale = 5.0;
  std::string split = "test";
  std::size_t top_k = 5;

  int threads = 1;

  static RunConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  void validate() const;

  std::uint64_t require_seed() const;

  // Default artifact locations under `out`.
  std::filesystem::path data_path() const;
  std::filesystem::path embeddings_path() const;
  std::filesystem::path prototypes_path() const;
  std::filesystem::path checkpoint_path() const;
  std::filesystem::path alignment_path(const std::string& subject_id) const;
  std::filesystem::path reports_dir() const { return out / "reports"; }
  std::filesystem::path logs_dir() const { return out / "logs"; }

  SyntheticSpec synthetic_spec() const;
  ModelConfig model_config(const RoiLayout& layout) const;
  TrainSchedule schedule() const;
};

// Comma-separated positive numbers, e.g. "1e-2,1,100".
std::vector<double> parse_lambda_grid(const std::string& text);

// LEA_THREADS, or 1 when unset. Invalid values are a validation error.
int threads_from_env();

}  // namespace lea::cli
