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

#include "lea/cli/run_config.h"

#include <cmath>
#include <cstdlib>
#include <set>
#include <sstream>

#include "lea/error.h"

namespace lea::cli {
namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw ValidationError(where + " must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) throw ValidationError("unknown config key '" + where + "." + key + "'");
}

json path_or_null(const std::optional<std::filesystem::path>& p) {
  return p ? json(p->generic_string()) : json();
}

}  // namespace

std::string to_string(Preset p) { return p == Preset::kPaper ? "paper" : "desk"; }

Preset preset_from_string(const std::string& s) {
  if (s == "desk") return Preset::kDesk;
  if (s == "paper") return Preset::kPaper;
  throw ValidationError("unknown preset '" + s + "' (expected desk or paper)");
}

RunConfig RunConfig::from_json(const json& j) {
  reject_unknown(j,
                 {"preset", "seed", "out", "subject", "threads", "data", "embeddings", "prototypes",
                  "checkpoint", "alignment", "model", "schedule", "train", "align", "eval"},
                 "config");
  RunConfig c;
  try {
    if (j.contains("preset")) c.preset = preset_from_string(j["preset"].get<std::string>());
    if (j.contains("seed") && !j["seed"].is_null()) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("out")) c.out = j["out"].get<std::string>();
    c.subject = j.value("subject", c.subject);
    c.threads = j.value("threads", c.threads);
    if (j.contains("data")) {
      const auto& d = j["data"];
      reject_unknown(d, {"bundle", "synthetic"}, "data");
      if (d.contains("bundle") && d.contains("synthetic"))
        throw ValidationError("config data must name exactly one source: bundle or synthetic");
      if (d.contains("bundle")) c.data_bundle = d["bundle"].get<std::string>();
      if (d.contains("synthetic")) c.synthetic = d["synthetic"];
    }
    for (auto [key, field] : {std::pair{"embeddings", &c.embeddings}, std::pair{"prototypes", &c.prototypes},
                              std::pair{"checkpoint", &c.checkpoint}, std::pair{"alignment", &c.alignment}})
      if (j.contains(key) && !j[key].is_null()) *field = j[key].get<std::string>();
    if (j.contains("model")) c.model_overrides = j["model"];
    if (j.contains("schedule")) c.schedule_overrides = j["schedule"];
    if (j.contains("train")) {
      const auto& t = j["train"];
      reject_unknown(t, {"include_test_signals"}, "train");
      c.include_test_signals = t.value("include_test_signals", c.include_test_signals);
    }
    if (j.contains("align")) {
      const auto& a = j["align"];
      reject_unknown(a, {"lambda_grid", "folds", "whiten"}, "align");
      c.lambda_grid = a.value("lambda_grid", c.lambda_grid);
      c.folds = a.value("folds", c.folds);
      c.whiten = a.value("whiten", c.whiten);
    }
    if (j.contains("eval")) {
      const auto& e = j["eval"];
      reject_unknown(e, {"n_way", "trials", "num_fakes", "fake_scale", "split", "top_k"}, "eval");
      c.n_way = e.value("n_way", c.n_way);
      c.trials = e.value("trials", c.trials);
      c.num_fakes = e.value("num_fakes", c.num_fakes);
      c.fake_scale = e.value("fake_scale", c.fake_scale);
      c.split = e.value("split", c.split);
      c.top_k = e.value("top_k", c.top_k);
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed config: ") + e.what());
  }
  return c;
}

json RunConfig::to_json() const {
  json data = json::object();
  if (data_bundle) data["bundle"] = data_bundle->generic_string();
  if (synthetic) data["synthetic"] = *synthetic;
  return {{"preset", to_string(preset)},
          {"seed", seed ? json(*seed) : json()},
          {"out", out.generic_string()},
          {"subject", subject},
          {"threads", threads},
          {"data", data},
          {"embeddings", path_or_null(embeddings)},
          {"prototypes", path_or_null(prototypes)},
          {"checkpoint", path_or_null(checkpoint)},
          {"alignment", path_or_null(alignment)},
          {"model", model_overrides},
          {"schedule", schedule_overrides},
          {"train", {{"include_test_signals", include_test_signals}}},
          {"align", {{"lambda_grid", lambda_grid}, {"folds", folds}, {"whiten", whiten}}},
          {"eval",
           {{"n_way", n_way},
            {"trials", trials},
            {"num_fakes", num_fakes},
            {"fake_scale", fake_scale},
            {"split", split},
            {"top_k", top_k}}}};
}

void RunConfig::validate() const {
  if (data_bundle && synthetic)
    throw ValidationError("exactly one data source may be given: a bundle or a synthetic spec");
  if (threads < 1) throw ValidationError("threads must be >= 1");
  if (folds < 2) throw ValidationError("align.folds must be >= 2");
  for (double l : lambda_grid)
    if (!(l > 0.0) || !std::isfinite(l)) throw ValidationError("lambda grid values must be finite and > 0");
  if (n_way < 2) throw ValidationError("n-way must be >= 2");
  if (trials < 1) throw ValidationError("trials must be >= 1");
  if (num_fakes < 30) throw ValidationError("num_fakes must be >= 30");
  if (!(fake_scale > 0.0)) throw ValidationError("fake_scale must be > 0");
  if (split != "train" && split != "test") throw ValidationError("split must be train or test");
  if (top_k < 1) throw ValidationError("top_k must be >= 1");
  if (!model_overrides.is_object() || !schedule_overrides.is_object())
    throw ValidationError("model and schedule overrides must be JSON objects");
}

std::uint64_t RunConfig::require_seed() const {
  if (!seed) throw ValidationError("a seed is required: pass --seed or set \"seed\" in the config");
  return *seed;
}

std::filesystem::path RunConfig::data_path() const { return data_bundle ? *data_bundle : out / "data" / "fmri"; }
std::filesystem::path RunConfig::embeddings_path() const {
  return embeddings ? *embeddings : out / "data" / "embeddings";
}
std::filesystem::path RunConfig::prototypes_path() const {
  return prototypes ? *prototypes : out / "data" / "prototypes";
}
std::filesystem::path RunConfig::checkpoint_path() const {
  return checkpoint ? *checkpoint : out / "checkpoints" / "autoencoder.ckpt";
}
std::filesystem::path RunConfig::alignment_path(const std::string& subject_id) const {
  return alignment ? *alignment : out / "alignments" / (subject_id + ".align");
}

SyntheticSpec RunConfig::synthetic_spec() const {
  json j = SyntheticSpec::desk(require_seed()).to_json();
  if (synthetic) j.merge_patch(*synthetic);
  j["seed"] = require_seed();
  SyntheticSpec s = SyntheticSpec::from_json(j);
  if (!subject.empty()) s.subject_id = subject;
  return s;
}

ModelConfig RunConfig::model_config(const RoiLayout& layout) const {
  json j = (preset == Preset::kPaper ? ModelConfig::paper(layout) : ModelConfig::desk(layout)).to_json();
  json overrides = model_overrides;
  if (overrides.contains("rois")) throw ValidationError("the ROI layout comes from the dataset, not model overrides");
  j.merge_patch(overrides);
  return ModelConfig::from_json(j);
}

TrainSchedule RunConfig::schedule() const {
  json j = (preset == Preset::kPaper ? TrainSchedule::paper() : TrainSchedule::desk()).to_json();
  j.merge_patch(schedule_overrides);
  if (seed) j["seed"] = *seed;
  return TrainSchedule::from_json(j);
}

std::vector<double> parse_lambda_grid(const std::string& text) {
  std::vector<double> grid;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    char* end = nullptr;
    const double v = std::strtod(item.c_str(), &end);
    if (item.empty() || *end != '\0' || !(v > 0.0) || !std::isfinite(v))
      throw ValidationError("invalid lambda grid entry '" + item + "'");
    grid.push_back(v);
  }
  if (grid.empty()) throw ValidationError("lambda grid is empty");
  return grid;
}

int threads_from_env() {
  const char* v = std::getenv("LEA_THREADS");
  if (!v || !*v) return 1;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (*end != '\0' || n < 1 || n > 1024) throw ValidationError(std::string("invalid LEA_THREADS '") + v + "'");
  return static_cast<int>(n);
}

}  // namespace lea::cli
