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

#include "lea/dataset/fmri_dataset.h"

#include <cmath>
#include <set>

#include "lea/error.h"
#include "lea/io/io.h"

namespace lea {

namespace fs = std::filesystem;
using io::Json;

std::string to_string(Split s) { return s == Split::kTrain ? "train" : "test"; }

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "test") return Split::kTest;
  throw ValidationError("unknown split '" + s + "' (expected train or test)");
}

void FmriDataset::validate() const {
  const std::size_t m = stimulus_ids.size();
  if (m == 0) throw ValidationError("dataset has no samples");
  if (signals.ndim() != 2 || signals.rows() != m) {
    throw ValidationError("signal matrix " + shape_to_string(signals.shape()) + " does not have " +
                          std::to_string(m) + " rows");
  }
  if (signals.cols() != layout.total()) {
    throw ValidationError("signal width " + std::to_string(signals.cols()) +
                          " does not match ROI layout total " + std::to_string(layout.total()));
  }
  if (split.size() != m || sample_ids.size() != m) {
    throw ValidationError("split/sample id lists must have one entry per sample");
  }
  if (!labels.empty() && labels.size() != m) {
    throw ValidationError("labels must be absent or have one entry per sample");
  }
  std::set<std::string> ids(sample_ids.begin(), sample_ids.end());
  if (ids.size() != m) throw ValidationError("duplicate sample ids");
  if (norm_stats) {
    if (norm_stats->mean.size() != layout.total() || norm_stats->std.size() != layout.total()) {
      throw ValidationError("norm_stats length does not match signal width");
    }
    for (double s : norm_stats->std)
      if (!(s >= 0.0)) throw ValidationError("norm_stats std must be non-negative");
  }
}

std::vector<std::size_t> FmriDataset::indices(Split s) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < split.size(); ++i)
    if (split[i] == s) out.push_back(i);
  return out;
}

Tensor FmriDataset::select_rows(const std::vector<std::size_t>& rows) const {
  if (rows.empty()) throw ValidationError("no samples selected");
  const std::size_t l = signals.cols();
  Tensor out({rows.size(), l});
  for (std::size_t r = 0; r < rows.size(); ++r)
    std::copy_n(signals.data() + rows[r] * l, l, out.data() + r * l);
  return out;
}

std::vector<std::string> FmriDataset::select_stimuli(const std::vector<std::size_t>& rows) const {
  std::vector<std::string> out;
  for (auto r : rows) out.push_back(stimulus_ids.at(r));
  return out;
}

Json norm_stats_to_json(const NormStats& stats) {
  return {{"mean", stats.mean}, {"std", stats.std}, {"degenerate", stats.degenerate}};
}

NormStats norm_stats_from_json(const Json& j) {
  NormStats s;
  s.mean = j.at("mean").get<std::vector<double>>();
  s.std = j.at("std").get<std::vector<double>>();
  if (j.contains("degenerate")) {
    s.degenerate = j["degenerate"].get<std::vector<std::size_t>>();
  } else {
    for (std::size_t i = 0; i < s.std.size(); ++i)
      if (s.std[i] < 1e-8) s.degenerate.push_back(i);
  }
  if (s.mean.size() != s.std.size()) throw FormatError("norm_stats mean/std length mismatch");
  return s;
}

void save_bundle(const FmriDataset& dataset, const fs::path& dir, const std::string& signal_file) {
  dataset.validate();
  fs::create_directories(dir);
  const auto blob = io::to_f32le(dataset.signals.values());
  io::write_file(dir / signal_file, blob);

  Json samples = Json::array();
  for (std::size_t i = 0; i < dataset.num_samples(); ++i) {
    Json s = {{"id", dataset.sample_ids[i]},
              {"stimulus_id", dataset.stimulus_ids[i]},
              {"split", to_string(dataset.split[i])}};
    if (!dataset.labels.empty()) s["label"] = dataset.labels[i];
    samples.push_back(std::move(s));
  }
  Json manifest = {{"format_version", 1},
                   {"subject_id", dataset.subject_id},
                   {"rois", dataset.layout.to_json()},
                   {"samples", std::move(samples)},
                   {"signal_file", signal_file},
                   {"signal_crc32", io::crc32_hex(io::crc32(blob))},
                   {"dtype", "f32le"},
                   {"order", "row-major"}};
  if (dataset.norm_stats) manifest["norm_stats"] = norm_stats_to_json(*dataset.norm_stats);
  io::write_json(dir / "manifest.json", manifest);
}

FmriDataset load_bundle(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path)) throw ValidationError("no manifest.json in " + dir.string());
  const Json m = io::read_json(manifest_path);
  try {
    if (m.at("format_version").get<int>() != 1) {
      throw FormatError("unknown format_version " + m["format_version"].dump() + " in " +
                        manifest_path.string());
    }
    if (m.value("dtype", "f32le") != "f32le" || m.value("order", "row-major") != "row-major") {
      throw FormatError("unsupported dtype/order in " + manifest_path.string());
    }
    FmriDataset d;
    d.subject_id = m.at("subject_id").get<std::string>();
    d.layout = RoiLayout::from_json(m.at("rois"));
    const auto& samples = m.at("samples");
    if (samples.empty()) throw ValidationError("dataset bundle " + dir.string() + " has no samples");
    bool any_label = false;
    for (const auto& s : samples) any_label = any_label || s.contains("label");
    for (const auto& s : samples) {
      d.sample_ids.push_back(s.at("id").get<std::string>());
      d.stimulus_ids.push_back(s.at("stimulus_id").get<std::string>());
      d.split.push_back(split_from_string(s.at("split").get<std::string>()));
      if (any_label) d.labels.push_back(s.value("label", std::string()));
    }
    const fs::path signal_path = dir / m.at("signal_file").get<std::string>();
    const auto blob = io::read_file(signal_path);
    if (m.contains("signal_crc32") &&
        m["signal_crc32"].get<std::string>() != io::crc32_hex(io::crc32(blob))) {
      throw FormatError("checksum mismatch for " + signal_path.string());
    }
    const std::size_t rows = d.stimulus_ids.size(), cols = d.layout.total();
    if (blob.size() != rows * cols * 4) {
      throw FormatError("signal file " + signal_path.string() + " holds " +
                        std::to_string(blob.size()) + " bytes, expected " +
                        std::to_string(rows * cols * 4) + " (" + std::to_string(rows) + " x " +
                        std::to_string(cols) + " float32)");
    }
    d.signals = Tensor({rows, cols}, io::from_f32le(blob));
    if (m.contains("norm_stats")) d.norm_stats = norm_stats_from_json(m["norm_stats"]);
    d.validate();
    return d;
  } catch (const Json::exception& e) {
    throw FormatError("malformed manifest " + manifest_path.string() + ": " + e.what());
  }
}

NormStats zscore_fit(const FmriDataset& dataset) {
  dataset.validate();
  const auto train = dataset.indices(Split::kTrain);
  if (train.empty()) throw ValidationError("zscore_fit: dataset has no training samples");
  const std::size_t l = dataset.signals.cols();
  NormStats s;
  s.mean.assign(l, 0.0);
  s.std.assign(l, 0.0);
  for (auto r : train)
    for (std::size_t j = 0; j < l; ++j) s.mean[j] += dataset.signals(r, j);
  const double n = static_cast<double>(train.size());
  for (auto& v : s.mean) v /= n;
  for (auto r : train) {
    for (std::size_t j = 0; j < l; ++j) {
      const double d = dataset.signals(r, j) - s.mean[j];
      s.std[j] += d * d;
    }
  }
  for (std::size_t j = 0; j < l; ++j) {
    s.std[j] = std::sqrt(s.std[j] / n);
    if (s.std[j] < 1e-8) s.degenerate.push_back(j);
  }
  return s;
}

Tensor zscore_apply(const Tensor& signals, const NormStats& stats) {
  const std::size_t l = signals.cols();
  if (stats.mean.size() != l || stats.std.size() != l) {
    throw ValidationError("zscore_apply: stats length " + std::to_string(stats.mean.size()) +
                          " does not match signal width " + std::to_string(l));
  }
  Tensor out = signals;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    for (std::size_t j = 0; j < l; ++j) {
      double& v = out(r, j);
      v = stats.std[j] < 1e-8 ? 0.0 : (v - stats.mean[j]) / stats.std[j];
    }
  }
  return out;
}

FmriDataset zscore_apply(const FmriDataset& dataset, const NormStats& stats) {
  FmriDataset out = dataset;
  out.signals = zscore_apply(dataset.signals, stats);
  out.norm_stats = stats;
  return out;
}

Tensor zscore_unapply(const Tensor& normalized, const NormStats& stats) {
  const std::size_t l = normalized.cols();
  if (stats.mean.size() != l || stats.std.size() != l) {
    throw ValidationError("zscore_unapply: stats length mismatch");
  }
  Tensor out = normalized;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    for (std::size_t j = 0; j < l; ++j) {
      double& v = out(r, j);
      v = stats.std[j] < 1e-8 ? stats.mean[j] : v * stats.std[j] + stats.mean[j];
    }
  }
  return out;
}

}  // namespace lea
