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

#include "lea/dataset/roi_layout.h"

#include <set>

#include "lea/error.h"

namespace lea {

RoiLayout::RoiLayout(std::vector<Roi> rois) : rois_(std::move(rois)) {
  if (rois_.empty()) throw ValidationError("ROI layout must contain at least one region");
  std::set<std::string> seen;
  for (const auto& r : rois_) {
    if (r.name.empty()) throw ValidationError("ROI name must not be empty");
    if (!seen.insert(r.name).second) throw ValidationError("duplicate ROI name: " + r.name);
    if (r.voxels == 0) throw ValidationError("ROI " + r.name + " has zero voxels");
    offsets_.push_back(total_);
    total_ += r.voxels;
  }
}

namespace {

RoiLayout named(const std::vector<std::string>& names, const std::vector<std::size_t>& voxels,
                const char* preset) {
  if (voxels.size() != names.size()) {
    throw ValidationError(std::string(preset) + " layout needs " + std::to_string(names.size()) +
                          " voxel counts, got " + std::to_string(voxels.size()));
  }
  std::vector<Roi> rois;
  for (std::size_t i = 0; i < names.size(); ++i) rois.push_back({names[i], voxels[i]});
  return RoiLayout(std::move(rois));
}

}  // namespace

RoiLayout RoiLayout::god(const std::vector<std::size_t>& voxels) {
  return named({"V1", "V2", "V3", "V4", "FFA", "PPA", "LOC", "HVC"}, voxels, "GOD");
}

RoiLayout RoiLayout::bold5000(const std::vector<std::size_t>& voxels) {
  return named({"EV", "LOC", "OPA", "PPA", "RSC"}, voxels, "BOLD5000");
}

RoiLayout RoiLayout::desk() { return RoiLayout({{"EV", 48}, {"LOC", 40}, {"PPA", 32}}); }

nlohmann::json RoiLayout::to_json() const {
  auto arr = nlohmann::json::array();
  for (const auto& r : rois_) arr.push_back({{"name", r.name}, {"voxel_count", r.voxels}});
  return arr;
}

RoiLayout RoiLayout::from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw FormatError("rois must be an array");
  std::vector<Roi> rois;
  for (const auto& e : j) {
    const auto count = e.at("voxel_count").get<long long>();
    if (count <= 0) throw ValidationError("ROI voxel_count must be positive");
    rois.push_back({e.at("name").get<std::string>(), static_cast<std::size_t>(count)});
  }
  return RoiLayout(std::move(rois));
}

}  // namespace lea
