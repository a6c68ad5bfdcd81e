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

#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

namespace lea {

struct Roi {
  std::string name;
  std::size_t voxels = 0;

  friend bool operator==(const Roi&, const Roi&) = default;
};

// Ordered brain regions; a signal vector is the concatenation of the ROI
// voxel blocks in this order.
class RoiLayout {
 public:
  RoiLayout() = default;
  // Throws ValidationError on duplicate names, empty names or zero voxels.
  explicit RoiLayout(std::vector<Roi> rois);

  std::size_t size() const { return rois_.size(); }
  std::size_t total() const { return total_; }
  std::size_t offset(std::size_t roi) const { return offsets_.at(roi); }
  const Roi& operator[](std::size_t i) const { return rois_.at(i); }
  const std::vector<Roi>& rois() const { return rois_; }

  // V1, V2, V3, V4, FFA, PPA, LOC, HVC with caller-chosen voxel counts.
  static RoiLayout god(const std::vector<std::size_t>& voxels);
  // EV, LOC, OPA, PPA, RSC.
  static RoiLayout bold5000(const std::vector<std::size_t>& voxels);
  // Three-region layout totalling 120 voxels used by the synthetic presets.
  static RoiLayout desk();

  nlohmann::json to_json() const;
  static RoiLayout from_json(const nlohmann::json& j);

  friend bool operator==(const RoiLayout& a, const RoiLayout& b) { return a.rois_ == b.rois_; }

 private:
  std::vector<Roi> rois_;
  std::vector<std::size_t> offsets_;
  std::size_t total_ = 0;
};

}  // namespace lea
