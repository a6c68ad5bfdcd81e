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
#include <utility>
#include <vector>

#include <json.hpp>

#include "lea/numerics/tensor.h"

namespace lea::io {

using Json = nlohmann::json;

std::uint32_t crc32(std::span<const unsigned char> bytes);
std::uint32_t crc32_file(const std::filesystem::path& path);
std::string crc32_hex(std::uint32_t crc);

// float64 values rounded to float32, little-endian.
std::vector<unsigned char> to_f32le(std::span<const double> values);
std::vector<double> from_f32le(std::span<const unsigned char> bytes);
// Rounds every value through float32 (the on-disk precision).
void quantize_f32(std::span<double> values);

std::vector<unsigned char> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const unsigned char> bytes);
Json read_json(const std::filesystem::path& path);
// Pretty-printed with a trailing newline; key order is sorted, so output is
// a pure function of the value.
void write_json(const std::filesystem::path& path, const Json& value);

// Checkpoint-style container shared by model and alignment files:
//   bytes 0..7   magic "LEACKPT1"
//   bytes 8..15  header length H, uint64 little-endian
//   next H bytes JSON header {format_version, kind, ..., tensors: {name:
//                {shape, offset}}, blob_bytes, blob_crc32}
//   remainder    concatenated float32 little-endian tensor data
// Offsets count bytes from the start of the blob region.
inline constexpr std::string_view kContainerMagic = "LEACKPT1";
inline constexpr int kContainerVersion = 1;

struct NamedTensor {
  std::string name;
  Tensor value;
};

struct Container {
  Json header;  // caller metadata plus the tensor table
  std::vector<NamedTensor> tensors;  // blob order

  const Tensor& tensor(const std::string& name) const;
};

void write_container(const std::filesystem::path& path, const std::string& kind, Json meta,
                     const std::vector<NamedTensor>& tensors);
// Validates magic, version, kind, CRC and the tensor table. Never returns a
// partially read container.
Container read_container(const std::filesystem::path& path, const std::string& expected_kind);
// Header only, for inspection; still verifies magic and length.
Json read_container_header(const std::filesystem::path& path);

}  // namespace lea::io
