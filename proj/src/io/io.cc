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

#include "lea/io/io.h"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <zlib.h>

#include "lea/error.h"

namespace lea::io {

namespace fs = std::filesystem;

std::uint32_t crc32(std::span<const unsigned char> bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  std::size_t done = 0;
  while (done < bytes.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - done, 1u << 30));
    crc = ::crc32(crc, bytes.data() + done, chunk);
    done += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

std::uint32_t crc32_file(const fs::path& path) { return crc32(read_file(path)); }

std::string crc32_hex(std::uint32_t crc) {
  std::ostringstream os;
  os << std::hex << std::setw(8) << std::setfill('0') << crc;
  return os.str();
}

std::vector<unsigned char> to_f32le(std::span<const double> values) {
  std::vector<unsigned char> out(values.size() * 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(values[i]));
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
    std::memcpy(out.data() + 4 * i, &bits, 4);
  }
  return out;
}

std::vector<double> from_f32le(std::span<const unsigned char> bytes) {
  if (bytes.size() % 4 != 0) throw FormatError("float32 blob length is not a multiple of 4");
  std::vector<double> out(bytes.size() / 4);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint32_t bits;
    std::memcpy(&bits, bytes.data() + 4 * i, 4);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
    out[i] = static_cast<double>(std::bit_cast<float>(bits));
  }
  return out;
}

void quantize_f32(std::span<double> values) {
  for (auto& v : values) v = static_cast<double>(static_cast<float>(v));
}

std::vector<unsigned char> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0, std::ios::beg);
  std::vector<unsigned char> data(size);
  if (size && !in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(size))) {
    throw FormatError("short read on " + path.string());
  }
  return data;
}

void write_file(const fs::path& path, std::span<const unsigned char> bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed on " + path.string());
}

Json read_json(const fs::path& path) {
  const auto bytes = read_file(path);
  try {
    return Json::parse(bytes.begin(), bytes.end());
  } catch (const Json::parse_error& e) {
    throw FormatError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const Json& value) {
  const std::string text = value.dump(2) + "\n";
  write_file(path, std::span(reinterpret_cast<const unsigned char*>(text.data()), text.size()));
}

const Tensor& Container::tensor(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return t.value;
  throw FormatError("container has no tensor named '" + name + "'");
}

void write_container(const fs::path& path, const std::string& kind, Json meta,
                     const std::vector<NamedTensor>& tensors) {
  std::vector<unsigned char> blob;
  Json table = Json::object();
  for (const auto& t : tensors) {
    if (table.contains(t.name)) throw ValidationError("duplicate tensor name: " + t.name);
    table[t.name] = {{"shape", t.value.shape()}, {"offset", blob.size()}};
    const auto bytes = to_f32le(t.value.values());
    blob.insert(blob.end(), bytes.begin(), bytes.end());
  }
  meta["format_version"] = kContainerVersion;
  meta["kind"] = kind;
  meta["tensors"] = std::move(table);
  meta["blob_bytes"] = blob.size();
  meta["blob_crc32"] = crc32_hex(crc32(blob));
  const std::string header = meta.dump();

  std::vector<unsigned char> file(kContainerMagic.begin(), kContainerMagic.end());
  std::uint64_t len = header.size();
  for (int i = 0; i < 8; ++i) file.push_back(static_cast<unsigned char>(len >> (8 * i)));
  file.insert(file.end(), header.begin(), header.end());
  file.insert(file.end(), blob.begin(), blob.end());
  write_file(path, file);
}

namespace {

struct RawContainer {
  Json header;
  std::vector<unsigned char> bytes;
  std::size_t blob_start = 0;
};

RawContainer parse_raw(const fs::path& path) {
  RawContainer raw;
  raw.bytes = read_file(path);
  const auto& b = raw.bytes;
  if (b.size() < 16 || std::memcmp(b.data(), kContainerMagic.data(), 8) != 0) {
    throw FormatError(path.string() + ": not a LEA container (bad magic or truncated)");
  }
  std::uint64_t len = 0;
  for (int i = 0; i < 8; ++i) len |= static_cast<std::uint64_t>(b[8 + i]) << (8 * i);
  if (len > b.size() - 16) throw FormatError(path.string() + ": truncated header");
  try {
    raw.header = Json::parse(b.begin() + 16, b.begin() + 16 + static_cast<long>(len));
  } catch (const Json::parse_error& e) {
    throw FormatError(path.string() + ": corrupt header: " + e.what());
  }
  raw.blob_start = 16 + len;
  if (!raw.header.is_object() || raw.header.value("format_version", -1) != kContainerVersion) {
    throw FormatError(path.string() + ": unsupported format_version");
  }
  return raw;
}

}  // namespace

Json read_container_header(const fs::path& path) { return parse_raw(path).header; }

Container read_container(const fs::path& path, const std::string& expected_kind) {
  RawContainer raw = parse_raw(path);
  const Json& h = raw.header;
  if (h.value("kind", std::string()) != expected_kind) {
    throw FormatError(path.string() + ": expected a '" + expected_kind + "' container, found '" +
                      h.value("kind", std::string("?")) + "'");
  }
  const std::size_t blob_len = raw.bytes.size() - raw.blob_start;
  if (!h.contains("blob_bytes") || h["blob_bytes"].get<std::size_t>() != blob_len) {
    throw FormatError(path.string() + ": blob length mismatch (file truncated?)");
  }
  std::span<const unsigned char> blob(raw.bytes.data() + raw.blob_start, blob_len);
  if (h.value("blob_crc32", std::string()) != crc32_hex(crc32(blob))) {
    throw FormatError(path.string() + ": blob CRC32 mismatch");
  }
  Container c;
  c.header = h;
  std::vector<std::pair<std::size_t, std::string>> order;
  for (const auto& [name, entry] : h.at("tensors").items()) {
    order.emplace_back(entry.at("offset").get<std::size_t>(), name);
  }
  std::sort(order.begin(), order.end());
  for (const auto& [offset, name] : order) {
    const Shape shape = h["tensors"][name].at("shape").get<Shape>();
    if (shape.empty()) throw FormatError(path.string() + ": tensor '" + name + "' has empty shape");
    const std::size_t bytes = shape_numel(shape) * 4;
    if (offset + bytes > blob_len) {
      throw FormatError(path.string() + ": tensor '" + name + "' extends past the blob");
    }
    c.tensors.push_back({name, Tensor(shape, from_f32le(blob.subspan(offset, bytes)))});
  }
  return c;
}

}  // namespace lea::io
