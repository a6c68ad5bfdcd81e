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

#include "lea/embeddings/embeddings.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <spdlog/spdlog.h>

#include "lea/error.h"
#include "lea/io/io.h"
#include "lea/numerics/rng.h"

namespace lea {

namespace fs = std::filesystem;
using io::Json;

EmbeddingTable EmbeddingTable::from_rows(std::vector<std::string> ids,
                                         const std::vector<std::vector<double>>& rows) {
  if (ids.size() != rows.size()) throw ValidationError("one embedding row per id required");
  if (rows.empty()) throw ValidationError("embedding table must not be empty");
  const std::size_t d = rows[0].size();
  std::vector<double> flat;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != d) {
      throw ValidationError("embedding row '" + ids[i] + "' has length " +
                            std::to_string(rows[i].size()) + ", expected " + std::to_string(d));
    }
    flat.insert(flat.end(), rows[i].begin(), rows[i].end());
  }
  EmbeddingTable t{std::move(ids), Tensor({rows.size(), d}, std::move(flat))};
  t.validate();
  return t;
}

std::optional<std::size_t> EmbeddingTable::find(const std::string& id) const {
  auto it = std::find(ids.begin(), ids.end(), id);
  if (it == ids.end()) return std::nullopt;
  return static_cast<std::size_t>(it - ids.begin());
}

void EmbeddingTable::validate() const {
  if (ids.empty()) throw ValidationError("embedding table must not be empty");
  if (vectors.ndim() != 2 || vectors.rows() != ids.size()) {
    throw ValidationError("embedding matrix " + shape_to_string(vectors.shape()) +
                          " does not have one row per id");
  }
  std::set<std::string> seen;
  for (const auto& id : ids)
    if (!seen.insert(id).second) throw ValidationError("duplicate embedding id: " + id);
  if (!vectors.all_finite()) throw ValidationError("embedding table contains non-finite values");
}

Tensor EmbeddingTable::select(const std::vector<std::string>& wanted) const {
  require_coverage(*this, wanted);
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < ids.size(); ++i) index[ids[i]] = i;
  const std::size_t d = dim();
  Tensor out({wanted.size(), d});
  for (std::size_t r = 0; r < wanted.size(); ++r)
    std::copy_n(vectors.data() + index[wanted[r]] * d, d, out.data() + r * d);
  return out;
}

void require_coverage(const EmbeddingTable& table, const std::vector<std::string>& required) {
  std::set<std::string> have(table.ids.begin(), table.ids.end());
  std::vector<std::string> missing;
  std::set<std::string> reported;
  for (const auto& id : required)
    if (!have.count(id) && reported.insert(id).second) missing.push_back(id);
  if (missing.empty()) return;
  std::string msg = "embeddings missing for " + std::to_string(missing.size()) + " id(s): ";
  for (std::size_t i = 0; i < missing.size() && i < 20; ++i) msg += (i ? ", " : "") + missing[i];
  if (missing.size() > 20) msg += ", ...";
  throw ValidationError(msg);
}

void save_embedding_bundle(const EmbeddingTable& table, const fs::path& dir,
                           const std::string& blob_file) {
  table.validate();
  const auto blob = io::to_f32le(table.vectors.values());
  io::write_file(dir / blob_file, blob);
  io::write_json(dir / "manifest.json", {{"format_version", 1},
                                         {"dim", table.dim()},
                                         {"ids", table.ids},
                                         {"blob_file", blob_file},
                                         {"blob_crc32", io::crc32_hex(io::crc32(blob))},
                                         {"dtype", "f32le"}});
}

EmbeddingTable load_embedding_bundle(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path)) throw ValidationError("no manifest.json in " + dir.string());
  const Json m = io::read_json(manifest_path);
  try {
    if (m.at("format_version").get<int>() != 1) {
      throw FormatError("unknown embedding bundle format_version in " + manifest_path.string());
    }
    const auto dim = m.at("dim").get<std::size_t>();
    auto ids = m.at("ids").get<std::vector<std::string>>();
    if (dim == 0 || ids.empty()) throw FormatError("embedding bundle has no rows or zero dim");
    const auto blob = io::read_file(dir / m.value("blob_file", std::string("embeddings.f32")));
    if (m.contains("blob_crc32") &&
        m["blob_crc32"].get<std::string>() != io::crc32_hex(io::crc32(blob))) {
      throw FormatError("checksum mismatch for embedding blob in " + dir.string());
    }
    if (blob.size() != ids.size() * dim * 4) {
      throw FormatError("embedding blob in " + dir.string() + " holds " +
                        std::to_string(blob.size()) + " bytes, expected " +
                        std::to_string(ids.size()) + " rows of dim " + std::to_string(dim));
    }
    const std::size_t rows = ids.size();
    EmbeddingTable t{std::move(ids), Tensor({rows, dim}, io::from_f32le(blob))};
    t.validate();
    return t;
  } catch (const Json::exception& e) {
    throw FormatError("malformed embedding manifest " + manifest_path.string() + ": " + e.what());
  }
}

TableProvider::TableProvider(EmbeddingTable table) : table_(std::move(table)) {
  table_.validate();
  for (std::size_t i = 0; i < table_.ids.size(); ++i) index_[table_.ids[i]] = i;
}

std::vector<double> TableProvider::lookup(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw ValidationError("unknown embedding id: " + id);
  auto row = table_.vectors.row(it->second);
  return {row.begin(), row.end()};
}

namespace {

// Rows of a seeded random orthonormal basis via two passes of modified
// Gram-Schmidt over Gaussian rows.
Tensor orthonormal_rows(std::size_t count, std::size_t dim, RngStream& rng) {
  Tensor q({count, dim});
  for (auto& v : q.storage()) v = rng.normal();
  for (std::size_t i = 0; i < count; ++i) {
    auto qi = q.row(i);
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t j = 0; j < i; ++j) {
        auto qj = q.row(j);
        const double p = dot(qi, qj);
        for (std::size_t e = 0; e < dim; ++e) qi[e] -= p * qj[e];
      }
    }
    const double n = norm2(qi);
    for (auto& v : qi) v /= n;
  }
  return q;
}

}  // namespace

SyntheticProvider::SyntheticProvider(std::vector<std::string> classes, std::size_t dim,
                                     std::uint64_t seed, double instance_noise)
    : classes_(std::move(classes)), dim_(dim), seed_(seed), noise_(instance_noise) {
  if (classes_.empty() || dim_ == 0) throw ValidationError("synthetic provider needs classes and dim >= 1");
  if (!(noise_ >= 0.0)) throw ValidationError("instance noise must be non-negative");
  for (std::size_t i = 0; i < classes_.size(); ++i) {
    if (!index_.emplace(classes_[i], i).second) {
      throw ValidationError("duplicate class name: " + classes_[i]);
    }
  }
  RngStream rng(seed_, 0x70726f746fULL);
  if (classes_.size() <= dim_) {
    prototypes_ = orthonormal_rows(classes_.size(), dim_, rng);
  } else {
    spdlog::warn("synthetic provider: {} classes exceed dim {}; prototypes are not orthogonal",
                 classes_.size(), dim_);
    prototypes_ = Tensor({classes_.size(), dim_});
    for (auto& v : prototypes_.storage()) v = rng.normal();
    prototypes_ = normalize_rows(prototypes_, "prototype");
  }
}

std::vector<double> SyntheticProvider::lookup(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw ValidationError("unknown class: " + id);
  auto row = prototypes_.row(it->second);
  return {row.begin(), row.end()};
}

std::vector<double> SyntheticProvider::instance(const std::string& id,
                                                const std::string& class_name) const {
  std::vector<double> v = lookup(class_name);
  if (noise_ == 0.0) return v;
  RngStream rng(seed_, fnv1a64(id));
  for (auto& x : v) x += noise_ * rng.normal();
  const double n = norm2(v);
  for (auto& x : v) x /= n;
  return v;
}

Tensor class_prototypes(const EmbeddingProvider& provider, const std::vector<std::string>& names) {
  if (names.empty()) throw ValidationError("class_prototypes: no class names given");
  std::set<std::string> seen;
  std::vector<std::string> unknown;
  for (const auto& n : names) {
    if (!seen.insert(n).second) throw ValidationError("duplicate class name: " + n);
    if (!provider.contains(n)) unknown.push_back(n);
  }
  if (!unknown.empty()) {
    std::string msg = "unknown class name(s): ";
    for (std::size_t i = 0; i < unknown.size(); ++i) msg += (i ? ", " : "") + unknown[i];
    throw ValidationError(msg);
  }
  Tensor out({names.size(), provider.dim()});
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto v = provider.lookup(names[i]);
    std::copy(v.begin(), v.end(), out.row(i).begin());
  }
  return normalize_rows(out, "prototype");
}

Gallery Gallery::from_table(const EmbeddingTable& table) {
  table.validate();
  return {table.ids, table.vectors, {}};
}

std::vector<RetrievalHit> retrieve_nearest(std::span<const double> query, const Gallery& gallery,
                                           std::size_t k) {
  if (gallery.size() == 0) throw ValidationError("retrieve_nearest: empty gallery");
  if (k == 0 || k > gallery.size()) {
    throw ValidationError("retrieve_nearest: k must be in [1, " + std::to_string(gallery.size()) + "]");
  }
  if (query.size() != gallery.vectors.cols()) {
    throw ShapeError("retrieve_nearest: query dim " + std::to_string(query.size()) +
                     " vs gallery dim " + std::to_string(gallery.vectors.cols()));
  }
  const double qn = norm2(query);
  if (qn == 0.0) throw ValidationError("retrieve_nearest: zero-norm query");
  std::vector<double> score(gallery.size());
  for (std::size_t i = 0; i < gallery.size(); ++i) {
    const auto g = gallery.vectors.row(i);
    const double gn = norm2(g);
    score[i] = gn == 0.0 ? -2.0 : dot(query, g) / (qn * gn);
  }
  std::vector<std::size_t> order(gallery.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
  std::vector<RetrievalHit> hits;
  for (std::size_t i = 0; i < k; ++i) hits.push_back({gallery.ids[order[i]], order[i], score[order[i]]});
  return hits;
}

Tensor normalize_rows(const Tensor& m, const std::string& what) {
  Tensor out = m;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    const double n = norm2(row);
    if (n == 0.0 || !std::isfinite(n)) {
      throw ValidationError(what + " row " + std::to_string(r) + " has zero or non-finite norm");
    }
    for (auto& v : row) v /= n;
  }
  return out;
}

}  // namespace lea
