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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lea/numerics/tensor.h"

namespace lea {

// Ordered id -> D-vector table; the in-memory form of an embedding bundle.
struct EmbeddingTable {
  std::vector<std::string> ids;
  Tensor vectors;  // ids.size() x D

  // Rejects rows of differing length.
  static EmbeddingTable from_rows(std::vector<std::string> ids,
                                  const std::vector<std::vector<double>>& rows);

  std::size_t size() const { return ids.size(); }
  std::size_t dim() const { return vectors.cols(); }
  std::optional<std::size_t> find(const std::string& id) const;
  // Rows for `wanted` in that order. Throws ValidationError listing every
  // missing id.
  Tensor select(const std::vector<std::string>& wanted) const;
  void validate() const;

  friend bool operator==(const EmbeddingTable&, const EmbeddingTable&) = default;
};

// Throws ValidationError naming the ids in `required` that the table lacks.
void require_coverage(const EmbeddingTable& table, const std::vector<std::string>& required);

// Directory bundle: manifest.json {format_version, dim, ids, blob_file,
// blob_crc32, dtype} plus float32 little-endian rows in id order.
void save_embedding_bundle(const EmbeddingTable& table, const std::filesystem::path& dir,
                           const std::string& blob_file = "embeddings.f32");
EmbeddingTable load_embedding_bundle(const std::filesystem::path& dir);

// Stand-in for an image/text encoder: maps stimulus ids or class names to
// D-vectors. Implementations are immutable and safe for concurrent reads.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::size_t dim() const = 0;
  virtual bool contains(const std::string& id) const = 0;
  // Throws ValidationError for unknown ids.
  virtual std::vector<double> lookup(const std::string& id) const = 0;
};

// Provider backed by a table, e.g. features exported from a real encoder.
class TableProvider final : public EmbeddingProvider {
 public:
  explicit TableProvider(EmbeddingTable table);
  std::size_t dim() const override { return table_.dim(); }
  bool contains(const std::string& id) const override { return index_.count(id) != 0; }
  std::vector<double> lookup(const std::string& id) const override;
  const EmbeddingTable& table() const { return table_; }

 private:
  EmbeddingTable table_;
  std::map<std::string, std::size_t> index_;
};

// Class prototypes are rows of a seeded random orthonormal basis (random
// unit vectors when there are more classes than dimensions). lookup() on a
// class name returns its prototype.
class SyntheticProvider final : public EmbeddingProvider {
 public:
  SyntheticProvider(std::vector<std::string> classes, std::size_t dim, std::uint64_t seed,
                    double instance_noise);

  std::size_t dim() const override { return dim_; }
  bool contains(const std::string& id) const override { return index_.count(id) != 0; }
  std::vector<double> lookup(const std::string& id) const override;

  // normalize(prototype + noise * N(0, I)), a pure function of (seed, id).
  std::vector<double> instance(const std::string& id, const std::string& class_name) const;
  const std::vector<std::string>& classes() const { return classes_; }

 private:
  std::vector<std::string> classes_;
  std::size_t dim_;
  std::uint64_t seed_;
  double noise_;
  Tensor prototypes_;
  std::map<std::string, std::size_t> index_;
};

// K x D matrix of unit-norm prototypes, row i for names[i]. Throws on
// duplicate names and lists every unknown name.
Tensor class_prototypes(const EmbeddingProvider& provider, const std::vector<std::string>& names);

struct Gallery {
  std::vector<std::string> ids;
  Tensor vectors;  // ids.size() x D
  std::vector<std::string> labels;  // optional, one per entry

  static Gallery from_table(const EmbeddingTable& table);
  std::size_t size() const { return ids.size(); }
};

struct RetrievalHit {
  std::string id;
  std::size_t index = 0;
  double score = 0.0;  // cosine similarity
};

// Top-k gallery entries by cosine similarity, descending; ties keep gallery
// order. Throws on a zero-norm query, an empty gallery or k > size.
std::vector<RetrievalHit> retrieve_nearest(std::span<const double> query, const Gallery& gallery,
                                           std::size_t k);

// Row-wise unit normalization. Throws naming the first zero row.
Tensor normalize_rows(const Tensor& m, const std::string& what);

}  // namespace lea
