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

#include <algorithm>
#include <cmath>
#include <filesystem>

#include <gtest/gtest.h>

#include "lea/embeddings/embeddings.h"
#include "lea/error.h"
#include "lea/io/io.h"
#include "lea/numerics/rng.h"

using namespace lea;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("lea_emb_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::vector<std::string> class_names(std::size_t k) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back("class-" + std::to_string(i));
  return out;
}

Tensor random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
  Tensor t({r, c});
  RngStream rng(seed);
  for (double& v : t.values()) v = rng.normal();
  return t;
}

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

}  // namespace

// ---------------------------------------------------------------- provider

TEST(SyntheticProviderTest, NoiselessInstanceIsThePrototype) {
  const SyntheticProvider p(class_names(10), 32, 5, 0.0);
  for (const auto& c : p.classes()) EXPECT_EQ(p.instance("img-" + c, c), p.lookup(c));
}

TEST(SyntheticProviderTest, PrototypesAreOrthonormalWhenKFitsInD) {
  const SyntheticProvider p(class_names(50), 64, 6, 0.1);
  const Tensor proto = class_prototypes(p, p.classes());
  for (std::size_t i = 0; i < 50; ++i)
    for (std::size_t j = 0; j < 50; ++j)
      EXPECT_NEAR(dot(proto.row(i), proto.row(j)), i == j ? 1.0 : 0.0, 1e-8);
}

TEST(SyntheticProviderTest, NoisyInstancesStayNearestToTheirPrototype) {
  const auto names = class_names(50);
  const SyntheticProvider p(names, 64, 7, 0.1);
  const Tensor proto = class_prototypes(p, names);
  const Gallery g{names, proto, {}};
  std::size_t correct = 0, total = 0;
  for (std::size_t c = 0; c < names.size(); ++c) {
    for (int i = 0; i < 20; ++i) {
      const auto v = p.instance(names[c] + "/img" + std::to_string(i), names[c]);
      EXPECT_NEAR(norm2(v), 1.0, 1e-12);
      correct += retrieve_nearest(v, g, 1)[0].index == c;
      ++total;
    }
  }
  EXPECT_GE(static_cast<double>(correct) / static_cast<double>(total), 0.99);
}

TEST(SyntheticProviderTest, InstanceIsAPureFunctionOfSeedAndId) {
  const SyntheticProvider a(class_names(4), 16, 9, 0.3), b(class_names(4), 16, 9, 0.3);
  EXPECT_EQ(a.instance("x", "class-1"), b.instance("x", "class-1"));
  EXPECT_NE(a.instance("x", "class-1"), a.instance("y", "class-1"));
  const SyntheticProvider c(class_names(4), 16, 10, 0.3);
  EXPECT_NE(a.lookup("class-1"), c.lookup("class-1"));
}

TEST(SyntheticProviderTest, RejectsInvalidArguments) {
  EXPECT_THROW(SyntheticProvider({}, 8, 1, 0.0), ValidationError);
  EXPECT_THROW(SyntheticProvider({"a", "a"}, 8, 1, 0.0), ValidationError);
  EXPECT_THROW(SyntheticProvider({"a"}, 8, 1, -0.1), ValidationError);
}

// ---------------------------------------------------------------- prototypes

TEST(ClassPrototypesTest, ShapeAndUnitRows) {
  const SyntheticProvider p(class_names(50), 64, 11, 0.0);
  const Tensor proto = class_prototypes(p, p.classes());
  EXPECT_EQ(proto.shape(), (std::vector<std::size_t>{50, 64}));
  for (std::size_t i = 0; i < 50; ++i) EXPECT_NEAR(norm2(proto.row(i)), 1.0, 1e-12);
  EXPECT_EQ(class_prototypes(p, {"class-3"}).shape(), (std::vector<std::size_t>{1, 64}));
}

TEST(ClassPrototypesTest, RejectsDuplicatesAndListsUnknownNames) {
  const SyntheticProvider p(class_names(5), 8, 12, 0.0);
  EXPECT_THROW(class_prototypes(p, {"class-1", "class-1"}), ValidationError);
  EXPECT_THROW(class_prototypes(p, {}), ValidationError);
  const std::string msg = message_of([&] { class_prototypes(p, {"class-1", "zebra", "quokka"}); });
  EXPECT_NE(msg.find("zebra"), std::string::npos);
  EXPECT_NE(msg.find("quokka"), std::string::npos);
}

TEST(ClassPrototypesTest, TableProviderNormalizes) {
  const TableProvider p(EmbeddingTable::from_rows({"a", "b"}, {{3, 4}, {0, 2}}));
  const Tensor proto = class_prototypes(p, {"b", "a"});
  EXPECT_DOUBLE_EQ(proto(0, 1), 1.0);
  EXPECT_DOUBLE_EQ(proto(1, 0), 0.6);
  EXPECT_DOUBLE_EQ(proto(1, 1), 0.8);
  EXPECT_THROW(p.lookup("c"), ValidationError);
}

// ---------------------------------------------------------------- retrieval

TEST(RetrievalTest, GalleryEntryRetrievesItself) {
  const Tensor m = random_matrix(30, 12, 13);
  std::vector<std::string> ids;
  for (int i = 0; i < 30; ++i) ids.push_back("g" + std::to_string(i));
  const Gallery g{ids, m, {}};
  for (std::size_t i = 0; i < 30; ++i) {
    const auto hit = retrieve_nearest(m.row(i), g, 1)[0];
    EXPECT_EQ(hit.index, i);
    EXPECT_EQ(hit.id, ids[i]);
    EXPECT_NEAR(hit.score, 1.0, 1e-12);
  }
}

TEST(RetrievalTest, InvariantToQueryScale) {
  const Tensor m = random_matrix(40, 8, 14);
  const Gallery g{std::vector<std::string>(40, "x"), m, {}};
  const Tensor q = random_matrix(1, 8, 15);
  std::vector<double> scaled(q.values().begin(), q.values().end());
  for (double& v : scaled) v *= 37.5;
  const auto a = retrieve_nearest(q.row(0), g, 5), b = retrieve_nearest(scaled, g, 5);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(a[i].index, b[i].index);
    EXPECT_NEAR(a[i].score, b[i].score, 1e-12);
  }
}

TEST(RetrievalTest, MatchesBruteForceRanking) {
  const Tensor m = random_matrix(100, 10, 16);
  const Gallery g{std::vector<std::string>(100, "x"), m, {}};
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Tensor q = random_matrix(1, 10, 100 + s);
    std::vector<std::pair<double, std::size_t>> oracle;
    for (std::size_t i = 0; i < 100; ++i) {
      double qq = 0, gg = 0, qg = 0;
      for (std::size_t j = 0; j < 10; ++j) {
        qq += q(0, j) * q(0, j);
        gg += m(i, j) * m(i, j);
        qg += q(0, j) * m(i, j);
      }
      oracle.emplace_back(-qg / std::sqrt(qq * gg), i);
    }
    std::sort(oracle.begin(), oracle.end());
    const auto hits = retrieve_nearest(q.row(0), g, 10);
    for (std::size_t k = 0; k < 10; ++k) {
      EXPECT_EQ(hits[k].index, oracle[k].second);
      EXPECT_NEAR(hits[k].score, -oracle[k].first, 1e-12);
    }
  }
}

TEST(RetrievalTest, RejectsBadQueries) {
  const Gallery g{{"a", "b"}, random_matrix(2, 3, 17), {}};
  EXPECT_THROW(retrieve_nearest(std::vector<double>{0, 0, 0}, g, 1), ValidationError);
  EXPECT_THROW(retrieve_nearest(std::vector<double>{1, 0}, g, 1), ShapeError);
  EXPECT_THROW(retrieve_nearest(std::vector<double>{1, 0, 0}, g, 3), ValidationError);
  EXPECT_THROW(retrieve_nearest(std::vector<double>{1, 0, 0}, g, 0), ValidationError);
}

// ---------------------------------------------------------------- tables

TEST(EmbeddingTableTest, BundleRoundTrip) {
  TempDir tmp;
  std::vector<std::string> ids;
  std::vector<std::vector<double>> rows;
  RngStream rng(18);
  for (int i = 0; i < 25; ++i) {
    ids.push_back("stim" + std::to_string(i));
    std::vector<double> r(512);
    for (double& v : r) v = static_cast<float>(rng.normal());
    rows.push_back(r);
  }
  const EmbeddingTable t = EmbeddingTable::from_rows(ids, rows);
  EXPECT_EQ(t.dim(), 512u);
  save_embedding_bundle(t, tmp.path());
  EXPECT_EQ(load_embedding_bundle(tmp.path()), t);
}

TEST(EmbeddingTableTest, RejectsMixedLengthsAndDuplicates) {
  const std::string msg =
      message_of([] { EmbeddingTable::from_rows({"a", "b"}, {{1, 2, 3}, {1, 2}}); });
  EXPECT_NE(msg.find("'b'"), std::string::npos);
  EXPECT_THROW(EmbeddingTable::from_rows({"a", "a"}, {{1}, {2}}), ValidationError);
  EXPECT_THROW(EmbeddingTable::from_rows({}, {}), ValidationError);
}

TEST(EmbeddingTableTest, CoverageErrorNamesEveryMissingId) {
  const EmbeddingTable t = EmbeddingTable::from_rows({"a", "b"}, {{1}, {2}});
  EXPECT_NO_THROW(require_coverage(t, {"b", "a", "a"}));
  const std::string msg = message_of([&] { require_coverage(t, {"a", "c", "d", "c"}); });
  EXPECT_NE(msg.find("2 id(s)"), std::string::npos);
  EXPECT_NE(msg.find("c"), std::string::npos);
  EXPECT_NE(msg.find("d"), std::string::npos);
  const std::string sel = message_of([&] { t.select({"zz", "b"}); });
  EXPECT_NE(sel.find("zz"), std::string::npos);
}

TEST(EmbeddingTableTest, SelectReturnsRowsInRequestedOrder) {
  const EmbeddingTable t = EmbeddingTable::from_rows({"a", "b", "c"}, {{1, 1}, {2, 2}, {3, 3}});
  const Tensor s = t.select({"c", "a", "c"});
  EXPECT_EQ(s(0, 0), 3.0);
  EXPECT_EQ(s(1, 1), 1.0);
  EXPECT_EQ(s(2, 0), 3.0);
}

TEST(EmbeddingTableTest, CorruptBundleIsRejected) {
  TempDir tmp;
  save_embedding_bundle(EmbeddingTable::from_rows({"a", "b"}, {{1, 2}, {3, 4}}), tmp.path());
  auto bytes = io::read_file(tmp.path() / "embeddings.f32");
  bytes[2] ^= 1;
  io::write_file(tmp.path() / "embeddings.f32", bytes);
  EXPECT_THROW(load_embedding_bundle(tmp.path()), FormatError);
  EXPECT_THROW(load_embedding_bundle(tmp.path() / "nope"), ValidationError);
}

// ---------------------------------------------------------------- containers

class ContainerTest : public ::testing::Test {
 protected:
  void SetUp() override {
    file_ = tmp_.path() / "c.bin";
    a_ = random_matrix(3, 4, 19);
    b_ = random_matrix(5, 1, 20);
    io::quantize_f32(a_.values());
    io::quantize_f32(b_.values());
    io::write_container(file_, "thing", {{"note", "hi"}}, {{"a", a_}, {"b", b_}});
  }
  TempDir tmp_;
  fs::path file_;
  Tensor a_, b_;
};

TEST_F(ContainerTest, RoundTrip) {
  const io::Container c = io::read_container(file_, "thing");
  EXPECT_EQ(c.tensor("a"), a_);
  EXPECT_EQ(c.tensor("b"), b_);
  EXPECT_EQ(c.header["note"], "hi");
  EXPECT_THROW(c.tensor("zz"), FormatError);
  EXPECT_EQ(io::read_container_header(file_)["kind"], "thing");
}

TEST_F(ContainerTest, WrongKindIsRejected) {
  const std::string msg = message_of([&] { io::read_container(file_, "other"); });
  EXPECT_NE(msg.find("'other'"), std::string::npos);
}

TEST_F(ContainerTest, FlippedBlobByteFailsCrc) {
  auto bytes = io::read_file(file_);
  bytes.back() ^= 0x10;
  io::write_file(file_, bytes);
  const std::string msg = message_of([&] { io::read_container(file_, "thing"); });
  EXPECT_NE(msg.find("CRC32"), std::string::npos);
}

TEST_F(ContainerTest, TruncationAndBadMagicAreRejected) {
  const auto bytes = io::read_file(file_);
  io::write_file(file_, std::vector<unsigned char>(bytes.begin(), bytes.end() - 8));
  EXPECT_THROW(io::read_container(file_, "thing"), FormatError);
  io::write_file(file_, std::vector<unsigned char>(bytes.begin(), bytes.begin() + 20));
  EXPECT_THROW(io::read_container(file_, "thing"), FormatError);
  auto bad = bytes;
  bad[0] = 'X';
  io::write_file(file_, bad);
  EXPECT_THROW(io::read_container_header(file_), FormatError);
}

TEST_F(ContainerTest, DuplicateTensorNamesAreRejected) {
  EXPECT_THROW(io::write_container(tmp_.path() / "d.bin", "thing", io::Json::object(), {{"a", a_}, {"a", b_}}),
               ValidationError);
}

TEST(Float32Test, EncodeDecodeAndCrc) {
  const std::vector<double> v{1.0, -2.5, 0.1};
  const auto bytes = io::to_f32le(v);
  ASSERT_EQ(bytes.size(), 12u);
  EXPECT_EQ(bytes[0], 0x00);
  EXPECT_EQ(bytes[3], 0x3f);  // 1.0f = 0x3f800000 little-endian
  const auto back = io::from_f32le(bytes);
  EXPECT_EQ(back[1], -2.5);
  EXPECT_EQ(back[2], static_cast<double>(0.1f));
  const std::string s = "123456789";
  EXPECT_EQ(io::crc32({reinterpret_cast<const unsigned char*>(s.data()), s.size()}), 0xCBF43926u);
  EXPECT_THROW(io::from_f32le(std::vector<unsigned char>(5)), FormatError);
}
