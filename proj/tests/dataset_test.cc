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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "lea/alignment/ridge.h"
#include "lea/dataset/fmri_dataset.h"
#include "lea/dataset/roi_layout.h"
#include "lea/dataset/synthetic.h"
#include "lea/error.h"
#include "lea/eval/eval.h"
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
            ("lea_dataset_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

FmriDataset make_dataset(const RoiLayout& layout, std::size_t train, std::size_t test, std::uint64_t seed) {
  FmriDataset ds;
  ds.subject_id = "sub-01";
  ds.layout = layout;
  const std::size_t m = train + test;
  ds.signals = Tensor({m, layout.total()});
  RngStream rng(seed);
  for (double& v : ds.signals.values()) v = rng.normal(2.0, 3.0);
  io::quantize_f32(ds.signals.values());
  for (std::size_t i = 0; i < m; ++i) {
    ds.sample_ids.push_back("s" + std::to_string(i));
    ds.stimulus_ids.push_back("img" + std::to_string(i));
    ds.split.push_back(i < train ? Split::kTrain : Split::kTest);
  }
  return ds;
}

void edit_manifest(const fs::path& dir, const std::function<void(io::Json&)>& edit) {
  io::Json m = io::read_json(dir / "manifest.json");
  edit(m);
  io::write_json(dir / "manifest.json", m);
}

std::vector<double> column(const Tensor& t, std::size_t j) {
  std::vector<double> c;
  for (std::size_t i = 0; i < t.rows(); ++i) c.push_back(t(i, j));
  return c;
}

double mean_of(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double pop_std(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

}  // namespace

// ---------------------------------------------------------------- layout

TEST(RoiLayoutTest, PresetsAndOffsets) {
  const RoiLayout god = RoiLayout::god({10, 11, 12, 13, 14, 15, 16, 17});
  ASSERT_EQ(god.size(), 8u);
  EXPECT_EQ(god[0].name, "V1");
  EXPECT_EQ(god[7].name, "HVC");
  EXPECT_EQ(god.total(), 108u);
  EXPECT_EQ(god.offset(3), 10u + 11 + 12);

  const RoiLayout bold = RoiLayout::bold5000({5, 6, 7, 8, 9});
  const std::vector<std::string> names{"EV", "LOC", "OPA", "PPA", "RSC"};
  for (std::size_t i = 0; i < names.size(); ++i) EXPECT_EQ(bold[i].name, names[i]);

  EXPECT_EQ(RoiLayout::desk().total(), 120u);
  EXPECT_EQ(RoiLayout::desk().size(), 3u);
}

TEST(RoiLayoutTest, RejectsInvalidLayouts) {
  EXPECT_THROW(RoiLayout({{"V1", 3}, {"V1", 4}}), ValidationError);
  EXPECT_THROW(RoiLayout({{"V1", 0}}), ValidationError);
  EXPECT_THROW(RoiLayout::god({1, 2, 3}), ValidationError);
}

TEST(RoiLayoutTest, JsonRoundTrip) {
  const RoiLayout l = RoiLayout::bold5000({3, 4, 5, 6, 7});
  EXPECT_EQ(RoiLayout::from_json(l.to_json()), l);
}

// ---------------------------------------------------------------- bundles

TEST(BundleTest, GodShapedRoundTrip) {
  TempDir tmp;
  FmriDataset ds = make_dataset(RoiLayout::god({4, 4, 4, 4, 3, 3, 3, 5}), 1200, 50, 1);
  ds.labels.assign(ds.num_samples(), "class-000");
  save_bundle(ds, tmp.path() / "god");
  const FmriDataset back = load_bundle(tmp.path() / "god");
  EXPECT_EQ(back, ds);
  EXPECT_EQ(back.num_samples(), 1250u);
  EXPECT_EQ(back.indices(Split::kTrain).size(), 1200u);
  EXPECT_EQ(back.indices(Split::kTest).size(), 50u);
}

TEST(BundleTest, Bold5000ShapedRoundTrip) {
  TempDir tmp;
  const FmriDataset ds = make_dataset(RoiLayout::bold5000({3, 2, 2, 2, 1}), 4803, 113, 2);
  save_bundle(ds, tmp.path() / "bold");
  const FmriDataset back = load_bundle(tmp.path() / "bold");
  EXPECT_EQ(back, ds);
  EXPECT_EQ(back.indices(Split::kTrain).size(), 4803u);
  EXPECT_EQ(back.indices(Split::kTest).size(), 113u);
  EXPECT_EQ(back.layout[4].name, "RSC");
}

TEST(BundleTest, StoresFloat32BitExactly) {
  TempDir tmp;
  FmriDataset ds = make_dataset(RoiLayout::desk(), 5, 2, 3);
  ds.signals(0, 0) = 0.1;  // not representable in float32
  save_bundle(ds, tmp.path() / "b");
  const FmriDataset back = load_bundle(tmp.path() / "b");
  EXPECT_EQ(back.signals(0, 0), static_cast<double>(static_cast<float>(0.1)));
  save_bundle(back, tmp.path() / "c");
  EXPECT_EQ(io::read_file(tmp.path() / "b" / "signals.f32"), io::read_file(tmp.path() / "c" / "signals.f32"));
}

TEST(BundleTest, EmptyBundleReportsNoSamples) {
  TempDir tmp;
  save_bundle(make_dataset(RoiLayout::desk(), 2, 1, 4), tmp.path() / "b");
  edit_manifest(tmp.path() / "b", [](io::Json& m) { m["samples"] = io::Json::array(); });
  try {
    load_bundle(tmp.path() / "b");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("no samples"), std::string::npos);
  }
}

TEST(BundleTest, DetectsCorruption) {
  TempDir tmp;
  const fs::path dir = tmp.path() / "b";
  save_bundle(make_dataset(RoiLayout::desk(), 4, 2, 5), dir);
  auto bytes = io::read_file(dir / "signals.f32");

  // Flipped byte: checksum mismatch.
  auto flipped = bytes;
  flipped[17] ^= 0x40;
  io::write_file(dir / "signals.f32", flipped);
  EXPECT_THROW(load_bundle(dir), FormatError);

  // Truncated file with a matching checksum: size mismatch.
  std::vector<unsigned char> truncated(bytes.begin(), bytes.end() - 4);
  io::write_file(dir / "signals.f32", truncated);
  edit_manifest(dir, [&](io::Json& m) { m["signal_crc32"] = io::crc32_hex(io::crc32(truncated)); });
  EXPECT_THROW(load_bundle(dir), FormatError);

  io::write_file(dir / "signals.f32", bytes);
  edit_manifest(dir, [&](io::Json& m) { m["signal_crc32"] = io::crc32_hex(io::crc32(bytes)); });
  EXPECT_NO_THROW(load_bundle(dir));

  edit_manifest(dir, [](io::Json& m) { m["format_version"] = 2; });
  EXPECT_THROW(load_bundle(dir), FormatError);
  edit_manifest(dir, [](io::Json& m) { m["format_version"] = 1; });

  edit_manifest(dir, [](io::Json& m) { m["rois"][1]["name"] = m["rois"][0]["name"]; });
  try {
    load_bundle(dir);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("duplicate"), std::string::npos);
  }
}

TEST(BundleTest, SplitsAreDisjointAndCover) {
  const FmriDataset ds = make_dataset(RoiLayout::desk(), 7, 3, 6);
  auto tr = ds.indices(Split::kTrain), te = ds.indices(Split::kTest);
  std::set<std::size_t> all(tr.begin(), tr.end());
  for (auto i : te) EXPECT_TRUE(all.insert(i).second);
  EXPECT_EQ(all.size(), ds.num_samples());
}

// ---------------------------------------------------------------- z-scoring

TEST(ZScoreTest, ConstantVertexIsDegenerate) {
  FmriDataset ds = make_dataset(RoiLayout::desk(), 6, 2, 7);
  for (std::size_t i = 0; i < ds.num_samples(); ++i) ds.signals(i, 5) = 3.25;
  const NormStats s = zscore_fit(ds);
  ASSERT_EQ(s.degenerate, std::vector<std::size_t>{5});
  const Tensor z = zscore_apply(ds.signals, s);
  for (std::size_t i = 0; i < z.rows(); ++i) EXPECT_EQ(z(i, 5), 0.0);
}

TEST(ZScoreTest, RandomMatrixColumnsStandardized) {
  FmriDataset ds = make_dataset(RoiLayout({{"A", 6}}), 10, 0, 8);
  const Tensor z = zscore_apply(ds.signals, zscore_fit(ds));
  for (std::size_t j = 0; j < 6; ++j) {
    EXPECT_NEAR(mean_of(column(z, j)), 0.0, 1e-10);
    EXPECT_NEAR(pop_std(column(z, j)), 1.0, 1e-10);
  }
}

TEST(ZScoreTest, StandardizedInputIsFixedPoint) {
  FmriDataset ds = make_dataset(RoiLayout({{"A", 6}}), 10, 0, 9);
  ds.signals = zscore_apply(ds.signals, zscore_fit(ds));
  const NormStats s = zscore_fit(ds);
  for (std::size_t j = 0; j < 6; ++j) {
    EXPECT_NEAR(s.mean[j], 0.0, 1e-10);
    EXPECT_NEAR(s.std[j], 1.0, 1e-10);
  }
  const Tensor again = zscore_apply(ds.signals, s);
  for (std::size_t i = 0; i < again.size(); ++i) EXPECT_NEAR(again[i], ds.signals[i], 1e-10);
}

TEST(ZScoreTest, FitsOnTrainSplitOnly) {
  FmriDataset ds = make_dataset(RoiLayout({{"A", 3}}), 5, 2, 10);
  const NormStats before = zscore_fit(ds);
  for (std::size_t i : ds.indices(Split::kTest))
    for (std::size_t j = 0; j < 3; ++j) ds.signals(i, j) = 1e6;
  EXPECT_EQ(zscore_fit(ds), before);
}

TEST(ZScoreTest, UnapplyInvertsApply) {
  const FmriDataset ds = make_dataset(RoiLayout::desk(), 20, 5, 11);
  const NormStats s = zscore_fit(ds);
  const Tensor back = zscore_unapply(zscore_apply(ds.signals, s), s);
  for (std::size_t i = 0; i < back.size(); ++i) EXPECT_NEAR(back[i], ds.signals[i], 1e-9);
}

TEST(ZScoreTest, LengthMismatchIsAnError) {
  const FmriDataset ds = make_dataset(RoiLayout::desk(), 4, 1, 12);
  NormStats s = zscore_fit(ds);
  s.mean.pop_back();
  s.std.pop_back();
  EXPECT_THROW(zscore_apply(ds.signals, s), ValidationError);
}

TEST(ZScoreTest, StatsRoundTripThroughJson) {
  const FmriDataset ds = make_dataset(RoiLayout::desk(), 4, 1, 13);
  const NormStats s = zscore_fit(ds);
  EXPECT_EQ(norm_stats_from_json(norm_stats_to_json(s)), s);
}

// ---------------------------------------------------------------- synthetic

TEST(SyntheticTest, NoiselessSignalsHaveLatentRank) {
  SyntheticSpec spec = SyntheticSpec::desk(3);
  spec.noise_std_fmri = 0.0;
  const SyntheticData d = synth_generate(spec);
  const Tensor& x = d.dataset.signals;
  Eigen::MatrixXd m(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) m(i, j) = x(i, j);
  const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues();
  ASSERT_GT(sv.size(), static_cast<long>(spec.latent_dim));
  EXPECT_GT(sv(spec.latent_dim - 1), 1e-3 * sv(0));
  for (long k = static_cast<long>(spec.latent_dim); k < sv.size(); ++k) EXPECT_LT(sv(k), 1e-8 * sv(0));
}

TEST(SyntheticTest, MapsHaveUnitNormRows) {
  const SyntheticData d = synth_generate(SyntheticSpec::desk(4));
  for (const Tensor* map : {&d.truth.fmri_map, &d.truth.embedding_map})
    for (std::size_t i = 0; i < map->rows(); ++i) EXPECT_NEAR(norm2(map->row(i)), 1.0, 1e-12);
}

TEST(SyntheticTest, SameSeedGivesIdenticalBundles) {
  TempDir tmp;
  for (const char* name : {"a", "b"}) {
    const SyntheticData d = synth_generate(SyntheticSpec::desk(21));
    save_bundle(d.dataset, tmp.path() / name);
  }
  for (const char* f : {"manifest.json", "signals.f32"})
    EXPECT_EQ(io::read_file(tmp.path() / "a" / f), io::read_file(tmp.path() / "b" / f));
  const SyntheticData other = synth_generate(SyntheticSpec::desk(22));
  EXPECT_NE(other.dataset.signals, synth_generate(SyntheticSpec::desk(21)).dataset.signals);
}

TEST(SyntheticTest, DeskDefaults) {
  const SyntheticSpec s = SyntheticSpec::desk(7);
  EXPECT_EQ(s.latent_dim, 8u);
  EXPECT_EQ(s.embedding_dim, 16u);
  EXPECT_EQ(s.layout.total(), 120u);
  EXPECT_EQ(s.layout.size(), 3u);
  EXPECT_EQ(s.train_samples, 500u);
  EXPECT_EQ(s.test_samples, 100u);
  // SNR 10 as a variance ratio.
  EXPECT_NEAR(s.signal_variance() / (s.noise_std_fmri * s.noise_std_fmri), 10.0, 1e-12);
}

TEST(SyntheticTest, RejectsInvalidSpec) {
  SyntheticSpec s = SyntheticSpec::desk(1);
  s.latent_dim = 0;
  EXPECT_THROW(s.validate(), ValidationError);
  s = SyntheticSpec::desk(1);
  s.noise_std_emb = -1.0;
  EXPECT_THROW(s.validate(), ValidationError);
}

TEST(SyntheticTest, RawRidgeOracleRecoversEmbeddings) {
  const SyntheticData d = synth_generate(SyntheticSpec::desk(7));
  const FmriDataset& ds = d.dataset;
  const auto tr = ds.indices(Split::kTrain), te = ds.indices(Split::kTest);
  const Tensor xtr = ds.select_rows(tr), xte = ds.select_rows(te);
  const Tensor etr = d.embeddings.select(ds.select_stimuli(tr)), ete = d.embeddings.select(ds.select_stimuli(te));
  const double lambda = select_lambda(xtr, etr, default_lambda_grid(), 5, 7).lambda;
  const RidgeMap map = fit_ridge(xtr, etr, lambda);
  EXPECT_GE(eval::pearsonr_vertexwise(map.apply(xte), ete).mean, 0.8);
}
