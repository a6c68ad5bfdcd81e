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
#include <numeric>
#include <string>

#include <gtest/gtest.h>

#include "lea/autoencoder/config.h"
#include "lea/autoencoder/model.h"
#include "lea/dataset/fmri_dataset.h"
#include "lea/dataset/synthetic.h"
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
            ("lea_ae_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

Tensor random_signals(std::size_t m, std::size_t l, std::uint64_t seed, double scale = 1.0) {
  Tensor t({m, l});
  RngStream rng(seed);
  for (double& v : t.values()) v = scale * rng.normal();
  return t;
}

AutoencoderModel desk_model(std::uint64_t seed = 1) {
  return AutoencoderModel(ModelConfig::desk(RoiLayout::desk()), seed);
}

void zero_params(AutoencoderModel& model, const std::string& prefix, const std::string& suffix = "") {
  for (auto& e : model.params().entries()) {
    if (e.name.rfind(prefix, 0) == 0 &&
        (suffix.empty() || (e.name.size() >= suffix.size() &&
                            e.name.compare(e.name.size() - suffix.size(), suffix.size(), suffix) == 0)))
      std::fill(e.value.values().begin(), e.value.values().end(), 0.0);
  }
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

// ---------------------------------------------------------------- config

TEST(ModelConfigTest, FullScalePreset) {
  const ModelConfig c = ModelConfig::paper(RoiLayout::desk());
  EXPECT_EQ(c.enc_depth, 24u);
  EXPECT_EQ(c.dec_depth, 8u);
  EXPECT_EQ(c.enc_dim, 1024u);
  EXPECT_EQ(c.dec_dim, 512u);
  EXPECT_EQ(c.num_heads, 16u);
  EXPECT_EQ(c.channels_per_roi, 32u);
  EXPECT_NO_THROW(c.validate());
}

TEST(ModelConfigTest, DeskPresetAndSchedule) {
  const ModelConfig c = ModelConfig::desk(RoiLayout::desk());
  EXPECT_EQ(c.enc_depth, 4u);
  EXPECT_EQ(c.dec_depth, 2u);
  EXPECT_EQ(c.enc_dim, 64u);
  EXPECT_EQ(c.dec_dim, 32u);
  EXPECT_EQ(c.num_heads, 4u);
  EXPECT_EQ(c.channels_per_roi, 4u);
  EXPECT_EQ(c.conv_kernel, 1u);
  EXPECT_EQ(c.tokens(), 13u);
  EXPECT_EQ(TrainSchedule::desk().iters, 2000);
  EXPECT_EQ(TrainSchedule::desk().batch, 8u);
  const TrainSchedule p = TrainSchedule::paper();
  EXPECT_EQ(p.batch, 8u);
  EXPECT_DOUBLE_EQ(p.lr0, 5e-5);
  EXPECT_DOUBLE_EQ(p.adamw.weight_decay, 0.01);
}

TEST(ModelConfigTest, ValidationRules) {
  ModelConfig c = ModelConfig::desk(RoiLayout::desk());
  c.num_heads = 5;
  EXPECT_THROW(c.validate(), ValidationError);
  c = ModelConfig::desk(RoiLayout::desk());
  c.conv_kernel = 2;
  EXPECT_THROW(c.validate(), ValidationError);
  c = ModelConfig::desk(RoiLayout::desk());
  c.channels_per_roi = 0;
  EXPECT_THROW(c.validate(), ValidationError);
  c = ModelConfig::desk(RoiLayout::desk());
  EXPECT_EQ(ModelConfig::from_json(c.to_json()), c);
}

TEST(ModelConfigTest, ParamShapesMatchModel) {
  const AutoencoderModel m = desk_model();
  const auto shapes = expected_param_shapes(m.config());
  ASSERT_EQ(shapes.size(), m.params().size());
  for (const auto& [name, shape] : shapes) EXPECT_EQ(m.params().at(name).shape(), shape) << name;
  EXPECT_FALSE(m.params().contains("enc.block0.attn.k.b"));
}

// ---------------------------------------------------------------- ROI embed

TEST(RoiEmbedTest, DeskShape) {
  const AutoencoderModel m = desk_model();
  const Tensor tokens = m.roi_embed(random_signals(1, 120, 2));
  EXPECT_EQ(tokens.shape(), (Shape{12, 64}));
  EXPECT_EQ(m.roi_embed(random_signals(3, 120, 2)).shape(), (Shape{36, 64}));
}

TEST(RoiEmbedTest, ZeroSignalZeroBiasGivesZeroTokens) {
  AutoencoderModel m = desk_model(3);
  zero_params(m, "embed.", ".b");
  const Tensor tokens = m.roi_embed(Tensor({2, 120}));
  for (double v : tokens.values()) EXPECT_EQ(v, 0.0);
}

TEST(RoiEmbedTest, IdentityPaddedWeightsReproduceSlices) {
  ModelConfig c = ModelConfig::desk(RoiLayout({{"A", 3}, {"B", 5}, {"C", 2}}));
  c.channels_per_roi = 1;
  c.conv_kernel = 1;
  c.enc_dim = 8;
  c.dec_dim = 8;
  c.num_heads = 2;
  AutoencoderModel m(c, 4);
  for (std::size_t i = 0; i < 3; ++i) {
    const std::string p = "embed.roi" + std::to_string(i);
    m.params().at(p + ".conv.w")(0, 0) = 1.0;
    m.params().at(p + ".conv.b")[0] = 0.0;
    Tensor& fc = m.params().at(p + ".fc.w");
    std::fill(fc.values().begin(), fc.values().end(), 0.0);
    for (std::size_t j = 0; j < c.layout[i].voxels; ++j) fc(j, j) = 1.0;
    Tensor& fb = m.params().at(p + ".fc.b");
    std::fill(fb.values().begin(), fb.values().end(), 0.0);
  }
  const Tensor x = random_signals(2, 10, 5);
  const Tensor tokens = m.roi_embed(x);
  ASSERT_EQ(tokens.shape(), (Shape{6, 8}));
  for (std::size_t b = 0; b < 2; ++b) {
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t j = 0; j < 8; ++j) {
        const double expect = j < c.layout[i].voxels ? x(b, c.layout.offset(i) + j) : 0.0;
        EXPECT_EQ(tokens(b * 3 + i, j), expect);
      }
    }
  }
}

TEST(RoiEmbedTest, LengthMismatchNamesBothLengths) {
  const AutoencoderModel m = desk_model();
  const std::string msg = message_of([&] { m.encode(random_signals(1, 119, 6)); });
  EXPECT_NE(msg.find("120"), std::string::npos);
  EXPECT_NE(msg.find("119"), std::string::npos);
  EXPECT_THROW(m.decode_latent(Tensor({1, 63})), ShapeError);
}

// ---------------------------------------------------------------- encode/decode

TEST(EncodeDecodeTest, ShapeContract) {
  for (std::size_t c : {1u, 3u}) {
    ModelConfig cfg = ModelConfig::desk(RoiLayout({{"A", 7}, {"B", 4}}));
    cfg.channels_per_roi = c;
    cfg.conv_kernel = 3;
    const AutoencoderModel m(cfg, 7);
    const Tensor z = m.encode(random_signals(5, 11, 8));
    EXPECT_EQ(z.shape(), (Shape{5, 64}));
    EXPECT_EQ(m.decode_latent(z).shape(), (Shape{5, 11}));
  }
}

TEST(EncodeDecodeTest, PureFunctions) {
  const AutoencoderModel m = desk_model();
  const Tensor x = random_signals(1, 120, 9);
  EXPECT_EQ(m.encode(x), m.encode(x));
  const Tensor z = m.encode(x);
  EXPECT_EQ(m.decode_latent(z), m.decode_latent(z));
  for (double v : z.values()) EXPECT_TRUE(std::isfinite(v));
}

TEST(EncodeDecodeTest, BatchAndThreadInvariance) {
  const AutoencoderModel m = desk_model();
  const Tensor x = random_signals(300, 120, 10);
  const Tensor batched = m.encode(x);
  EXPECT_EQ(m.encode(x, 3), batched);
  // Reversed batch order.
  Tensor rev({300, 120});
  for (std::size_t i = 0; i < 300; ++i)
    std::copy_n(x.data() + (299 - i) * 120, 120, rev.data() + i * 120);
  const Tensor zrev = m.encode(rev);
  for (std::size_t i = 0; i < 300; i += 37) {
    const Tensor single = m.encode(x.row_slice(i, 1));
    for (std::size_t j = 0; j < 64; ++j) {
      EXPECT_EQ(single(0, j), batched(i, j));
      EXPECT_EQ(zrev(299 - i, j), batched(i, j));
    }
  }
  EXPECT_EQ(m.decode_latent(batched, 4), m.decode_latent(batched));
}

TEST(EncodeDecodeTest, PatchRowsDoNotReachTheDecoder) {
  const AutoencoderModel m = desk_model(11);
  const Tensor x = random_signals(4, 120, 12);
  const Tensor expected = m.decode_latent(m.encode(x));
  Tensor tokens = m.encode_tokens(x);
  const std::size_t seq = m.config().tokens();
  RngStream rng(13);
  for (std::size_t r = 0; r < tokens.rows(); ++r)
    if (r % seq != 0)
      for (std::size_t j = 0; j < tokens.cols(); ++j) tokens(r, j) = 100.0 * rng.normal();
  EXPECT_EQ(m.reconstruct_from_tokens(tokens), expected);
}

// ---------------------------------------------------------------- loss

TEST(LossTest, MatchesDirectMeanSquaredError) {
  const AutoencoderModel m = desk_model(14);
  const Tensor x = random_signals(6, 120, 15);
  const Tensor rec = m.decode_latent(m.encode(x));
  double total = 0;
  for (std::size_t i = 0; i < 6; ++i) {
    double row = 0;
    for (std::size_t j = 0; j < 120; ++j) row += (x(i, j) - rec(i, j)) * (x(i, j) - rec(i, j));
    total += row;
  }
  EXPECT_NEAR(m.reconstruction_loss(x), total / 6.0, 1e-10);
  EXPECT_GE(m.reconstruction_loss(x), 0.0);
}

TEST(LossTest, ZeroReconstructionOfUnitSignalsGivesOne) {
  AutoencoderModel m = desk_model(16);
  zero_params(m, "project.");
  Tensor x = random_signals(5, 120, 17);
  for (std::size_t i = 0; i < 5; ++i) {
    auto row = x.row(i);
    const double n = norm2(row);
    for (double& v : row) v /= n;
  }
  EXPECT_NEAR(m.reconstruction_loss(x), 1.0, 1e-12);
}

// ---------------------------------------------------------------- training

TEST(TrainTest, DeterministicUnderSeed) {
  const Tensor x = random_signals(16, 120, 18);
  TrainSchedule s = TrainSchedule::desk();
  s.iters = 15;
  s.seed = 3;
  AutoencoderModel a = desk_model(19), b = desk_model(19);
  const auto ra = train(a, x, s), rb = train(b, x, s);
  EXPECT_EQ(ra.loss_curve, rb.loss_curve);
  EXPECT_EQ(ra.iterations, 15);
  EXPECT_EQ(a.encode(x), b.encode(x));
}

TEST(TrainTest, SmoothedLossDecreasesOnSyntheticData) {
  const SyntheticData d = synth_generate(SyntheticSpec::desk(7));
  const NormStats stats = zscore_fit(d.dataset);
  const Tensor x = zscore_apply(d.dataset.select_rows(d.dataset.indices(Split::kTrain)), stats);
  TrainSchedule s = TrainSchedule::desk();
  s.iters = 400;
  AutoencoderModel m = desk_model(7);
  const auto r = train(m, x, s);
  ASSERT_EQ(r.loss_curve.size(), 400u);
  const auto window_mean = [&](std::size_t begin) {
    return std::accumulate(r.loss_curve.begin() + begin, r.loss_curve.begin() + begin + 100, 0.0) / 100.0;
  };
  EXPECT_LE(window_mean(300), window_mean(0));
  EXPECT_LT(window_mean(300), 0.8 * window_mean(0));
}

TEST(TrainTest, NonFiniteLossAbortsWithIterationAndSnapshot) {
  Tensor x = random_signals(8, 120, 20);
  x(3, 7) = std::nan("");
  TrainSchedule s = TrainSchedule::desk();
  s.iters = 5;
  AutoencoderModel m = desk_model(21);
  const ParamStore before = m.params();
  try {
    train(m, x, s);
    FAIL() << "expected TrainingError";
  } catch (const TrainingError& e) {
    EXPECT_EQ(e.iteration(), 0);
    EXPECT_NE(std::string(e.what()).find("iteration 0"), std::string::npos);
    ASSERT_EQ(e.snapshot().size(), before.size());
    for (std::size_t i = 0; i < before.size(); ++i)
      EXPECT_EQ(e.snapshot().entries()[i].value, before.entries()[i].value);
  }
}

TEST(TrainTest, InvalidScheduleRejected) {
  TrainSchedule s = TrainSchedule::desk();
  s.iters = 0;
  EXPECT_THROW(s.validate(), ValidationError);
  s = TrainSchedule::desk();
  s.lr_min = 1.0;
  EXPECT_THROW(s.validate(), ValidationError);
  s = TrainSchedule::desk();
  EXPECT_EQ(TrainSchedule::from_json(s.to_json()).to_json(), s.to_json());
}

// ---------------------------------------------------------------- checkpoints

TEST(CheckpointTest, RoundTripWithinFloat32) {
  TempDir tmp;
  const AutoencoderModel m = desk_model(22);
  save_model(m, tmp.path() / "m.ckpt", {{"note", "x"}});
  const LoadedModel loaded = load_model(tmp.path() / "m.ckpt");
  EXPECT_EQ(loaded.model.config(), m.config());
  EXPECT_EQ(loaded.header["note"], "x");
  const Tensor x = random_signals(3, 120, 23);
  const Tensor a = m.encode(x), b = loaded.model.encode(x);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(b[i], a[i], 1e-5 * std::max(1.0, std::abs(a[i])));
  // Stored values are already float32: a second save is byte-identical.
  save_model(loaded.model, tmp.path() / "n.ckpt", {{"note", "x"}});
  EXPECT_EQ(io::read_file(tmp.path() / "m.ckpt"), io::read_file(tmp.path() / "n.ckpt"));
}

TEST(CheckpointTest, TruncatedFileRejected) {
  TempDir tmp;
  save_model(desk_model(), tmp.path() / "m.ckpt");
  auto bytes = io::read_file(tmp.path() / "m.ckpt");
  bytes.resize(bytes.size() / 2);
  io::write_file(tmp.path() / "m.ckpt", bytes);
  EXPECT_THROW(load_model(tmp.path() / "m.ckpt"), FormatError);
}

TEST(CheckpointTest, HeaderConfigDisagreeingWithShapesNamesTensor) {
  TempDir tmp;
  save_model(desk_model(), tmp.path() / "m.ckpt");
  auto bytes = io::read_file(tmp.path() / "m.ckpt");
  std::string text(bytes.begin(), bytes.end());
  const std::string from = "\"enc_dim\":64", to = "\"enc_dim\":32";
  const auto pos = text.find(from);
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos, from.size(), to);
  io::write_file(tmp.path() / "m.ckpt", std::vector<unsigned char>(text.begin(), text.end()));
  const std::string msg = message_of([&] { load_model(tmp.path() / "m.ckpt"); });
  EXPECT_NE(msg.find("embed.roi0.fc.w"), std::string::npos) << msg;
}

TEST(CheckpointTest, MissingTensorNamed) {
  const AutoencoderModel m = desk_model();
  ParamStore p;
  for (const auto& e : m.params().entries())
    if (e.name != "dec.mask") p.add(e.name, e.value);
  const std::string msg = message_of([&] { AutoencoderModel(m.config(), p); });
  EXPECT_NE(msg.find("dec.mask"), std::string::npos);
}
