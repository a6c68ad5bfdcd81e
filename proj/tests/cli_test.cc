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

#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "lea/cli/cli.h"
#include "lea/cli/run_config.h"
#include "lea/error.h"
#include "lea/io/io.h"

namespace fs = std::filesystem;
using lea::cli::RunConfig;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result lea_run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = lea::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    static int counter = 0;
    dir_ = fs::temp_directory_path() /
           ("lea_cli_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string out() const { return dir_.string(); }
  fs::path dir_;
};

std::size_t count_files(const fs::path& dir) {
  if (!fs::exists(dir)) return 0;
  std::size_t n = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir)) n += e.is_regular_file();
  return n;
}

}  // namespace

TEST_F(CliTest, ParseErrorsExitOne) {
  EXPECT_EQ(lea_run({}).code, 1);
  EXPECT_EQ(lea_run({"frobnicate"}).code, 1);
  const Result r = lea_run({"train", "--out", out(), "--seed", "1", "--bogus"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("--bogus"), std::string::npos);
  EXPECT_EQ(lea_run({"train", "--preset", "huge", "--check"}).code, 1);
  EXPECT_EQ(lea_run({"synth", "--threads", "0"}).code, 1);
}

TEST_F(CliTest, HelpExitsZero) {
  const Result r = lea_run({"--help"});
  EXPECT_EQ(r.code, 0);
  for (const char* cmd : {"synth", "train", "align", "encode", "decode", "eval", "roundtrip", "probe-fake", "inspect"})
    EXPECT_NE(r.out.find(cmd), std::string::npos) << cmd;
}

TEST_F(CliTest, MissingSeedIsValidationError) {
  const Result r = lea_run({"synth", "--out", out()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("seed"), std::string::npos);
}

TEST_F(CliTest, CheckHasNoSideEffects) {
  for (const char* cmd : {"synth", "train"}) {
    const Result r = lea_run({cmd, "--out", out(), "--seed", "3", "--check"});
    EXPECT_EQ(r.code, 0) << cmd << r.err;
  }
  EXPECT_FALSE(fs::exists(dir_));
  ASSERT_EQ(lea_run({"synth", "--out", out(), "--seed", "3"}).code, 0);
  const std::size_t before = count_files(dir_);
  Result r = lea_run({"train", "--out", out(), "--seed", "3", "--check"});
  EXPECT_EQ(r.code, 0) << r.err;
  // A check still validates inputs: align needs a trained checkpoint.
  r = lea_run({"align", "--out", out(), "--seed", "3", "--check"});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(count_files(dir_), before);
}

TEST_F(CliTest, MissingArtifactsExitOneWithGuidance) {
  ASSERT_EQ(lea_run({"synth", "--out", out(), "--seed", "3"}).code, 0);
  Result r = lea_run({"decode", "--out", out(), "--seed", "3"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("lea align"), std::string::npos) << r.err;
  r = lea_run({"align", "--out", out(), "--seed", "3"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("lea train"), std::string::npos) << r.err;
  r = lea_run({"inspect", (dir_ / "nothing").string()});
  EXPECT_EQ(r.code, 1);
}

TEST_F(CliTest, CorruptArtifactIsRuntimeFailure) {
  ASSERT_EQ(lea_run({"synth", "--out", out(), "--seed", "3"}).code, 0);
  const fs::path blob = dir_ / "data" / "fmri" / "signals.f32";
  auto bytes = lea::io::read_file(blob);
  bytes[100] ^= 0xff;
  lea::io::write_file(blob, bytes);
  const Result r = lea_run({"train", "--out", out(), "--seed", "3", "--iters", "2"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("checksum"), std::string::npos) << r.err;
}

TEST_F(CliTest, FullScalePresetSnapshot) {
  const Result r = lea_run({"train", "--preset", "paper", "--check", "--out", out()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["model"]["enc_depth"], 24);
  EXPECT_EQ(j["model"]["dec_depth"], 8);
  EXPECT_EQ(j["model"]["enc_dim"], 1024);
  EXPECT_EQ(j["model"]["dec_dim"], 512);
  EXPECT_EQ(j["model"]["num_heads"], 16);
  EXPECT_EQ(j["model"]["channels_per_roi"], 32);
  EXPECT_EQ(j["schedule"]["batch"], 8);
  EXPECT_DOUBLE_EQ(j["schedule"]["lr0"].get<double>(), 5e-5);
  EXPECT_DOUBLE_EQ(j["schedule"]["adamw"]["weight_decay"].get<double>(), 0.01);
  EXPECT_EQ(j["schedule"]["iters"], 100000);
}

TEST_F(CliTest, ConfigFileValidation) {
  fs::create_directories(dir_);
  const fs::path cfg = dir_ / "run.json";
  lea::io::write_json(cfg, {{"seed", 4}, {"bogus", 1}});
  Result r = lea_run({"synth", "--config", cfg.string(), "--out", out()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("bogus"), std::string::npos);
  lea::io::write_json(cfg, {{"seed", 4}, {"data", {{"bundle", "x"}, {"synthetic", nlohmann::json::object()}}}});
  EXPECT_EQ(lea_run({"synth", "--config", cfg.string(), "--out", out()}).code, 1);
  lea::io::write_json(cfg, {{"seed", 4}, {"data", {{"synthetic", {{"train_samples", 40}, {"test_samples", 10}}}}}});
  r = lea_run({"synth", "--config", cfg.string(), "--out", out()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("50 samples"), std::string::npos) << r.out;
  EXPECT_EQ(lea_run({"synth", "--config", (dir_ / "missing.json").string()}).code, 1);
}

TEST(RunConfigTest, JsonRoundTripAndDefaults) {
  RunConfig c;
  c.seed = 9;
  c.lambda_grid = {0.1, 10};
  c.include_test_signals = true;
  const RunConfig back = RunConfig::from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());
  EXPECT_EQ(c.n_way, 50u);
  EXPECT_EQ(c.trials, 1000u);
  EXPECT_EQ(c.folds, 5u);
  EXPECT_EQ(c.num_fakes, 100u);
  EXPECT_EQ(c.fake_scale, 5.0);
  EXPECT_THROW(RunConfig().require_seed(), lea::ValidationError);
}

TEST(RunConfigTest, LambdaGridParsing) {
  EXPECT_EQ(lea::cli::parse_lambda_grid("1e-2, 1,100"), (std::vector<double>{1e-2, 1, 100}));
  EXPECT_THROW(lea::cli::parse_lambda_grid("1,-2"), lea::ValidationError);
  EXPECT_THROW(lea::cli::parse_lambda_grid("abc"), lea::ValidationError);
  EXPECT_THROW(lea::cli::parse_lambda_grid(""), lea::ValidationError);
}

TEST(RunConfigTest, ThreadsFromEnvironment) {
  ::setenv("LEA_THREADS", "3", 1);
  EXPECT_EQ(lea::cli::threads_from_env(), 3);
  ::setenv("LEA_THREADS", "zero", 1);
  EXPECT_THROW(lea::cli::threads_from_env(), lea::ValidationError);
  ::unsetenv("LEA_THREADS");
  EXPECT_EQ(lea::cli::threads_from_env(), 1);
}

// A short run of every subcommand on a small synthetic dataset.
TEST_F(CliTest, EndToEndPipeline) {
  const std::vector<std::string> common{"--out", out(), "--seed", "5"};
  auto run_cmd = [&](std::vector<std::string> args) {
    args.insert(args.end(), common.begin(), common.end());
    const Result r = lea_run(args);
    EXPECT_EQ(r.code, 0) << args[0] << ": " << r.err;
    return r;
  };
  run_cmd({"synth"});
  run_cmd({"train", "--iters", "20", "--include-test-signals"});
  run_cmd({"align", "--lambda-grid", "0.1,1,10", "--folds", "3"});
  run_cmd({"encode"});
  run_cmd({"decode", "--top-k", "3"});
  run_cmd({"eval", "--n-way", "10", "--trials", "50"});
  run_cmd({"roundtrip"});
  run_cmd({"probe-fake", "--num-fakes", "30"});

  const auto manifest = lea::io::read_json(dir_ / "logs" / "train.manifest.json");
  EXPECT_EQ(manifest.dump().find(dir_.string()), std::string::npos);
  EXPECT_NE(manifest.dump().find("\"training_samples\":600"), std::string::npos) << manifest.dump();
  for (const char* f : {"train_loss.csv", "align_cv.json", "encode.json", "decode.json", "eval.json", "pearson.csv",
                        "roundtrip.json", "probe_fake.json"})
    EXPECT_TRUE(fs::exists(dir_ / "reports" / f)) << f;
  const auto eval = lea::io::read_json(dir_ / "reports" / "eval.json");
  EXPECT_EQ(eval["trials"]["n_way"], 10);
  EXPECT_EQ(eval["trials"]["trials"], 50);
  EXPECT_EQ(eval["trials"]["seed"], 5);

  Result r = lea_run({"inspect", (dir_ / "checkpoints" / "autoencoder.ckpt").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("4/2 with 64/32 dimensions, 4 heads, C = 4"), std::string::npos) << r.out;
  r = lea_run({"inspect", (dir_ / "alignments" / "synth-01.align").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("fmri_to_embedding"), std::string::npos);
  EXPECT_NE(r.out.find("\"fit_pairs\": 500"), std::string::npos) << r.out;
}
