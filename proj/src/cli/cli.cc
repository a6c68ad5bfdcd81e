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

#include "lea/cli/cli.h"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <memory>
#include <set>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "lea/alignment/ridge.h"
#include "lea/autoencoder/model.h"
#include "lea/cli/run_config.h"
#include "lea/dataset/fmri_dataset.h"
#include "lea/dataset/synthetic.h"
#include "lea/embeddings/embeddings.h"
#include "lea/error.h"
#include "lea/eval/eval.h"
#include "lea/io/io.h"

namespace lea::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Raw flag values; unset optionals leave the config file (or default) alone.
struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> preset, out, subject, lambda_grid, data, embeddings, prototypes,
      checkpoint, alignment, split;
  std::optional<std::size_t> n_way, trials, iters, folds, top_k, num_fakes;
  std::optional<double> scale;
  std::optional<int> threads;
  bool whiten = false;
  bool include_test_signals = false;
  bool check = false;
  std::string inspect_path;
};

RunConfig resolve(const Flags& f) {
  RunConfig c;
  c.threads = threads_from_env();
  if (!f.config.empty()) {
    if (!fs::exists(f.config)) throw ValidationError("config file not found: " + f.config);
    try {
      json j = io::read_json(f.config);
      if (!j.contains("threads")) j["threads"] = c.threads;
      c = RunConfig::from_json(j);
    } catch (const json::exception& e) {
      throw ValidationError("cannot parse config " + f.config + ": " + e.what());
    }
  }
  if (f.seed) c.seed = *f.seed;
  if (f.preset) c.preset = preset_from_string(*f.preset);
  if (f.out) c.out = *f.out;
  if (f.subject) c.subject = *f.subject;
  if (f.lambda_grid) c.lambda_grid = parse_lambda_grid(*f.lambda_grid);
  if (f.data) {
    c.data_bundle = *f.data;
    c.synthetic.reset();
  }
  if (f.embeddings) c.embeddings = *f.embeddings;
  if (f.prototypes) c.prototypes = *f.prototypes;
  if (f.checkpoint) c.checkpoint = *f.checkpoint;
  if (f.alignment) c.alignment = *f.alignment;
  if (f.split) c.split = *f.split;
  if (f.n_way) c.n_way = *f.n_way;
  if (f.trials) c.trials = *f.trials;
  if (f.iters) c.schedule_overrides["iters"] = *f.iters;
  if (f.folds) c.folds = *f.folds;
  if (f.top_k) c.top_k = *f.top_k;
  if (f.num_fakes) c.num_fakes = *f.num_fakes;
  if (f.scale) c.fake_scale = *f.scale;
  if (f.threads) c.threads = *f.threads;
  if (f.whiten) c.whiten = true;
  if (f.include_test_signals) c.include_test_signals = true;
  c.validate();
  return c;
}

// Paths inside the output directory are recorded relative to it so that
// manifests do not depend on where a run was placed.
std::string display_path(const RunConfig& c, const fs::path& p) {
  const fs::path rel = p.lexically_normal().lexically_relative(c.out.lexically_normal());
  if (!rel.empty() && *rel.begin() != "..") return rel.generic_string();
  return p.generic_string();
}

std::string artifact_crc(const fs::path& p) {
  if (fs::is_directory(p)) return io::crc32_hex(io::crc32_file(p / "manifest.json"));
  return io::crc32_hex(io::crc32_file(p));
}

void require_artifact(const fs::path& p, const std::string& what, const std::string& hint) {
  if (!fs::exists(p)) throw ValidationError("missing " + what + " at " + p.generic_string() + " (" + hint + ")");
}

class Run {
 public:
  Run(std::string command, RunConfig config, std::ostream& out)
      : command_(std::move(command)), c_(std::move(config)), out_(out) {}

  const RunConfig& config() const { return c_; }
  std::ostream& out() { return out_; }

  void input(const std::string& name, const fs::path& p) {
    inputs_[name] = {{"path", display_path(c_, p)}, {"crc32", artifact_crc(p)}};
  }
  void output(const std::string& name, const fs::path& p) {
    outputs_[name] = {{"path", display_path(c_, p)}, {"crc32", artifact_crc(p)}};
  }
  json& extra() { return extra_; }

  void write_manifest() {
    json cfg = c_.to_json();
    cfg["out"] = ".";
    for (const char* key : {"embeddings", "prototypes", "checkpoint", "alignment"})
      if (cfg[key].is_string()) cfg[key] = display_path(c_, cfg[key].get<std::string>());
    if (cfg["data"].contains("bundle")) cfg["data"]["bundle"] = display_path(c_, cfg["data"]["bundle"].get<std::string>());
    json m = {{"command", command_}, {"config", cfg}, {"seed", c_.seed ? json(*c_.seed) : json()},
              {"inputs", inputs_},   {"outputs", outputs_}, {"details", extra_}};
    const fs::path path = c_.logs_dir() / (command_ + ".manifest.json");
    io::write_json(path, m);
    spdlog::info("{}: wrote {}", command_, path.generic_string());
  }

 private:
  std::string command_;
  RunConfig c_;
  std::ostream& out_;
  json inputs_ = json::object();
  json outputs_ = json::object();
  json extra_ = json::object();
};

FmriDataset load_dataset(Run& run) {
  const fs::path p = run.config().data_path();
  require_artifact(p / "manifest.json", "dataset bundle", "run `lea synth` or pass --data");
  FmriDataset ds = load_bundle(p);
  run.input("dataset", p);
  return ds;
}

EmbeddingTable load_embeddings(Run& run) {
  const fs::path p = run.config().embeddings_path();
  require_artifact(p / "manifest.json", "embedding bundle", "run `lea synth` or pass --embeddings");
  EmbeddingTable t = load_embedding_bundle(p);
  run.input("embeddings", p);
  return t;
}

std::optional<EmbeddingTable> load_prototypes(Run& run) {
  const fs::path p = run.config().prototypes_path();
  if (!fs::exists(p / "manifest.json")) {
    if (run.config().prototypes) throw ValidationError("missing prototype bundle at " + p.generic_string());
    return std::nullopt;
  }
  EmbeddingTable t = load_embedding_bundle(p);
  run.input("prototypes", p);
  return t;
}

struct Checkpoint {
  std::unique_ptr<AutoencoderModel> model;
  NormStats stats;
  std::string subject_id;
};

Checkpoint load_checkpoint(Run& run) {
  const fs::path p = run.config().checkpoint_path();
  require_artifact(p, "autoencoder checkpoint", "run `lea train` or pass --checkpoint");
  LoadedModel loaded = load_model(p);
  run.input("checkpoint", p);
  Checkpoint ck;
  ck.model = std::make_unique<AutoencoderModel>(std::move(loaded.model));
  if (!loaded.header.contains("norm_stats")) throw FormatError(p.generic_string() + ": checkpoint has no normalization statistics");
  ck.stats = norm_stats_from_json(loaded.header["norm_stats"]);
  ck.subject_id = loaded.header.value("subject_id", "");
  return ck;
}

std::string subject_of(const RunConfig& c, const FmriDataset& ds) { return c.subject.empty() ? ds.subject_id : c.subject; }

void require_same_subject(const std::string& a, const std::string& b, const std::string& what) {
  if (!a.empty() && !b.empty() && a != b)
    throw ValidationError("subject mismatch: " + what + " belongs to '" + b + "', run is for '" + a + "'");
}

AlignmentPair load_pair(Run& run, const std::string& subject) {
  const fs::path p = run.config().alignment_path(subject);
  require_artifact(p, "alignment file", "run `lea align` or pass --alignment");
  AlignmentPair pair = load_alignment(p);
  require_same_subject(subject, pair.subject_id, "alignment " + p.generic_string());
  run.input("alignment", p);
  return pair;
}

std::vector<std::string> unique_in_order(const std::vector<std::string>& ids) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& id : ids)
    if (seen.insert(id).second) out.push_back(id);
  return out;
}

// Class index per sample against the prototype ids; empty if labels are absent.
std::vector<std::size_t> label_indices(const FmriDataset& ds, const std::vector<std::size_t>& rows,
                                       const EmbeddingTable& prototypes) {
  if (ds.labels.empty()) return {};
  std::vector<std::size_t> out;
  for (std::size_t r : rows) {
    const auto& label = ds.labels[r];
    const auto k = prototypes.find(label);
    if (!k) throw ValidationError("label '" + label + "' has no class prototype");
    out.push_back(*k);
  }
  return out;
}

// ---------------------------------------------------------------------------

int cmd_synth(const RunConfig& c, bool check, std::ostream& out) {
  if (c.data_bundle) throw ValidationError("synth generates its own data; --data is not accepted");
  c.require_seed();
  const SyntheticSpec spec = c.synthetic_spec();
  if (check) {
    out << json{{"command", "synth"}, {"synthetic", spec.to_json()}}.dump(2) << '\n';
    return 0;
  }
  Run run("synth", c, out);
  const SyntheticData data = synth_generate(spec);
  const fs::path fmri = c.out / "data" / "fmri", emb = c.out / "data" / "embeddings",
                 protos = c.out / "data" / "prototypes";
  save_bundle(data.dataset, fmri);
  save_embedding_bundle(data.embeddings, emb);
  save_embedding_bundle(data.prototypes, protos);
  run.output("dataset", fmri);
  run.output("embeddings", emb);
  run.output("prototypes", protos);
  run.extra()["synthetic"] = spec.to_json();
  run.write_manifest();
  out << fmt::format("synth: {} samples ({} train / {} test), L = {}, D = {} -> {}\n",
                     data.dataset.num_samples(), spec.train_samples, spec.test_samples,
                     spec.layout.total(), spec.embedding_dim, fmri.generic_string());
  return 0;
}

int cmd_train(const RunConfig& c, bool check, std::ostream& out) {
  Run run("train", c, out);
  const bool have_data = fs::exists(c.data_path() / "manifest.json");
  if (check) {
    // The snapshot needs only a layout; fall back to the desk layout when no
    // dataset exists yet.
    const RoiLayout layout = have_data ? load_bundle(c.data_path()).layout : RoiLayout::desk();
    const ModelConfig mc = c.model_config(layout);
    std::size_t params = 0;
    for (const auto& [name, shape] : expected_param_shapes(mc)) params += shape_numel(shape);
    out << json{{"command", "train"},
                {"preset", to_string(c.preset)},
                {"layout_source", have_data ? "dataset" : "desk default"},
                {"model", mc.to_json()},
                {"schedule", c.schedule().to_json()},
                {"parameters", params}}
               .dump(2)
        << '\n';
    return 0;
  }
  const std::uint64_t seed = c.require_seed();
  const FmriDataset ds = load_dataset(run);
  const NormStats stats = zscore_fit(ds);
  std::vector<std::size_t> rows = ds.indices(Split::kTrain);
  if (c.include_test_signals) {
    // Unpaired test signals only; their stimulus embeddings are never read here.
    const auto test = ds.indices(Split::kTest);
    rows.insert(rows.end(), test.begin(), test.end());
    spdlog::warn("train: including {} test-split signals; held-out encoding scores are no longer "
                 "independent of the autoencoder",
                 test.size());
  }
  const Tensor x = zscore_apply(ds.select_rows(rows), stats);
  const ModelConfig mc = c.model_config(ds.layout);
  const TrainSchedule schedule = c.schedule();

  AutoencoderModel model(mc, seed);
  const double initial = model.reconstruction_loss(x);
  spdlog::info("train: {} samples, {} iterations, initial loss {:.6g}", x.rows(), schedule.iters, initial);
  TrainResult result;
  std::vector<double> lrs;
  try {
    result = train(model, x, schedule, [&](std::int64_t it, double loss, double lr) {
      lrs.push_back(lr);
      if (it % 200 == 0 || it + 1 == schedule.iters)
        spdlog::info("train: iter {} loss {:.6g} lr {:.3g}", it, loss, lr);
    });
  } catch (const TrainingError& e) {
    const fs::path snap = c.out / "checkpoints" / "failed_snapshot.ckpt";
    AutoencoderModel dump(mc, e.snapshot());
    save_model(dump, snap, {{"failed_iteration", e.iteration()}});
    spdlog::error("train: snapshot before the failure written to {}", snap.generic_string());
    throw;
  }
  const double final_loss = model.reconstruction_loss(x);

  const fs::path ckpt = c.checkpoint_path();
  save_model(model, ckpt,
             {{"subject_id", subject_of(c, ds)},
              {"norm_stats", norm_stats_to_json(stats)},
              {"schedule", schedule.to_json()},
              {"seed", seed},
              {"initial_loss", initial},
              {"final_loss", final_loss}});
  const fs::path curve = c.reports_dir() / "train_loss.csv";
  fs::create_directories(curve.parent_path());
  {
    std::ofstream f(curve);
    f << "iteration,loss,lr\n";
    for (std::size_t i = 0; i < result.loss_curve.size(); ++i)
      f << i << ',' << fmt::format("{:.17g}", result.loss_curve[i]) << ',' << fmt::format("{:.17g}", lrs[i]) << '\n';
  }
  run.output("checkpoint", ckpt);
  run.output("loss_curve", curve);
  run.extra() = {{"model", mc.to_json()}, {"schedule", schedule.to_json()},
                 {"training_samples", x.rows()}, {"include_test_signals", c.include_test_signals},
                 {"initial_loss", initial}, {"final_loss", final_loss}};
  run.write_manifest();
  out << fmt::format("train: loss {:.6g} -> {:.6g} after {} iterations -> {}\n", initial, final_loss,
                     result.iterations, ckpt.generic_string());
  return 0;
}

int cmd_align(const RunConfig& c, bool check, std::ostream& out) {
  Run run("align", c, out);
  const std::uint64_t seed = c.require_seed();
  const FmriDataset ds = load_dataset(run);
  Checkpoint ck = load_checkpoint(run);
  const EmbeddingTable table = load_embeddings(run);
  const std::string subject = subject_of(c, ds);
  require_same_subject(subject, ck.subject_id, "checkpoint");
  const auto rows = ds.indices(Split::kTrain);
  const auto ids = ds.select_stimuli(rows);
  require_coverage(table, ids);
  const std::vector<double> grid = c.lambda_grid.empty() ? default_lambda_grid() : c.lambda_grid;
  if (check) {
    out << json{{"command", "align"}, {"subject", subject}, {"pairs", rows.size()}, {"lambda_grid", grid},
                {"folds", c.folds}, {"whiten", c.whiten}}
               .dump(2)
        << '\n';
    return 0;
  }
  const Tensor latents = ck.model->encode(zscore_apply(ds.select_rows(rows), ck.stats), c.threads);
  const Tensor emb = table.select(ids);
  RidgeOptions opts;
  opts.whiten = c.whiten;
  PairFit fit = fit_pair_cv(latents, emb, grid, c.folds, seed, subject, opts);
  fit.pair.fit_stimulus_ids = unique_in_order(ids);

  const fs::path path = c.alignment_path(subject);
  save_alignment(fit.pair, path);
  const auto cv_json = [](const LambdaSelection& s, const RidgeMap& m) {
    return json{{"lambda", s.lambda}, {"grid", s.grid}, {"mean_mse", s.mean_mse},
                {"normal_residual", m.normal_residual}};
  };
  const json report = {{"subject", subject},
                       {"pairs", rows.size()},
                       {"folds", c.folds},
                       {"seed", seed},
                       {"f2v", cv_json(fit.cv_f2v, fit.pair.f2v)},
                       {"v2f", cv_json(fit.cv_v2f, fit.pair.v2f)}};
  const fs::path report_path = c.reports_dir() / "align_cv.json";
  io::write_json(report_path, report);
  run.output("alignment", path);
  run.output("report", report_path);
  run.write_manifest();
  out << fmt::format("align: lambda f2v = {:g}, v2f = {:g} -> {}\n", fit.cv_f2v.lambda, fit.cv_v2f.lambda,
                     path.generic_string());
  return 0;
}

struct Loaded {
  FmriDataset ds;
  Checkpoint ck;
  EmbeddingTable table;
  AlignmentPair pair;
  std::string subject;
  std::vector<std::size_t> rows;  // selected split
};

Loaded load_all(Run& run) {
  const RunConfig& c = run.config();
  Loaded l;
  l.ds = load_dataset(run);
  l.subject = subject_of(c, l.ds);
  l.pair = load_pair(run, l.subject);
  l.ck = load_checkpoint(run);
  require_same_subject(l.subject, l.ck.subject_id, "checkpoint");
  l.table = load_embeddings(run);
  l.rows = l.ds.indices(split_from_string(c.split));
  if (l.rows.empty()) throw ValidationError("the " + c.split + " split has no samples");
  return l;
}

void print_check(std::ostream& out, const std::string& command, const RunConfig& c, const Loaded& l) {
  out << json{{"command", command}, {"subject", l.subject}, {"split", c.split}, {"samples", l.rows.size()}}.dump(2)
      << '\n';
}

int cmd_encode(const RunConfig& c, bool check, std::ostream& out) {
  Run run("encode", c, out);
  Loaded l = load_all(run);
  if (check) return print_check(out, "encode", c, l), 0;
  const auto ids = l.ds.select_stimuli(l.rows);
  const Tensor emb = l.table.select(ids);
  const Tensor pred = l.ck.model->decode_latent(l.pair.v2f.apply(emb), c.threads);
  const Tensor gt = zscore_apply(l.ds.select_rows(l.rows), l.ck.stats);
  const eval::PearsonResult pr = eval::pearsonr_vertexwise(pred, gt);
  const Tensor raw = zscore_unapply(pred, l.ck.stats);
  json signals = json::array();
  for (std::size_t i = 0; i < raw.rows(); ++i)
    signals.push_back(std::vector<double>(raw.row(i).begin(), raw.row(i).end()));
  const json report = {{"subject", l.subject}, {"split", c.split}, {"stimulus_ids", ids},
                       {"pearson_mean", pr.mean}, {"degenerate_vertices", pr.degenerate},
                       {"signals", signals}};
  const fs::path path = c.reports_dir() / "encode.json";
  io::write_json(path, report);
  run.output("report", path);
  run.write_manifest();
  out << fmt::format("encode: {} stimuli -> predicted signals, mean Pearson r = {:.4f} -> {}\n", ids.size(),
                     pr.mean, path.generic_string());
  return 0;
}

int cmd_decode(const RunConfig& c, bool check, std::ostream& out) {
  Run run("decode", c, out);
  Loaded l = load_all(run);
  const auto protos = load_prototypes(run);
  if (check) return print_check(out, "decode", c, l), 0;
  const Gallery gallery = Gallery::from_table(l.table);
  if (c.top_k > gallery.size()) throw ValidationError("top-k exceeds the gallery size");
  const Tensor pred = l.pair.f2v.apply(l.ck.model->encode(zscore_apply(l.ds.select_rows(l.rows), l.ck.stats), c.threads));
  const auto ids = l.ds.select_stimuli(l.rows);

  std::optional<eval::ZeroShotResult> zs;
  std::vector<std::size_t> labels;
  if (protos) {
    labels = label_indices(l.ds, l.rows, *protos);
    if (!labels.empty()) zs = eval::zero_shot_accuracy(pred, labels, protos->vectors);
  }
  json samples = json::array();
  std::size_t hits = 0;
  for (std::size_t i = 0; i < l.rows.size(); ++i) {
    const auto top = retrieve_nearest(pred.row(i), gallery, c.top_k);
    hits += top.front().id == ids[i];
    json hits_json = json::array();
    for (const auto& h : top) hits_json.push_back({{"id", h.id}, {"score", h.score}});
    json s = {{"sample_id", l.ds.sample_ids[l.rows[i]]}, {"stimulus_id", ids[i]}, {"top_k", hits_json}};
    if (zs) s["zero_shot_class"] = protos->ids[zs->predicted[i]];
    samples.push_back(std::move(s));
  }
  json report = {{"subject", l.subject}, {"split", c.split}, {"gallery_size", gallery.size()},
                 {"top1_retrieval", static_cast<double>(hits) / static_cast<double>(l.rows.size())},
                 {"samples", samples}};
  if (zs) report["zero_shot_accuracy"] = zs->accuracy;
  const fs::path path = c.reports_dir() / "decode.json";
  io::write_json(path, report);
  run.output("report", path);
  run.write_manifest();
  out << fmt::format("decode: {} signals, top-1 retrieval {:.4f} over {} candidates -> {}\n", l.rows.size(),
                     report["top1_retrieval"].get<double>(), gallery.size(), path.generic_string());
  return 0;
}

int cmd_eval(const RunConfig& c, bool check, std::ostream& out) {
  Run run("eval", c, out);
  const std::uint64_t seed = c.require_seed();
  Loaded l = load_all(run);
  const auto protos = load_prototypes(run);
  if (check) return print_check(out, "eval", c, l), 0;
  eval::EvalInputs in;
  in.model = l.ck.model.get();
  in.pair = &l.pair;
  in.signals = zscore_apply(l.ds.select_rows(l.rows), l.ck.stats);
  in.embeddings = l.table.select(l.ds.select_stimuli(l.rows));
  in.threads = c.threads;
  if (protos) {
    in.labels = label_indices(l.ds, l.rows, *protos);
    if (!in.labels.empty()) in.prototypes = &protos->vectors;
  }
  eval::EvalReport report = eval::evaluate(in, c.n_way, c.trials, seed);
  report.metadata = {{"subject", l.subject}, {"split", c.split}, {"samples", l.rows.size()}};
  report.metadata["checkpoint_crc32"] = artifact_crc(c.checkpoint_path());
  report.metadata["alignment_crc32"] = artifact_crc(c.alignment_path(l.subject));
  report.metadata["dataset_crc32"] = artifact_crc(c.data_path());
  report.metadata["embeddings_crc32"] = artifact_crc(c.embeddings_path());

  const fs::path path = c.reports_dir() / "eval.json", csv = c.reports_dir() / "pearson.csv";
  io::write_json(path, report.to_json());
  eval::write_pearson_csv(report.pearson, csv);
  run.output("report", path);
  run.output("pearson_csv", csv);
  run.write_manifest();
  for (const auto& [name, value] : report.metrics) out << fmt::format("{:<24} {:.6f}\n", name, value);
  out << fmt::format("degenerate_vertices      {}\n", report.pearson.degenerate);
  return 0;
}

int cmd_roundtrip(const RunConfig& c, bool check, std::ostream& out) {
  Run run("roundtrip", c, out);
  Loaded l = load_all(run);
  if (check) return print_check(out, "roundtrip", c, l), 0;
  const auto ids = unique_in_order(l.ds.select_stimuli(l.rows));
  eval::RoundtripOptions opts;
  // Held-out stimuli are the zero-shot condition; a train-split run is an
  // explicit request to measure seen stimuli.
  opts.require_held_out = c.split == "test";
  opts.threads = c.threads;
  const eval::RoundtripReport r =
      eval::roundtrip_report(l.pair, *l.ck.model, ids, l.table.select(ids), Gallery::from_table(l.table), opts);
  json report = r.to_json();
  report["subject"] = l.subject;
  report["split"] = c.split;
  const fs::path path = c.reports_dir() / "roundtrip.json";
  io::write_json(path, report);
  run.output("report", path);
  run.write_manifest();
  out << fmt::format("roundtrip ({}): mean cosine {:.4f}, top-1 {:.4f}; without signal path {:.4f} / {:.4f}\n",
                     c.split, r.mean_cosine, r.top1, r.direct_mean_cosine, r.direct_top1);
  return 0;
}

int cmd_probe_fake(const RunConfig& c, bool check, std::ostream& out) {
  Run run("probe-fake", c, out);
  const std::uint64_t seed = c.require_seed();
  Loaded l = load_all(run);
  if (check) return print_check(out, "probe-fake", c, l), 0;
  // Spread of the training signals as the model sees them (after z-scoring).
  const Tensor train = zscore_apply(l.ds.select_rows(l.ds.indices(Split::kTrain)), l.ck.stats);
  double sum = 0.0, sq = 0.0;
  for (double v : train.values()) sum += v;
  const double mean = sum / static_cast<double>(train.size());
  for (double v : train.values()) sq += (v - mean) * (v - mean);
  const double signal_std = std::sqrt(sq / static_cast<double>(train.size()));

  eval::FakeProbeOptions opts;
  opts.num_fakes = c.num_fakes;
  opts.seed = seed;
  opts.scale = c.fake_scale;
  opts.threads = c.threads;
  const eval::FakeProbeReport r =
      eval::fake_fmri_probe(*l.ck.model, l.pair, Gallery::from_table(l.table),
                            zscore_apply(l.ds.select_rows(l.rows), l.ck.stats), signal_std, opts);
  json report = r.to_json();
  report["subject"] = l.subject;
  report["split"] = c.split;
  const fs::path path = c.reports_dir() / "probe_fake.json";
  io::write_json(path, report);
  run.output("report", path);
  run.write_manifest();
  out << fmt::format("probe-fake: real {:.4f} vs fake {:.4f}, gap {:.4f} (95% CI [{:.4f}, {:.4f}])\n", r.real_mean,
                     r.fake_mean, r.gap, r.ci_low, r.ci_high);
  return 0;
}

int cmd_inspect(const std::string& target, std::ostream& out) {
  const fs::path p = target;
  if (!fs::exists(p)) throw ValidationError("nothing to inspect at " + target);
  if (fs::is_directory(p)) {
    require_artifact(p / "manifest.json", "bundle manifest", "not a dataset or embedding bundle");
    json m = io::read_json(p / "manifest.json");
    json summary = {{"path", p.generic_string()}};
    if (m.contains("rois")) {
      const FmriDataset ds = load_bundle(p);
      summary["kind"] = "dataset";
      summary["subject_id"] = ds.subject_id;
      summary["samples"] = ds.num_samples();
      summary["train"] = ds.indices(Split::kTrain).size();
      summary["test"] = ds.indices(Split::kTest).size();
      summary["rois"] = m["rois"];
      summary["vertices"] = ds.layout.total();
    } else {
      const EmbeddingTable t = load_embedding_bundle(p);
      summary["kind"] = "embeddings";
      summary["entries"] = t.ids.size();
      summary["dim"] = t.vectors.cols();
    }
    out << summary.dump(2) << '\n';
    return 0;
  }
  json header = io::read_container_header(p);
  const std::string kind = header.value("kind", "");
  json summary = {{"path", p.generic_string()}, {"kind", kind}};
  if (kind == "autoencoder") {
    const ModelConfig mc = ModelConfig::from_json(header.at("config"));
    std::size_t params = 0;
    for (const auto& [name, shape] : expected_param_shapes(mc)) params += shape_numel(shape);
    summary["architecture"] = fmt::format("{}/{} with {}/{} dimensions, {} heads, C = {}", mc.enc_depth,
                                          mc.dec_depth, mc.enc_dim, mc.dec_dim, mc.num_heads, mc.channels_per_roi);
    summary["parameters"] = params;
    for (const char* key : {"config", "subject_id", "schedule", "seed", "initial_loss", "final_loss"})
      if (header.contains(key)) summary[key] = header[key];
  } else if (kind == "alignment") {
    summary["subject_id"] = header.value("subject_id", "");
    json maps = json::array();
    for (const auto& m : header.at("maps"))
      maps.push_back({{"name", m.at("name")}, {"direction", m.at("direction")}, {"lambda", m.at("lambda")},
                      {"dims", m.at("dims")}});
    summary["maps"] = maps;
    summary["fit_pairs"] = header.value("fit_stimulus_ids", json::array()).size();
  } else {
    summary["header"] = header;
  }
  out << summary.dump(2) << '\n';
  return 0;
}

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "JSON run config; flags override its values");
  sub->add_option("--seed", f.seed, "master seed");
  sub->add_option("--preset", f.preset, "desk | paper")->check(CLI::IsMember({"desk", "paper"}));
  sub->add_option("--out", f.out, "run directory (data/, checkpoints/, alignments/, reports/, logs/)");
  sub->add_option("--subject", f.subject, "subject id (default: the dataset's)");
  sub->add_option("--threads", f.threads, "inference threads (default: LEA_THREADS or 1)")->check(CLI::PositiveNumber);
  sub->add_flag("--check", f.check, "validate inputs and print the resolved configuration only");
}

void add_inputs(CLI::App* sub, Flags& f) {
  sub->add_option("--data", f.data, "dataset bundle directory");
  sub->add_option("--embeddings", f.embeddings, "embedding bundle directory");
  sub->add_option("--prototypes", f.prototypes, "class prototype bundle directory");
  sub->add_option("--checkpoint", f.checkpoint, "autoencoder checkpoint");
  sub->add_option("--alignment", f.alignment, "alignment file");
  sub->add_option("--split", f.split, "train | test")->check(CLI::IsMember({"train", "test"}));
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"lea: fMRI latent autoencoding, embedding alignment and evaluation", "lea"};
  app.require_subcommand(1);
  Flags f;

  auto* synth = app.add_subcommand("synth", "generate synthetic dataset, embedding and prototype bundles");
  add_common(synth, f);

  auto* train = app.add_subcommand("train", "train the fMRI autoencoder");
  add_common(train, f);
  add_inputs(train, f);
  train->add_option("--iters", f.iters, "override the schedule's iteration count");
  train->add_flag("--include-test-signals", f.include_test_signals,
                  "also train on test-split signals (unpaired; normalization stays train-only)");

  auto* align = app.add_subcommand("align", "fit the latent/embedding alignment pair");
  add_common(align, f);
  add_inputs(align, f);
  align->add_option("--lambda-grid", f.lambda_grid, "comma-separated ridge penalties for cross-validation");
  align->add_option("--folds", f.folds, "cross-validation folds");
  align->add_flag("--whiten", f.whiten, "whiten latents before fitting");

  auto* encode = app.add_subcommand("encode", "predict fMRI signals from stimulus embeddings");
  add_common(encode, f);
  add_inputs(encode, f);

  auto* decode = app.add_subcommand("decode", "decode fMRI signals to embeddings, retrieval and zero-shot class");
  add_common(decode, f);
  add_inputs(decode, f);
  decode->add_option("--top-k", f.top_k, "retrieval candidates to report");

  auto* ev = app.add_subcommand("eval", "compute the full evaluation report");
  add_common(ev, f);
  add_inputs(ev, f);
  ev->add_option("--n-way", f.n_way, "candidates per identification trial");
  ev->add_option("--trials", f.trials, "identification trials");

  auto* rt = app.add_subcommand("roundtrip", "embedding -> fMRI -> embedding round trip");
  add_common(rt, f);
  add_inputs(rt, f);

  auto* probe = app.add_subcommand("probe-fake", "Gaussian fake-fMRI reliability probe");
  add_common(probe, f);
  add_inputs(probe, f);
  probe->add_option("--num-fakes", f.num_fakes, "number of fake signals (>= 30)");
  probe->add_option("--scale", f.scale, "fake std as a multiple of the training-signal std");

  auto* inspect = app.add_subcommand("inspect", "print bundle, checkpoint or alignment metadata");
  inspect->add_option("path", f.inspect_path, "artifact to inspect")->required();

  std::vector<const char*> argv;
  argv.push_back("lea");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (inspect->parsed()) return cmd_inspect(f.inspect_path, out);
    const RunConfig c = resolve(f);
    if (synth->parsed()) return cmd_synth(c, f.check, out);
    if (train->parsed()) return cmd_train(c, f.check, out);
    if (align->parsed()) return cmd_align(c, f.check, out);
    if (encode->parsed()) return cmd_encode(c, f.check, out);
    if (decode->parsed()) return cmd_decode(c, f.check, out);
    if (ev->parsed()) return cmd_eval(c, f.check, out);
    if (rt->parsed()) return cmd_roundtrip(c, f.check, out);
    if (probe->parsed()) return cmd_probe_fake(c, f.check, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "failed: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace lea::cli
