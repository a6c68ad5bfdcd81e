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

#include "lea/eval/eval.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include <fmt/format.h>

#include "lea/error.h"
#include "lea/numerics/linalg.h"
#include "lea/numerics/rng.h"

namespace lea::eval {
namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.ndim() != 2 || b.ndim() != 2 || a.shape() != b.shape())
    throw ShapeError(std::string(what) + ": shapes " + shape_to_string(a.shape()) + " and " +
                     shape_to_string(b.shape()) + " differ");
}

// pred_n * gt_n^T for unit-normalized rows.
Tensor cosine_matrix(const Tensor& pred, const Tensor& gt) {
  const Tensor p = normalize_rows(pred, "prediction");
  const Tensor g = normalize_rows(gt, "ground truth");
  Tensor s({p.rows(), g.rows()});
  gemm_nt(p.data(), g.data(), s.data(), p.rows(), p.cols(), g.rows(), false);
  return s;
}

std::vector<double> col_mean(const Tensor& x) {
  std::vector<double> m(x.cols(), 0.0);
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) m[j] += x(i, j);
  for (double& v : m) v /= static_cast<double>(x.rows());
  return m;
}

Tensor covariance(const Tensor& x, const std::vector<double>& mean) {
  Tensor c({x.rows(), x.cols()});
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) c(i, j) = x(i, j) - mean[j];
  Tensor cov = gram(c);
  for (double& v : cov.values()) v /= static_cast<double>(x.rows() - 1);
  return cov;
}

void symmetrize(Tensor& a) {
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < i; ++j) a(i, j) = a(j, i) = 0.5 * (a(i, j) + a(j, i));
}

Tensor sqrt_psd(const Tensor& a) {
  const SymEig eig = sym_eig(a);
  const std::size_t d = a.rows();
  Tensor out({d, d});
  for (std::size_t k = 0; k < d; ++k) {
    const double s = std::sqrt(std::max(eig.values[k], 0.0));
    for (std::size_t i = 0; i < d; ++i) {
      const double v = eig.vectors(i, k) * s;
      for (std::size_t j = 0; j < d; ++j) out(i, j) += v * eig.vectors(j, k);
    }
  }
  return out;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

// Best cosine against the gallery for each row.
std::vector<double> max_similarity(const Tensor& queries, const Gallery& gallery) {
  const Tensor s = cosine_matrix(queries, gallery.vectors);
  std::vector<double> best(s.rows(), -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < s.rows(); ++i)
    for (double v : s.row(i)) best[i] = std::max(best[i], v);
  return best;
}

double top1_rate(const Tensor& queries, const std::vector<std::size_t>& targets,
                 const Gallery& gallery) {
  const Tensor s = cosine_matrix(queries, gallery.vectors);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < s.rows(); ++i) {
    auto r = s.row(i);
    // First maximum, matching retrieve_nearest's gallery-order tie break.
    const auto best = static_cast<std::size_t>(std::max_element(r.begin(), r.end()) - r.begin());
    hits += best == targets[i];
  }
  return static_cast<double>(hits) / static_cast<double>(s.rows());
}

nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); }

}  // namespace

PearsonResult pearsonr_vertexwise(const Tensor& pred, const Tensor& gt) {
  require_same_shape(pred, gt, "pearsonr_vertexwise");
  const std::size_t n = pred.rows(), l = pred.cols();
  if (n < 2) throw ValidationError("pearsonr_vertexwise: need at least 2 samples");
  if (!pred.all_finite() || !gt.all_finite())
    throw NumericError("pearsonr_vertexwise: non-finite inputs");
  const auto mp = col_mean(pred), mg = col_mean(gt);
  std::vector<double> sxy(l, 0.0), sxx(l, 0.0), syy(l, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < l; ++j) {
      const double a = pred(i, j) - mp[j], b = gt(i, j) - mg[j];
      sxy[j] += a * b;
      sxx[j] += a * a;
      syy[j] += b * b;
    }
  PearsonResult out;
  out.per_vertex.assign(l, std::numeric_limits<double>::quiet_NaN());
  const double floor = kDegenerateVariance * static_cast<double>(n);
  double total = 0.0;
  for (std::size_t j = 0; j < l; ++j) {
    if (sxx[j] < floor || syy[j] < floor) {
      ++out.degenerate;
      continue;
    }
    const double r = std::clamp(sxy[j] / std::sqrt(sxx[j] * syy[j]), -1.0, 1.0);
    out.per_vertex[j] = r;
    total += r;
  }
  if (out.degenerate == l) throw NumericError("pearsonr_vertexwise: every vertex is degenerate");
  out.mean = total / static_cast<double>(l - out.degenerate);
  return out;
}

double nway_accuracy(const Tensor& pred, const Tensor& gt, std::size_t n, std::size_t trials,
                     std::uint64_t seed) {
  require_same_shape(pred, gt, "nway_accuracy");
  const std::size_t m = pred.rows();
  if (n < 2) throw ValidationError("nway_accuracy: n must be >= 2");
  if (m < n)
    throw ValidationError(fmt::format("nway_accuracy: {} samples are fewer than n = {}", m, n));
  if (trials < 1) throw ValidationError("nway_accuracy: trials must be >= 1");
  const Tensor p = normalize_rows(pred, "prediction");
  const Tensor g = normalize_rows(gt, "ground truth");
  std::size_t correct = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    RngStream rng(seed, t);
    const auto target = static_cast<std::size_t>(rng.below(m));
    const double own = dot(p.row(target), g.row(target));
    bool ok = true;
    // Distractors are drawn from the other m - 1 samples.
    for (std::size_t k : rng.sample_without_replacement(m - 1, n - 1)) {
      const std::size_t d = k < target ? k : k + 1;
      if (!(own > dot(p.row(target), g.row(d)))) {
        ok = false;
        break;
      }
    }
    correct += ok;
  }
  return static_cast<double>(correct) / static_cast<double>(trials);
}

double pairwise_identification(const Tensor& pred, const Tensor& gt) {
  require_same_shape(pred, gt, "pairwise_identification");
  const std::size_t m = pred.rows();
  if (m < 2) throw ValidationError("pairwise_identification: need at least 2 samples");
  const Tensor s = cosine_matrix(pred, gt);
  std::size_t wins = 0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      if (i != j && s(i, i) > s(i, j)) ++wins;
  return 100.0 * static_cast<double>(wins) / static_cast<double>(m * (m - 1));
}

double mean_cosine(const Tensor& pred, const Tensor& gt) {
  require_same_shape(pred, gt, "mean_cosine");
  if (pred.rows() == 0) throw ValidationError("mean_cosine: no samples");
  double total = 0.0;
  for (std::size_t i = 0; i < pred.rows(); ++i) {
    if (norm2(pred.row(i)) == 0.0) throw ValidationError(fmt::format("mean_cosine: prediction row {} has zero norm", i));
    if (norm2(gt.row(i)) == 0.0) throw ValidationError(fmt::format("mean_cosine: ground-truth row {} has zero norm", i));
    total += cosine(pred.row(i), gt.row(i));
  }
  return total / static_cast<double>(pred.rows());
}

double frechet(const Tensor& feat_a, const Tensor& feat_b) {
  if (feat_a.ndim() != 2 || feat_b.ndim() != 2 || feat_a.cols() != feat_b.cols())
    throw ShapeError("frechet: feature widths differ");
  if (feat_a.rows() < 2 || feat_b.rows() < 2) throw ValidationError("frechet: need at least 2 samples per set");
  if (!feat_a.all_finite() || !feat_b.all_finite()) throw NumericError("frechet: non-finite features");
  const auto ma = col_mean(feat_a), mb = col_mean(feat_b);
  const Tensor ca = covariance(feat_a, ma), cb = covariance(feat_b, mb);
  const Tensor sa = sqrt_psd(ca);
  Tensor inner = matmul(sa, matmul(cb, sa));
  symmetrize(inner);
  const SymEig eig = sym_eig(inner);
  double tr_sqrt = 0.0;
  for (double v : eig.values.values()) tr_sqrt += std::sqrt(std::max(v, 0.0));
  double d2 = 0.0;
  for (std::size_t j = 0; j < ma.size(); ++j) {
    const double diff = ma[j] - mb[j];
    d2 += diff * diff + ca(j, j) + cb(j, j);
  }
  d2 -= 2.0 * tr_sqrt;
  return std::sqrt(std::max(d2, 0.0));
}

ZeroShotResult zero_shot_accuracy(const Tensor& pred, const std::vector<std::size_t>& labels,
                                  const Tensor& prototypes) {
  if (pred.ndim() != 2 || prototypes.ndim() != 2 || pred.cols() != prototypes.cols())
    throw ShapeError("zero_shot_accuracy: embedding widths differ");
  if (labels.size() != pred.rows())
    throw ShapeError(fmt::format("zero_shot_accuracy: {} labels for {} predictions", labels.size(), pred.rows()));
  if (pred.rows() == 0) throw ValidationError("zero_shot_accuracy: no samples");
  const std::size_t k = prototypes.rows();
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] >= k)
      throw ValidationError(fmt::format("zero_shot_accuracy: label {} of sample {} is outside [0, {})", labels[i], i, k));
  const Tensor s = cosine_matrix(pred, prototypes);
  ZeroShotResult out;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < s.rows(); ++i) {
    auto r = s.row(i);
    const auto best = static_cast<std::size_t>(std::max_element(r.begin(), r.end()) - r.begin());
    out.predicted.push_back(best);
    hits += best == labels[i];
  }
  out.accuracy = static_cast<double>(hits) / static_cast<double>(s.rows());
  return out;
}

nlohmann::json RoundtripReport::to_json() const {
  return {{"samples", samples},
          {"held_out", held_out},
          {"mean_cosine", mean_cosine},
          {"top1", top1},
          {"direct_mean_cosine", direct_mean_cosine},
          {"direct_top1", direct_top1},
          {"cosines", cosines}};
}

RoundtripReport roundtrip_report(const AlignmentPair& pair, const AutoencoderModel& model,
                                 const std::vector<std::string>& ids, const Tensor& embeddings,
                                 const Gallery& gallery, const RoundtripOptions& options) {
  pair.validate();
  if (ids.size() != embeddings.rows() || ids.empty())
    throw ShapeError(fmt::format("roundtrip: {} ids for {} embedding rows", ids.size(), embeddings.rows()));
  if (embeddings.cols() != pair.v2f.input_dim())
    throw ShapeError(fmt::format("roundtrip: embeddings have width {}, alignment expects {}",
                                 embeddings.cols(), pair.v2f.input_dim()));
  if (pair.v2f.output_dim() != model.config().enc_dim)
    throw ShapeError(fmt::format("roundtrip: alignment latent width {} does not match the model's {}",
                                 pair.v2f.output_dim(), model.config().enc_dim));
  if (gallery.vectors.cols() != pair.f2v.output_dim())
    throw ShapeError("roundtrip: gallery width does not match the alignment");

  const std::set<std::string> fitted(pair.fit_stimulus_ids.begin(), pair.fit_stimulus_ids.end());
  std::size_t seen = 0;
  for (const auto& id : ids) seen += fitted.count(id);
  RoundtripReport out;
  out.samples = ids.size();
  out.held_out = seen == 0 && !fitted.empty();
  if (options.require_held_out && seen > 0)
    throw ValidationError(fmt::format(
        "roundtrip: {} of {} stimuli were used to fit the alignment; the zero-shot round trip needs held-out stimuli",
        seen, ids.size()));

  std::vector<std::size_t> targets;
  for (const auto& id : ids) {
    const auto it = std::find(gallery.ids.begin(), gallery.ids.end(), id);
    if (it == gallery.ids.end()) throw ValidationError("roundtrip: stimulus '" + id + "' is not in the gallery");
    targets.push_back(static_cast<std::size_t>(it - gallery.ids.begin()));
  }

  const Tensor latents = pair.v2f.apply(embeddings);
  const Tensor signals = model.decode_latent(latents, options.threads);
  const Tensor relatents = model.encode(signals, options.threads);
  const Tensor v_hat = pair.f2v.apply(relatents);
  const Tensor v_direct = pair.f2v.apply(latents);

  for (std::size_t i = 0; i < ids.size(); ++i) out.cosines.push_back(cosine(embeddings.row(i), v_hat.row(i)));
  out.mean_cosine = mean_of(out.cosines);
  out.top1 = top1_rate(v_hat, targets, gallery);
  out.direct_mean_cosine = mean_cosine(v_direct, embeddings);
  out.direct_top1 = top1_rate(v_direct, targets, gallery);
  return out;
}

nlohmann::json FakeProbeReport::to_json() const {
  return {{"real_max_similarity", real_max_similarity},
          {"fake_max_similarity", fake_max_similarity},
          {"real_mean", real_mean},
          {"fake_mean", fake_mean},
          {"gap", gap},
          {"ci", {ci_low, ci_high}},
          {"confidence", options.confidence},
          {"bootstrap", options.bootstrap},
          {"num_fakes", options.num_fakes},
          {"scale", options.scale},
          {"signal_std", signal_std},
          {"seed", options.seed}};
}

FakeProbeReport fake_fmri_probe(const AutoencoderModel& model, const AlignmentPair& pair,
                                const Gallery& gallery, const Tensor& real_signals,
                                double signal_std, const FakeProbeOptions& options) {
  pair.validate();
  if (options.num_fakes < 30) throw ValidationError("fake_fmri_probe: num_fakes must be >= 30");
  if (!(signal_std > 0.0) || !(options.scale > 0.0))
    throw ValidationError("fake_fmri_probe: signal std and scale must be positive");
  if (options.bootstrap < 100) throw ValidationError("fake_fmri_probe: bootstrap must be >= 100");
  if (!(options.confidence > 0.0 && options.confidence < 1.0))
    throw ValidationError("fake_fmri_probe: confidence must be in (0, 1)");
  if (real_signals.rows() < 2) throw ValidationError("fake_fmri_probe: need at least 2 real signals");
  const std::size_t l = model.config().layout.total();
  if (real_signals.cols() != l)
    throw ShapeError(fmt::format("fake_fmri_probe: real signals have width {}, model expects {}", real_signals.cols(), l));

  FakeProbeReport out;
  out.options = options;
  out.signal_std = signal_std;

  RngStream noise(options.seed, 1);
  Tensor fakes({options.num_fakes, l});
  for (double& v : fakes.values()) v = options.scale * signal_std * noise.normal();

  out.real_max_similarity = max_similarity(pair.f2v.apply(model.encode(real_signals, options.threads)), gallery);
  out.fake_max_similarity = max_similarity(pair.f2v.apply(model.encode(fakes, options.threads)), gallery);
  out.real_mean = mean_of(out.real_max_similarity);
  out.fake_mean = mean_of(out.fake_max_similarity);
  out.gap = out.real_mean - out.fake_mean;

  RngStream boot(options.seed, 2);
  const auto& real = out.real_max_similarity;
  const auto& fake = out.fake_max_similarity;
  std::vector<double> gaps(options.bootstrap);
  for (double& g : gaps) {
    double sr = 0.0, sf = 0.0;
    for (std::size_t i = 0; i < real.size(); ++i) sr += real[boot.below(real.size())];
    for (std::size_t i = 0; i < fake.size(); ++i) sf += fake[boot.below(fake.size())];
    g = sr / static_cast<double>(real.size()) - sf / static_cast<double>(fake.size());
  }
  std::sort(gaps.begin(), gaps.end());
  const double tail = 0.5 * (1.0 - options.confidence);
  const auto b = static_cast<double>(gaps.size());
  const auto lo = static_cast<std::size_t>(std::floor(tail * b));
  const auto hi = std::min(gaps.size() - 1, static_cast<std::size_t>(std::ceil((1.0 - tail) * b)) - 1);
  out.ci_low = gaps[lo];
  out.ci_high = gaps[hi];
  return out;
}

void EvalReport::validate() const {
  for (double r : pearson.per_vertex)
    if (std::isfinite(r) && (r < -1.0 || r > 1.0)) throw NumericError("eval report: Pearson value outside [-1, 1]");
  for (const auto& [name, value] : metrics) {
    if (!std::isfinite(value)) throw NumericError("eval report: metric '" + name + "' is not finite");
    const bool is_accuracy = name.ends_with("accuracy");
    if (is_accuracy && (value < 0.0 || value > 1.0))
      throw NumericError("eval report: accuracy '" + name + "' outside [0, 1]");
    if (name.starts_with("frechet") && value < 0.0) throw NumericError("eval report: negative Frechet distance");
  }
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json per_vertex = nlohmann::json::array();
  for (double r : pearson.per_vertex) per_vertex.push_back(finite_or_null(r));
  nlohmann::json m = nlohmann::json::object();
  for (const auto& [k, v] : metrics) m[k] = v;
  return {{"metrics", m},
          {"pearson",
           {{"mean", pearson.mean}, {"degenerate_vertices", pearson.degenerate}, {"per_vertex", per_vertex}}},
          {"trials", {{"n_way", n_way}, {"trials", trials}, {"seed", seed}}},
          {"metadata", metadata}};
}

EvalReport evaluate(const EvalInputs& in, std::size_t n_way, std::size_t trials, std::uint64_t seed) {
  if (!in.model || !in.pair) throw ValidationError("evaluate: model and alignment are required");
  in.pair->validate();
  if (in.signals.rows() != in.embeddings.rows())
    throw ShapeError(fmt::format("evaluate: {} signals but {} embeddings", in.signals.rows(), in.embeddings.rows()));

  EvalReport report;
  report.n_way = n_way;
  report.trials = trials;
  report.seed = seed;

  const Tensor latents = in.model->encode(in.signals, in.threads);
  const Tensor pred_emb = in.pair->f2v.apply(latents);
  report.metrics["nway_accuracy"] = nway_accuracy(pred_emb, in.embeddings, n_way, trials, seed);
  report.metrics["pairwise_identification"] = pairwise_identification(pred_emb, in.embeddings);
  report.metrics["mean_cosine"] = mean_cosine(pred_emb, in.embeddings);
  report.metrics["frechet_embedding"] = frechet(pred_emb, in.embeddings);
  if (in.prototypes)
    report.metrics["zero_shot_accuracy"] = zero_shot_accuracy(pred_emb, in.labels, *in.prototypes).accuracy;

  const Tensor pred_signals = in.model->decode_latent(in.pair->v2f.apply(in.embeddings), in.threads);
  report.pearson = pearsonr_vertexwise(pred_signals, in.signals);
  report.metrics["pearson_mean"] = report.pearson.mean;
  report.validate();
  return report;
}

void write_pearson_csv(const PearsonResult& result, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << "vertex,pearson\n";
  for (std::size_t j = 0; j < result.per_vertex.size(); ++j) {
    const double r = result.per_vertex[j];
    out << j << ',' << (std::isfinite(r) ? fmt::format("{:.17g}", r) : std::string("nan")) << '\n';
  }
}

}  // namespace lea::eval
