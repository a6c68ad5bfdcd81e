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

#include "lea/dataset/synthetic.h"

#include <cmath>
#include <cstdio>

#include "lea/error.h"
#include "lea/numerics/rng.h"

namespace lea {

namespace {

enum Stream : std::uint64_t {
  kFmriMap = 1,
  kEmbeddingMap = 2,
  kCenters = 3,
  kLatents = 4,
  kFmriNoise = 5,
  kEmbeddingNoise = 6,
};

Tensor unit_row_matrix(std::size_t rows, std::size_t cols, RngStream& rng) {
  Tensor m({rows, cols});
  for (auto& v : m.storage()) v = rng.normal();
  for (std::size_t r = 0; r < rows; ++r) {
    auto row = m.row(r);
    const double n = norm2(row);
    for (auto& v : row) v /= n;
  }
  return m;
}

std::string numbered(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%05zu", prefix, i);
  return buf;
}

}  // namespace

void SyntheticSpec::validate() const {
  if (latent_dim == 0 || embedding_dim == 0 || num_classes == 0) {
    throw ValidationError("synthetic spec: latent_dim, embedding_dim and num_classes must be >= 1");
  }
  if (train_samples == 0 && test_samples == 0) throw ValidationError("synthetic spec: no samples");
  if (!(noise_std_fmri >= 0.0) || !(noise_std_emb >= 0.0) || !(class_jitter >= 0.0)) {
    throw ValidationError("synthetic spec: noise levels must be non-negative");
  }
  if (layout.size() == 0) throw ValidationError("synthetic spec: empty ROI layout");
}

SyntheticSpec& SyntheticSpec::with_snr(double snr) {
  if (!(snr > 0.0)) throw ValidationError("SNR must be positive");
  noise_std_fmri = noise_std_emb = std::sqrt(signal_variance() / snr);
  return *this;
}

SyntheticSpec SyntheticSpec::desk(std::uint64_t seed) {
  SyntheticSpec s;
  s.seed = seed;
  s.with_snr(10.0);
  return s;
}

nlohmann::json SyntheticSpec::to_json() const {
  return {{"latent_dim", latent_dim},       {"rois", layout.to_json()},
          {"embedding_dim", embedding_dim}, {"num_classes", num_classes},
          {"train_samples", train_samples}, {"test_samples", test_samples},
          {"noise_std_fmri", noise_std_fmri}, {"noise_std_emb", noise_std_emb},
          {"class_jitter", class_jitter},   {"seed", seed},
          {"subject_id", subject_id}};
}

SyntheticSpec SyntheticSpec::from_json(const nlohmann::json& j) {
  SyntheticSpec s;
  s.latent_dim = j.value("latent_dim", s.latent_dim);
  if (j.contains("rois")) s.layout = RoiLayout::from_json(j["rois"]);
  s.embedding_dim = j.value("embedding_dim", s.embedding_dim);
  s.num_classes = j.value("num_classes", s.num_classes);
  s.train_samples = j.value("train_samples", s.train_samples);
  s.test_samples = j.value("test_samples", s.test_samples);
  s.class_jitter = j.value("class_jitter", s.class_jitter);
  s.seed = j.value("seed", s.seed);
  s.subject_id = j.value("subject_id", s.subject_id);
  if (j.contains("snr")) s.with_snr(j["snr"].get<double>());
  s.noise_std_fmri = j.value("noise_std_fmri", s.noise_std_fmri);
  s.noise_std_emb = j.value("noise_std_emb", s.noise_std_emb);
  s.validate();
  return s;
}

std::string synthetic_class_name(std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "class-%03zu", k);
  return buf;
}

SyntheticData synth_generate(const SyntheticSpec& spec) {
  spec.validate();
  const std::size_t dz = spec.latent_dim, l = spec.layout.total(), d = spec.embedding_dim;
  const std::size_t k = spec.num_classes, m = spec.train_samples + spec.test_samples;

  SyntheticTruth truth;
  {
    RngStream rng(spec.seed, kFmriMap);
    truth.fmri_map = unit_row_matrix(l, dz, rng);
  }
  {
    RngStream rng(spec.seed, kEmbeddingMap);
    truth.embedding_map = unit_row_matrix(d, dz, rng);
  }
  {
    RngStream rng(spec.seed, kCenters);
    truth.class_centers = Tensor({k, dz});
    for (auto& v : truth.class_centers.storage()) v = rng.normal();
  }
  truth.latents = Tensor({m, dz});
  {
    RngStream rng(spec.seed, kLatents);
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t label = static_cast<std::size_t>(rng.below(k));
      truth.labels.push_back(label);
      for (std::size_t e = 0; e < dz; ++e) {
        truth.latents(i, e) = truth.class_centers(label, e) + spec.class_jitter * rng.normal();
      }
    }
  }

  SyntheticData out;
  FmriDataset& ds = out.dataset;
  ds.subject_id = spec.subject_id;
  ds.layout = spec.layout;
  ds.signals = matmul(truth.latents, truth.fmri_map.transposed());
  {
    RngStream rng(spec.seed, kFmriNoise);
    if (spec.noise_std_fmri > 0.0)
      for (auto& v : ds.signals.storage()) v += spec.noise_std_fmri * rng.normal();
  }
  for (std::size_t i = 0; i < m; ++i) {
    ds.sample_ids.push_back(numbered("s", i));
    ds.stimulus_ids.push_back(numbered("stim-", i));
    ds.split.push_back(i < spec.train_samples ? Split::kTrain : Split::kTest);
    ds.labels.push_back(synthetic_class_name(truth.labels[i]));
  }

  Tensor emb = matmul(truth.latents, truth.embedding_map.transposed());
  {
    RngStream rng(spec.seed, kEmbeddingNoise);
    if (spec.noise_std_emb > 0.0)
      for (auto& v : emb.storage()) v += spec.noise_std_emb * rng.normal();
  }
  out.embeddings = EmbeddingTable{ds.stimulus_ids, std::move(emb)};

  std::vector<std::string> class_ids;
  for (std::size_t c = 0; c < k; ++c) class_ids.push_back(synthetic_class_name(c));
  out.prototypes = EmbeddingTable{
      std::move(class_ids),
      normalize_rows(matmul(truth.class_centers, truth.embedding_map.transposed()), "prototype")};
  out.truth = std::move(truth);
  ds.validate();
  return out;
}

}  // namespace lea
