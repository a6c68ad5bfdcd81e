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

#include "lea/autoencoder/config.h"

#include "lea/error.h"

namespace lea {

void ModelConfig::validate() const {
  if (enc_depth == 0 || dec_depth == 0) throw ValidationError("model depth must be >= 1");
  if (num_heads == 0 || enc_dim % num_heads != 0 || dec_dim % num_heads != 0) {
    throw ValidationError("enc_dim (" + std::to_string(enc_dim) + ") and dec_dim (" +
                          std::to_string(dec_dim) + ") must be divisible by num_heads (" +
                          std::to_string(num_heads) + ")");
  }
  if (channels_per_roi == 0) throw ValidationError("channels_per_roi must be >= 1");
  if (conv_kernel % 2 == 0) throw ValidationError("conv_kernel must be odd");
  if (mlp_ratio == 0) throw ValidationError("mlp_ratio must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ValidationError("dropout must be in [0, 1)");
  if (layout.size() == 0) throw ValidationError("model config has no ROI layout");
}

ModelConfig ModelConfig::paper(RoiLayout layout) {
  ModelConfig c;
  c.enc_depth = 24;
  c.enc_dim = 1024;
  c.dec_depth = 8;
  c.dec_dim = 512;
  c.num_heads = 16;
  c.channels_per_roi = 32;
  c.layout = std::move(layout);
  return c;
}

ModelConfig ModelConfig::desk(RoiLayout layout) {
  ModelConfig c;
  c.layout = std::move(layout);
  return c;
}

nlohmann::json ModelConfig::to_json() const {
  return {{"enc_depth", enc_depth},   {"enc_dim", enc_dim},
          {"dec_depth", dec_depth},   {"dec_dim", dec_dim},
          {"num_heads", num_heads},   {"channels_per_roi", channels_per_roi},
          {"conv_kernel", conv_kernel}, {"mlp_ratio", mlp_ratio},
          {"dropout", dropout},       {"rois", layout.to_json()}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.enc_depth = j.value("enc_depth", c.enc_depth);
  c.enc_dim = j.value("enc_dim", c.enc_dim);
  c.dec_depth = j.value("dec_depth", c.dec_depth);
  c.dec_dim = j.value("dec_dim", c.dec_dim);
  c.num_heads = j.value("num_heads", c.num_heads);
  c.channels_per_roi = j.value("channels_per_roi", c.channels_per_roi);
  c.conv_kernel = j.value("conv_kernel", c.conv_kernel);
  c.mlp_ratio = j.value("mlp_ratio", c.mlp_ratio);
  c.dropout = j.value("dropout", c.dropout);
  if (j.contains("rois")) c.layout = RoiLayout::from_json(j["rois"]);
  c.validate();
  return c;
}

namespace {

void block_shapes(std::vector<std::pair<std::string, Shape>>& out, const std::string& prefix,
                  std::size_t dim, std::size_t ratio) {
  out.push_back({prefix + ".ln1.g", {dim}});
  out.push_back({prefix + ".ln1.b", {dim}});
  out.push_back({prefix + ".attn.qkv.w", {dim, 3 * dim}});
  // No key bias: it shifts every score of a query equally, which softmax
  // cancels, so its gradient is identically zero.
  out.push_back({prefix + ".attn.q.b", {dim}});
  out.push_back({prefix + ".attn.v.b", {dim}});
  out.push_back({prefix + ".attn.out.w", {dim, dim}});
  out.push_back({prefix + ".attn.out.b", {dim}});
  out.push_back({prefix + ".ln2.g", {dim}});
  out.push_back({prefix + ".ln2.b", {dim}});
  out.push_back({prefix + ".mlp.fc1.w", {dim, ratio * dim}});
  out.push_back({prefix + ".mlp.fc1.b", {ratio * dim}});
  out.push_back({prefix + ".mlp.fc2.w", {ratio * dim, dim}});
  out.push_back({prefix + ".mlp.fc2.b", {dim}});
}

}  // namespace

std::vector<std::pair<std::string, Shape>> expected_param_shapes(const ModelConfig& c) {
  c.validate();
  std::vector<std::pair<std::string, Shape>> out;
  const std::size_t r = c.layout.size(), ch = c.channels_per_roi;
  for (std::size_t i = 0; i < r; ++i) {
    const std::string p = "embed.roi" + std::to_string(i);
    out.push_back({p + ".conv.w", {ch, c.conv_kernel}});
    out.push_back({p + ".conv.b", {ch}});
    out.push_back({p + ".fc.w", {c.layout[i].voxels, c.enc_dim}});
    out.push_back({p + ".fc.b", {c.enc_dim}});
  }
  out.push_back({"enc.cls", {1, c.enc_dim}});
  out.push_back({"enc.roi_type", {r, c.enc_dim}});
  for (std::size_t l = 0; l < c.enc_depth; ++l)
    block_shapes(out, "enc.block" + std::to_string(l), c.enc_dim, c.mlp_ratio);
  out.push_back({"enc.norm.g", {c.enc_dim}});
  out.push_back({"enc.norm.b", {c.enc_dim}});
  out.push_back({"enc_to_dec.w", {c.enc_dim, c.dec_dim}});
  out.push_back({"enc_to_dec.b", {c.dec_dim}});
  out.push_back({"dec.mask", {1, c.dec_dim}});
  out.push_back({"dec.roi_type", {r, c.dec_dim}});
  for (std::size_t l = 0; l < c.dec_depth; ++l)
    block_shapes(out, "dec.block" + std::to_string(l), c.dec_dim, c.mlp_ratio);
  out.push_back({"dec.norm.g", {c.dec_dim}});
  out.push_back({"dec.norm.b", {c.dec_dim}});
  for (std::size_t i = 0; i < r; ++i) {
    const std::string p = "project.roi" + std::to_string(i);
    out.push_back({p + ".fc.w", {c.dec_dim, c.layout[i].voxels}});
    out.push_back({p + ".fc.b", {c.layout[i].voxels}});
    out.push_back({p + ".mix.w", {ch}});
    out.push_back({p + ".mix.b", {1}});
  }
  return out;
}

}  // namespace lea
