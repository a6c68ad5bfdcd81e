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

#include <cstddef>
#include <vector>

#include "lea/numerics/rng.h"
#include "lea/numerics/tape.h"

// Differentiable primitives recorded on a Tape. Matrices are 2-D tensors;
// bias-like parameters are 1-D. Batched sequence tensors are stored as
// (batch * seq) x features with sample b occupying rows [b*seq, (b+1)*seq).
namespace lea::ops {

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var scale(Var x, double s);
// X (m x n) + b (n) broadcast over rows.
Var add_bias(Var x, Var bias);
// X ((batch*seq) x n) + P (seq x n) added to every sample block.
Var add_tiled(Var x, Var pattern);

// Row-wise layer normalization with affine gamma/beta (length n).
Var layer_norm(Var x, Var gamma, Var beta, double eps = 1e-5);
// Exact GELU, 0.5 x (1 + erf(x / sqrt 2)).
Var gelu(Var x);
Var softmax_rows(Var x);
// Multi-head scaled dot-product self attention. qkv is (batch*seq) x 3d with
// query, key, value blocks side by side; returns (batch*seq) x d.
Var attention(Var qkv, std::size_t batch, std::size_t seq, std::size_t heads);
// Inverted dropout. Identity when p == 0.
Var dropout(Var x, double p, RngStream& rng);

// out[r] = x[index[r]], or a zero row where index[r] < 0.
Var gather_rows(Var x, std::vector<long> index);
Var concat_rows(const std::vector<Var>& parts);
Var slice_cols(Var x, std::size_t begin, std::size_t count);
Var concat_cols(const std::vector<Var>& parts);

// One input channel -> C output channels, kernel k (odd), zero "same" padding
// along the voxel axis. x: batch x n, weight: C x k, bias: C.
// Returns (batch*C) x n with row b*C + c holding channel c of sample b.
Var conv1d_same(Var x, Var weight, Var bias);
// 1x1 convolution C -> 1: out[b][j] = sum_c w[c] y[b*C + c][j] + bias[0].
Var channel_mix(Var y, Var weight, Var bias, std::size_t channels);

Var sum(Var x);
Var sum_squares(Var x);
// (1/rows) * sum of squared entries: mean over rows of the squared row norm.
Var mean_row_sq_norm(Var x);

}  // namespace lea::ops
