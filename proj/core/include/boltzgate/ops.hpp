// Copyright 2026 The BoltzGate Authors. All Rights Reserved.
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

#include <span>

#include "boltzgate/tape.hpp"
#include "boltzgate/tensor.hpp"

// Differentiable primitives over Tape values. Every op checks shapes and
// throws ShapeError on disagreement; gradients are exact for the forward
// computation performed.
namespace boltzgate::ops {

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var neg(Var a);
Var scale(Var a, double c);
/// a * c for a scalar variable c.
Var scale_by(Var a, Var c);
Var add_scalar(Var a, double c);
Var add_const(Var a, const Tensor& c);
Var mul_const(Var a, const Tensor& c);

Var sum(Var a);
Var sigmoid(Var a);
Var log(Var a);
Var gelu(Var a);
Var relu(Var a);
/// Clamp to [lo, hi]; gradient passes only where the input is inside the range.
Var clamp(Var a, double lo, double hi);

/// Rank-2 product op(a) * op(b).
Var matmul(Var a, Var b, bool trans_a = false, bool trans_b = false);
/// Rank-3 batched product over the leading axis.
Var bmm(Var a, Var b, bool trans_a = false, bool trans_b = false);

/// Adds `bias` (shape [n]) along the last axis of `x`.
Var add_row_bias(Var x, Var bias);
/// x [B x T x M] + bias [B x M] broadcast over T.
Var add_batch_bias(Var x, Var bias);

Var layer_norm(Var x, Var gamma, Var beta, double eps = 1e-5);
Var embedding(Var table, std::span<const int> tokens);

/// 1-D convolution over rows of x [L x C_in] with weight [k x C_in x C_out].
/// Output row i reads input rows i*stride - left_pad + j, zero outside [0, L).
Var conv1d(Var x, Var weight, Var bias, std::size_t stride, std::size_t left_pad,
           std::size_t out_len);

/// [T x (H*d)] -> [H x T x d]
Var split_heads(Var x, std::size_t heads);
/// [H x T x d] -> [T x (H*d)]
Var merge_heads(Var x);
Var reshape(Var x, Shape shape);
Var softmax_last(Var x);

/// Weighted mean of the rows of x [n x d] with weights in {0,1}; returns [d].
Var masked_mean_rows(Var x, std::span<const double> row_mask);

/// Binary cross-entropy of a single logit in the stable softplus form.
Var bce_with_logits(Var logit, double label);

}  // namespace boltzgate::ops
