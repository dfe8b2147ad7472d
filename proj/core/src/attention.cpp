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

#include "boltzgate/attention.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "boltzgate/numerics.hpp"
#include "boltzgate/ops.hpp"

namespace boltzgate::attention {

std::string to_string(AttentionMode mode) {
  switch (mode) {
    case AttentionMode::kSoftmax: return "softmax";
    case AttentionMode::kBmSoft: return "bm_soft";
    case AttentionMode::kBmHard: return "bm_hard";
  }
  return "unknown";
}

AttentionMode parse_mode(std::string_view text) {
  if (text == "softmax") return AttentionMode::kSoftmax;
  if (text == "bm_soft") return AttentionMode::kBmSoft;
  if (text == "bm_hard") return AttentionMode::kBmHard;
  throw std::invalid_argument("unknown attention mode '" + std::string(text) +
                              "' (expected softmax, bm_soft or bm_hard)");
}

bool is_structured(AttentionMode mode) { return mode != AttentionMode::kSoftmax; }

HeadProjections project_qkv(Var x, const AttentionWeights& w, std::size_t heads) {
  const std::size_t width = x.shape().at(1);
  if (heads == 0 || width % heads != 0) {
    throw std::invalid_argument("d_model " + std::to_string(width) +
                                " is not divisible by the head count " + std::to_string(heads));
  }
  auto project = [&](Var weight, Var bias) {
    return ops::split_heads(ops::add_row_bias(ops::matmul(x, weight), bias), heads);
  };
  return HeadProjections{project(w.wq, w.bq), project(w.wk, w.bk), project(w.wv, w.bv)};
}

Var softmax_attention(Var q, Var k, Var v, const energy::KeyMask& mask) {
  if (std::none_of(mask.begin(), mask.end(), [](double m) { return m != 0.0; })) {
    throw std::invalid_argument("softmax attention needs at least one unmasked key");
  }
  Var scores = energy::bias_field(q, k, mask);
  return ops::bmm(ops::softmax_last(scores), v);
}

Var gated_aggregate(Var gates, Var v, double eps) {
  const Tensor& g = gates.value();
  const Tensor& vv = v.value();
  if (g.rank() != 3 || vv.rank() != 3 || g.dim(0) != vv.dim(0) || g.dim(2) != vv.dim(1)) {
    throw ShapeError("gated_aggregate: gates " + shape_to_string(g.shape()) +
                     " incompatible with values " + shape_to_string(vv.shape()));
  }
  const std::size_t heads = g.dim(0), rows = g.dim(1), keys = g.dim(2), d = vv.dim(2);
  Tensor out({heads, rows, d});
  Tensor denom({heads, rows});
  for (std::size_t h = 0; h < heads; ++h) {
    for (std::size_t t = 0; t < rows; ++t) {
      double total = eps;
      for (std::size_t s = 0; s < keys; ++s) total += g.at(h, t, s);
      denom.at(h, t) = total;
      for (std::size_t s = 0; s < keys; ++s) {
        const double w = g.at(h, t, s);
        if (w == 0.0) continue;
        for (std::size_t c = 0; c < d; ++c) out.at(h, t, c) += w * vv.at(h, s, c);
      }
      for (std::size_t c = 0; c < d; ++c) out.at(h, t, c) /= total;
    }
  }
  Tensor o = out;
  return gates.tape().record(
      std::move(out), {gates, v},
      [gates, v, o, denom, heads, rows, keys, d](Tape& tape, const Tensor& go) {
        Tensor* gg = tape.grad_target(gates);
        Tensor* gv = tape.grad_target(v);
        const Tensor& g = gates.value();
        const Tensor& vv = v.value();
        for (std::size_t h = 0; h < heads; ++h) {
          for (std::size_t t = 0; t < rows; ++t) {
            const double inv = 1.0 / denom.at(h, t);
            for (std::size_t s = 0; s < keys; ++s) {
              if (gg) {
                double acc = 0.0;
                for (std::size_t c = 0; c < d; ++c)
                  acc += go.at(h, t, c) * (vv.at(h, s, c) - o.at(h, t, c));
                gg->at(h, t, s) += acc * inv;
              }
              if (gv) {
                const double w = g.at(h, t, s) * inv;
                if (w == 0.0) continue;
                for (std::size_t c = 0; c < d; ++c) gv->at(h, s, c) += w * go.at(h, t, c);
              }
            }
          }
        }
      });
}

AttentionOutput attention_forward(Var x, const AttentionWeights& w, std::size_t heads,
                                  const GatingOptions& opts, const energy::KeyMask& mask) {
  HeadProjections p = project_qkv(x, w, heads);
  AttentionOutput out;
  Var mixed;
  if (!is_structured(opts.mode)) {
    mixed = softmax_attention(p.q, p.k, p.v, mask);
  } else {
    if (!w.energy) throw std::invalid_argument("structured attention requires energy parameters");
    out.h = energy::bias_field(p.q, p.k, mask);
    out.coupling = energy::pair_coupling(p.k, w.energy->w_diag, mask);
    meanfield::SolveResult solved =
        meanfield::solve(out.h, out.coupling, *w.energy, opts.solver, mask);
    out.s = solved.s;
    out.r = solved.r;
    out.trace = solved.trace;
    if (opts.gumbel) {
      if (!opts.noise) throw std::invalid_argument("Gumbel gating requires a noise sample");
      out.gates = sampler::gumbel_sample(out.s, *opts.gumbel, *opts.noise, mask);
    } else {
      out.gates = out.s;
    }
    mixed = gated_aggregate(out.gates, p.v);
  }
  out.output = ops::add_row_bias(ops::matmul(ops::merge_heads(mixed), w.wo), w.bo);
  return out;
}

}  // namespace boltzgate::attention
