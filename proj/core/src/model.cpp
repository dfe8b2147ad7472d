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

#include "boltzgate/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "boltzgate/ops.hpp"

namespace boltzgate::model {
namespace {

Tensor normal_tensor(Shape shape, double variance, RandomStream& rng) {
  Tensor t(std::move(shape));
  const double sd = std::sqrt(variance);
  for (auto& v : t.data()) v = rng.normal(0.0, sd);
  return t;
}

// Hands out dropout masks, replaying recorded ones before drawing new ones.
class DropoutSource {
 public:
  DropoutSource(const ForwardOptions& opts, std::size_t first) : opts_(opts), cursor_(first) {}

  Var apply(Var x, double rate) {
    if (!opts_.training || rate <= 0.0) return x;
    Tensor mask;
    ForwardRandomness* rec = opts_.randomness;
    if (rec && cursor_ < rec->dropout_masks.size()) {
      mask = rec->dropout_masks[cursor_];
      require_same_shape(mask, x.value(), "replayed dropout mask");
    } else {
      if (!opts_.rng) throw std::invalid_argument("dropout requires a random stream");
      mask = Tensor(x.shape());
      const double keep = 1.0 - rate;
      for (auto& v : mask.data()) v = opts_.rng->uniform() < keep ? 1.0 / keep : 0.0;
      if (rec) rec->dropout_masks.push_back(mask);
    }
    ++cursor_;
    return ops::mul_const(x, mask);
  }

 private:
  const ForwardOptions& opts_;
  std::size_t cursor_;
};

const sampler::GumbelNoise* layer_noise(const ForwardOptions& opts, std::size_t layer,
                                        const Shape& shape,
                                        std::vector<sampler::GumbelNoise>& local) {
  ForwardRandomness* rec = opts.randomness;
  if (rec && layer < rec->gumbel.size()) {
    require_same_shape(rec->gumbel[layer].g0, Tensor(shape), "replayed gumbel noise");
    return &rec->gumbel[layer];
  }
  if (!opts.rng) throw std::invalid_argument("Gumbel gating requires a random stream");
  sampler::GumbelNoise noise = sampler::draw_noise(shape, *opts.rng);
  if (rec) {
    rec->gumbel.push_back(std::move(noise));
    return &rec->gumbel.back();
  }
  local.push_back(std::move(noise));
  return &local.back();
}

Var linear(Var x, Var w, Var b) { return ops::add_row_bias(ops::matmul(x, w), b); }

// [frames x width] with ones on valid frames.
Tensor frame_rows(const energy::KeyMask& mask, std::size_t width) {
  Tensor keep({mask.size(), width});
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i] != 0.0)
      for (std::size_t c = 0; c < width; ++c) keep.at(i, c) = 1.0;
  return keep;
}

}  // namespace

void ModelConfig::validate() const {
  if (vocab_size != kVocabSize) throw std::invalid_argument("vocab_size must be 6");
  if (max_len == 0) throw std::invalid_argument("max_len must be positive");
  if (d_model == 0 || heads == 0 || d_model % heads != 0)
    throw std::invalid_argument("d_model must be a positive multiple of the head count");
  if (num_layers == 0) throw std::invalid_argument("num_layers must be positive");
  if (ffn_dim == 0) throw std::invalid_argument("ffn_dim must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw std::invalid_argument("dropout must lie in [0, 1)");
  if (kernel == 0 || stride == 0) throw std::invalid_argument("kernel and stride must be positive");
  if (max_len % stride != 0) throw std::invalid_argument("max_len must be divisible by stride");
  if (d_model < 2) throw std::invalid_argument("d_model must be at least 2");
  solver.validate();
}

std::string layer_prefix(std::size_t layer) { return "layer" + std::to_string(layer) + "."; }

ParameterSet init_parameters(const ModelConfig& cfg, RandomStream& rng) {
  cfg.validate();
  const std::size_t d = cfg.d_model, f = cfg.frames(), hd = d / 2;
  const double inv_d = 1.0 / static_cast<double>(d);
  ParameterSet p;
  p.add("embed.table", normal_tensor({cfg.vocab_size, d}, inv_d, rng));
  p.add("conv.weight",
        normal_tensor({cfg.kernel, d, d}, inv_d, rng));
  p.add("conv.bias", Tensor({d}));
  p.add("pos.table", normal_tensor({f, d}, inv_d, rng));
  for (std::size_t l = 0; l < cfg.num_layers; ++l) {
    const std::string pre = layer_prefix(l);
    p.add(pre + "norm1.gamma", Tensor({d}, 1.0));
    p.add(pre + "norm1.beta", Tensor({d}));
    for (const char* name : {"q", "k", "v", "o"}) {
      p.add(pre + "attn.w" + name, normal_tensor({d, d}, inv_d, rng));
      p.add(pre + "attn.b" + name, Tensor({d}));
    }
    if (attention::is_structured(cfg.mode)) {
      p.add(pre + "energy.w_diag", Tensor({cfg.heads, cfg.head_dim()}));
      p.add(pre + "energy.w_lat", Tensor({cfg.heads, f, cfg.num_latent}));
      p.add(pre + "energy.b_lat", Tensor({cfg.heads, cfg.num_latent}));
      p.add(pre + "energy.c_lat", Tensor::scalar(cfg.c_lat_init));
    }
    p.add(pre + "norm2.gamma", Tensor({d}, 1.0));
    p.add(pre + "norm2.beta", Tensor({d}));
    p.add(pre + "ffn.w1", normal_tensor({d, cfg.ffn_dim}, inv_d, rng));
    p.add(pre + "ffn.b1", Tensor({cfg.ffn_dim}));
    p.add(pre + "ffn.w2",
          normal_tensor({cfg.ffn_dim, d}, 1.0 / static_cast<double>(cfg.ffn_dim), rng));
    p.add(pre + "ffn.b2", Tensor({d}));
  }
  p.add("head.w1", normal_tensor({d, hd}, inv_d, rng));
  p.add("head.b1", Tensor({hd}));
  p.add("head.w2", normal_tensor({hd, 1}, 1.0 / static_cast<double>(hd), rng));
  p.add("head.b2", Tensor({1}));
  return p;
}

energy::KeyMask frame_mask(std::span<const std::uint8_t> token_mask, std::size_t stride,
                           std::size_t frames) {
  energy::KeyMask out(frames, 0.0);
  for (std::size_t i = 0; i < frames; ++i) {
    for (std::size_t j = i * stride; j < (i + 1) * stride && j < token_mask.size(); ++j) {
      if (token_mask[j]) {
        out[i] = 1.0;
        break;
      }
    }
  }
  return out;
}

Frontend embed_and_conv(const BoundParameters& p, std::span<const int> tokens,
                        std::span<const std::uint8_t> mask, const ModelConfig& cfg) {
  if (tokens.size() != cfg.max_len || mask.size() != cfg.max_len) {
    throw std::invalid_argument("expected " + std::to_string(cfg.max_len) +
                                " tokens, got " + std::to_string(tokens.size()));
  }
  for (int t : tokens) {
    if (t < 0 || static_cast<std::size_t>(t) >= cfg.vocab_size) {
      throw std::invalid_argument("invalid token " + std::to_string(t));
    }
  }
  const std::size_t d = cfg.d_model, frames = cfg.frames();
  Tensor token_keep({cfg.max_len, d});
  for (std::size_t i = 0; i < cfg.max_len; ++i)
    if (mask[i])
      for (std::size_t c = 0; c < d; ++c) token_keep.at(i, c) = 1.0;

  Var embedded = ops::mul_const(ops::embedding(p["embed.table"], tokens), token_keep);
  Var conv = ops::conv1d(embedded, p["conv.weight"], p["conv.bias"], cfg.stride, cfg.left_pad(),
                         frames);
  Frontend out;
  out.frame_mask = frame_mask(mask, cfg.stride, frames);
  out.features = ops::mul_const(ops::gelu(conv), frame_rows(out.frame_mask, d));
  return out;
}

Var add_positions(const BoundParameters& p, const Frontend& front, const ModelConfig& cfg,
                  const ForwardOptions& opts) {
  Var x = ops::mul_const(ops::add(front.features, p["pos.table"]),
                         frame_rows(front.frame_mask, cfg.d_model));
  DropoutSource dropout(opts, 0);
  return dropout.apply(x, cfg.dropout);
}

attention::AttentionWeights layer_attention(const BoundParameters& p, std::size_t layer,
                                            const ModelConfig& cfg) {
  const std::string pre = layer_prefix(layer) + "attn.";
  attention::AttentionWeights w{p[pre + "wq"], p[pre + "bq"], p[pre + "wk"], p[pre + "bk"],
                                p[pre + "wv"], p[pre + "bv"], p[pre + "wo"], p[pre + "bo"],
                                std::nullopt};
  if (attention::is_structured(cfg.mode)) {
    const std::string e = layer_prefix(layer) + "energy.";
    w.energy = energy::EnergyVars{p[e + "w_diag"], p[e + "w_lat"], p[e + "b_lat"], p[e + "c_lat"]};
  }
  return w;
}

Encoded encoder_forward(const BoundParameters& p, Var features, const energy::KeyMask& frame_mask,
                        const ModelConfig& cfg, const ForwardOptions& opts) {
  Encoded out;
  Var x = features;
  // Mask 0 belongs to the embedding dropout.
  DropoutSource dropout(opts, opts.training && cfg.dropout > 0.0 ? 1 : 0);
  std::vector<sampler::GumbelNoise> local_noise;
  local_noise.reserve(cfg.num_layers);
  for (std::size_t l = 0; l < cfg.num_layers; ++l) {
    const std::string pre = layer_prefix(l);
    attention::AttentionWeights w = layer_attention(p, l, cfg);
    attention::GatingOptions gating;
    gating.mode = cfg.mode;
    gating.solver = cfg.solver;
    gating.solver.trace_free_energy = opts.trace_free_energy;
    if (attention::is_structured(cfg.mode) && opts.gumbel) {
      gating.gumbel = opts.gumbel;
      gating.noise = layer_noise(opts, l, {cfg.heads, cfg.frames(), cfg.frames()}, local_noise);
    }
    Var normed = ops::layer_norm(x, p[pre + "norm1.gamma"], p[pre + "norm1.beta"]);
    attention::AttentionOutput att = attention::attention_forward(normed, w, cfg.heads, gating,
                                                                  frame_mask);
    x = ops::add(x, att.output);
    if (attention::is_structured(cfg.mode)) {
      out.layers.push_back(
          LayerStructure{att.h, att.coupling, att.s, att.r, att.gates, *w.energy, att.trace});
    }
    Var n2 = ops::layer_norm(x, p[pre + "norm2.gamma"], p[pre + "norm2.beta"]);
    Var hidden = ops::gelu(linear(n2, p[pre + "ffn.w1"], p[pre + "ffn.b1"]));
    hidden = dropout.apply(hidden, cfg.dropout);
    x = ops::add(x, linear(hidden, p[pre + "ffn.w2"], p[pre + "ffn.b2"]));
  }
  out.hidden = x;
  return out;
}

Var pool_and_classify(const BoundParameters& p, Var hidden, const energy::KeyMask& frame_mask,
                      const ModelConfig& cfg) {
  (void)cfg;
  if (std::none_of(frame_mask.begin(), frame_mask.end(), [](double m) { return m != 0.0; })) {
    throw std::invalid_argument("cannot pool a sequence with no valid frames");
  }
  Var pooled = ops::masked_mean_rows(hidden, frame_mask);
  Var row = ops::reshape(pooled, {1, pooled.shape()[0]});
  Var h1 = ops::gelu(linear(row, p["head.w1"], p["head.b1"]));
  Var logit = linear(h1, p["head.w2"], p["head.b2"]);
  return ops::reshape(logit, {});
}

ForwardResult forward(const BoundParameters& p, std::span<const int> tokens,
                      std::span<const std::uint8_t> mask, const ModelConfig& cfg,
                      const ForwardOptions& opts) {
  Frontend front = embed_and_conv(p, tokens, mask, cfg);
  Encoded enc = encoder_forward(p, add_positions(p, front, cfg, opts), front.frame_mask, cfg, opts);
  ForwardResult out;
  out.logit = pool_and_classify(p, enc.hidden, front.frame_mask, cfg);
  out.frame_mask = std::move(front.frame_mask);
  out.layers = std::move(enc.layers);
  return out;
}

}  // namespace boltzgate::model
