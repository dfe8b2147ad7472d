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

#include <cmath>
#include <string>
#include <vector>

#include "boltzgate/model.hpp"
#include "boltzgate/ops.hpp"
#include "doctest.h"
#include "support/check.hpp"
#include "support/reference.hpp"

using namespace boltzgate;
using attention::AttentionMode;
namespace reference = boltzgate::testing::reference;

namespace {

model::ModelConfig small_config(AttentionMode mode, std::size_t max_len = 40) {
  model::ModelConfig c;
  c.max_len = max_len;
  c.d_model = 8;
  c.heads = 2;
  c.num_layers = 2;
  c.ffn_dim = 12;
  c.num_latent = 3;
  c.kernel = 7;
  c.stride = 5;
  c.dropout = 0.0;
  c.mode = mode;
  return c;
}

// Initialised parameters with every tensor moved off its initial value.
ParameterSet jittered(const model::ModelConfig& cfg, std::uint64_t seed) {
  RandomStream rng(seed);
  ParameterSet p = model::init_parameters(cfg, rng);
  for (auto& [name, t] : p.entries()) {
    const bool energy = name.find(".energy.") != std::string::npos;
    for (auto& v : t.data()) v += energy ? rng.uniform() - 0.5 : 0.1 * rng.normal();
  }
  return p;
}

struct Sequence {
  std::vector<int> tokens;
  std::vector<std::uint8_t> mask;
};

Sequence sequence(std::size_t length, std::size_t max_len, std::uint64_t seed) {
  RandomStream rng(seed);
  Sequence s{std::vector<int>(max_len, model::kPadToken), std::vector<std::uint8_t>(max_len, 0)};
  for (std::size_t i = 0; i < length; ++i) {
    s.tokens[i] = static_cast<int>(rng.index(5));
    s.mask[i] = 1;
  }
  return s;
}

double logit_of(const ParameterSet& params, const model::ModelConfig& cfg, const Sequence& seq,
                const model::ForwardOptions& opts = {}) {
  Tape tape;
  BoundParameters bound(tape, params, false);
  return model::forward(bound, seq.tokens, seq.mask, cfg, opts).logit.item();
}

}  // namespace

TEST_CASE("config validation") {
  auto c = small_config(AttentionMode::kBmSoft);
  CHECK_NOTHROW(c.validate());
  CHECK(model::ModelConfig{}.frames() == 100);
  c.max_len = 42;
  CHECK_THROWS(c.validate());
  c = small_config(AttentionMode::kBmSoft);
  c.heads = 3;
  CHECK_THROWS(c.validate());
  c = small_config(AttentionMode::kBmSoft);
  c.dropout = 1.0;
  CHECK_THROWS(c.validate());
}

TEST_CASE("initialisation") {
  model::ModelConfig cfg;
  RandomStream rng(0);
  const ParameterSet p = model::init_parameters(cfg, rng);
  CHECK(p.get("pos.table").shape() == Shape{100, 128});
  CHECK(p.get("embed.table").shape() == Shape{6, 128});
  CHECK(p.get("layer2.energy.w_lat").shape() == Shape{4, 100, 16});
  CHECK(p.get("layer0.energy.c_lat").item() == 0.5);
  for (const char* name : {"layer0.energy.w_diag", "layer1.energy.w_lat", "layer2.energy.b_lat",
                           "head.b2", "layer0.attn.bq"})
    for (double v : p.get(name).data()) CHECK(v == 0.0);
  for (double v : p.get("layer1.norm2.gamma").data()) CHECK(v == 1.0);
  const Tensor& wq = p.get("layer0.attn.wq");
  double var = 0.0;
  for (double v : wq.data()) var += v * v / static_cast<double>(wq.size());
  CHECK(var == doctest::Approx(1.0 / 128).epsilon(0.05));

  cfg.mode = AttentionMode::kSoftmax;
  RandomStream rng2(0);
  CHECK_FALSE(model::init_parameters(cfg, rng2).contains("layer0.energy.w_diag"));
}

TEST_CASE("frame mask") {
  std::vector<std::uint8_t> mask(500, 0);
  for (std::size_t i = 0; i < 5; ++i) mask[i] = 1;
  const auto frames = model::frame_mask(mask, 5, 100);
  CHECK(frames[0] == 1.0);
  for (std::size_t i = 1; i < 100; ++i) CHECK(frames[i] == 0.0);
  mask[5] = 1;
  CHECK(model::frame_mask(mask, 5, 100)[1] == 1.0);
}

TEST_CASE("front end") {
  const auto cfg = small_config(AttentionMode::kBmSoft);
  ParameterSet params = jittered(cfg, 1);
  SUBCASE("all padding") {
    const Sequence seq = sequence(0, cfg.max_len, 2);
    Tape tape;
    BoundParameters bound(tape, params, false);
    const auto front = model::embed_and_conv(bound, seq.tokens, seq.mask, cfg);
    for (double m : front.frame_mask) CHECK(m == 0.0);
    for (double v : front.features.value().data()) CHECK(v == 0.0);
    CHECK_THROWS_WITH(logit_of(params, cfg, seq), doctest::Contains("no valid frames"));
  }
  SUBCASE("zero convolution") {
    for (auto& v : params.get("conv.weight").data()) v = 0.0;
    for (auto& v : params.get("conv.bias").data()) v = 0.0;
    const Sequence seq = sequence(33, cfg.max_len, 3);
    Tape tape;
    BoundParameters bound(tape, params, false);
    const auto front = model::embed_and_conv(bound, seq.tokens, seq.mask, cfg);
    for (double v : front.features.value().data()) CHECK(v == 0.0);
  }
  SUBCASE("invalid token") {
    Sequence seq = sequence(10, cfg.max_len, 4);
    seq.tokens[3] = 6;
    CHECK_THROWS_WITH(logit_of(params, cfg, seq), doctest::Contains("invalid token"));
    seq.tokens[3] = 0;
    seq.tokens.pop_back();
    seq.mask.pop_back();
    CHECK_THROWS(logit_of(params, cfg, seq));
  }
}

TEST_CASE("zero residual branches make the encoder an identity") {
  for (auto mode : {AttentionMode::kSoftmax, AttentionMode::kBmSoft, AttentionMode::kBmHard}) {
    const auto cfg = small_config(mode);
    ParameterSet params = jittered(cfg, 5);
    for (auto& [name, t] : params.entries())
      if (name.ends_with("attn.wo") || name.ends_with("attn.bo") || name.ends_with("ffn.w2") ||
          name.ends_with("ffn.b2"))
        for (auto& v : t.data()) v = 0.0;
    const Sequence seq = sequence(31, cfg.max_len, 6);
    Tape tape;
    BoundParameters bound(tape, params, false);
    RandomStream rng(7);
    model::ForwardOptions opts;
    opts.rng = &rng;
    if (mode == AttentionMode::kBmHard) opts.gumbel = sampler::GumbelConfig{0.5, true};
    const auto front = model::embed_and_conv(bound, seq.tokens, seq.mask, cfg);
    Var x = model::add_positions(bound, front, cfg, opts);
    const auto enc = model::encoder_forward(bound, x, front.frame_mask, cfg, opts);
    CHECK(enc.hidden.shape() == Shape{cfg.frames(), cfg.d_model});
    CHECK(max_abs_diff(enc.hidden.value(), x.value()) == 0.0);
    CHECK(enc.layers.size() == (mode == AttentionMode::kSoftmax ? 0 : cfg.num_layers));
  }
}

TEST_CASE("softmax encoder matches a directly assembled encoder") {
  const auto cfg = small_config(AttentionMode::kSoftmax);
  const ParameterSet params = jittered(cfg, 8);
  const Sequence seq = sequence(28, cfg.max_len, 9);
  Tape tape;
  BoundParameters bound(tape, params, false);
  const auto front = model::embed_and_conv(bound, seq.tokens, seq.mask, cfg);
  Var x0 = model::add_positions(bound, front, cfg, {});
  const auto enc = model::encoder_forward(bound, x0, front.frame_mask, cfg, {});

  Tensor x = x0.value();
  for (std::size_t l = 0; l < cfg.num_layers; ++l) {
    const std::string pre = model::layer_prefix(l);
    auto g = [&](const std::string& n) { return params.get(pre + n); };
    std::vector<Tensor> w;
    for (const char* n : {"wq", "bq", "wk", "bk", "wv", "bv", "wo", "bo"})
      w.push_back(g(std::string("attn.") + n));
    const Tensor att =
        reference::softmax_layer(reference::layer_norm(x, g("norm1.gamma"), g("norm1.beta")), w,
                                 cfg.heads, front.frame_mask);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += att[i];
    Tensor hidden = reference::linear(reference::layer_norm(x, g("norm2.gamma"), g("norm2.beta")),
                                      g("ffn.w1"), g("ffn.b1"));
    for (auto& v : hidden.data()) v = reference::gelu(v);
    const Tensor ffn = reference::linear(hidden, g("ffn.w2"), g("ffn.b2"));
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += ffn[i];
  }
  CHECK(max_abs_diff(enc.hidden.value(), x) <= 1e-10);
}

TEST_CASE("pooling and head") {
  const auto cfg = small_config(AttentionMode::kSoftmax);
  ParameterSet params = jittered(cfg, 10);
  RandomStream rng(11);
  const Tensor hidden = boltzgate::testing::uniform_tensor({cfg.frames(), cfg.d_model}, rng);
  auto pooled_logit = [&](const energy::KeyMask& mask) {
    Tape tape;
    BoundParameters bound(tape, params, false);
    return model::pool_and_classify(bound, tape.constant(hidden), mask, cfg).item();
  };
  auto head_of = [&](const std::vector<double>& row) {
    Tensor r({1, cfg.d_model}, std::vector<double>(row));
    Tensor h1 = reference::linear(r, params.get("head.w1"), params.get("head.b1"));
    for (auto& v : h1.data()) v = reference::gelu(v);
    return reference::linear(h1, params.get("head.w2"), params.get("head.b2"))[0];
  };
  std::vector<double> mean(cfg.d_model, 0.0), third(cfg.d_model);
  for (std::size_t i = 0; i < cfg.frames(); ++i)
    for (std::size_t c = 0; c < cfg.d_model; ++c) mean[c] += hidden.at(i, c) / cfg.frames();
  for (std::size_t c = 0; c < cfg.d_model; ++c) third[c] = hidden.at(3, c);
  CHECK(std::abs(pooled_logit(energy::all_valid(cfg.frames())) - head_of(mean)) <= 1e-12);
  energy::KeyMask only(cfg.frames(), 0.0);
  only[3] = 1.0;
  CHECK(std::abs(pooled_logit(only) - head_of(third)) <= 1e-12);

  for (auto* n : {"head.w1", "head.b1", "head.w2"})
    for (auto& v : params.get(n).data()) v = 0.0;
  params.get("head.b2")[0] = -0.37;
  CHECK(pooled_logit(energy::all_valid(cfg.frames())) == -0.37);
  CHECK_THROWS(pooled_logit(energy::KeyMask(cfg.frames(), 0.0)));
}

TEST_CASE("forward is deterministic under a seed") {
  for (auto mode : {AttentionMode::kSoftmax, AttentionMode::kBmSoft, AttentionMode::kBmHard}) {
    auto cfg = small_config(mode);
    cfg.dropout = 0.2;
    const ParameterSet params = jittered(cfg, 12);
    const Sequence seq = sequence(36, cfg.max_len, 13);
    auto run = [&] {
      RandomStream rng(14);
      model::ForwardOptions opts;
      opts.training = true;
      opts.rng = &rng;
      if (mode != AttentionMode::kSoftmax) opts.gumbel = sampler::GumbelConfig{0.7, mode == AttentionMode::kBmHard};
      return logit_of(params, cfg, seq, opts);
    };
    CHECK(run() == run());
    CHECK(logit_of(params, cfg, seq) == logit_of(params, cfg, seq));
  }
}

TEST_CASE("recorded randomness replays exactly") {
  auto cfg = small_config(AttentionMode::kBmHard);
  cfg.dropout = 0.3;
  const ParameterSet params = jittered(cfg, 15);
  const Sequence seq = sequence(40, cfg.max_len, 16);
  model::ForwardRandomness rec;
  RandomStream rng(17);
  model::ForwardOptions opts;
  opts.training = true;
  opts.rng = &rng;
  opts.gumbel = sampler::GumbelConfig{0.5, true};
  opts.randomness = &rec;
  const double first = logit_of(params, cfg, seq, opts);
  CHECK(rec.gumbel.size() == cfg.num_layers);
  CHECK(rec.dropout_masks.size() == 1 + cfg.num_layers);
  opts.rng = nullptr;
  CHECK(logit_of(params, cfg, seq, opts) == first);
}

TEST_CASE("gradient of the classification loss matches finite differences") {
  for (auto mode : {AttentionMode::kSoftmax, AttentionMode::kBmSoft}) {
    CAPTURE(attention::to_string(mode));
    model::ModelConfig cfg = small_config(mode, 20);
    cfg.num_layers = 1;
    cfg.num_latent = 2;
    cfg.solver.iterations = 2;
    const ParameterSet params = jittered(cfg, 18);
    const Sequence seq = sequence(14, cfg.max_len, 19);
    RandomStream noise_rng(20);
    const auto noise = sampler::draw_noise({2, 4, 4}, noise_rng);
    auto loss = [&](const ParameterSet& p, ParameterSet* grads) {
      Tape tape;
      BoundParameters bound(tape, p, grads != nullptr);
      model::ForwardRandomness rec;
      rec.gumbel.push_back(noise);
      model::ForwardOptions opts;
      opts.randomness = &rec;
      if (mode != AttentionMode::kSoftmax) opts.gumbel = sampler::GumbelConfig{1.0, false};
      Var l = ops::bce_with_logits(model::forward(bound, seq.tokens, seq.mask, cfg, opts).logit, 1.0);
      if (grads) {
        tape.backward(l);
        *grads = bound.gradients();
      }
      return l.item();
    };
    ParameterSet grads;
    loss(params, &grads);
    const std::vector<double> theta = params.flatten();
    const auto numeric = finite_diff_gradient(
        [&](std::span<const double> t) {
          ParameterSet p = params;
          p.assign_flat(t);
          return loss(p, nullptr);
        },
        theta);
    const std::vector<double> analytic = grads.flatten();
    double worst = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i)
      worst = std::max(worst, relative_error(analytic[i], numeric[i], 1e-6));
    CHECK(worst <= 1e-4);
  }
}

TEST_CASE("structured mode differs from softmax through its aggregation") {
  const auto soft_cfg = small_config(AttentionMode::kSoftmax);
  const auto bm_cfg = small_config(AttentionMode::kBmSoft);
  RandomStream rng(21);
  ParameterSet bm = model::init_parameters(bm_cfg, rng);
  ParameterSet sm;
  for (const auto& [name, t] : bm.entries())
    if (name.find(".energy.") == std::string::npos) sm.add(name, t);
  const Sequence seq = sequence(40, bm_cfg.max_len, 22);
  CHECK(logit_of(sm, soft_cfg, seq) != logit_of(bm, bm_cfg, seq));
}

TEST_CASE("padding never changes the logit") {
  for (auto mode : {AttentionMode::kSoftmax, AttentionMode::kBmSoft}) {
    CAPTURE(attention::to_string(mode));
    const auto long_cfg = small_config(mode, 100);
    const auto short_cfg = small_config(mode, 50);
    const ParameterSet long_params = jittered(long_cfg, 23);
    // The short model keeps the first frames' position-indexed parameters.
    ParameterSet short_params;
    for (const auto& [name, t] : long_params.entries()) {
      if (name == "pos.table") {
        Tensor cut({short_cfg.frames(), t.dim(1)});
        std::copy_n(t.data().begin(), cut.size(), cut.data().begin());
        short_params.add(name, cut);
      } else if (name.ends_with("energy.w_lat")) {
        Tensor cut({t.dim(0), short_cfg.frames(), t.dim(2)});
        for (std::size_t h = 0; h < t.dim(0); ++h)
          for (std::size_t s = 0; s < short_cfg.frames(); ++s)
            for (std::size_t m = 0; m < t.dim(2); ++m) cut.at(h, s, m) = t.at(h, s, m);
        short_params.add(name, cut);
      } else {
        short_params.add(name, t);
      }
    }
    for (std::size_t length : {1u, 17u, 43u, 50u}) {
      Sequence a = sequence(length, 50, 24 + length);
      Sequence b = a;
      b.tokens.resize(100, model::kPadToken);
      b.mask.resize(100, 0);
      const double la = logit_of(short_params, short_cfg, a);
      CHECK(std::abs(la - logit_of(long_params, long_cfg, b)) <= 1e-10);
      // Whatever sits under a zero mask is ignored.
      RandomStream rng(length);
      for (std::size_t i = length; i < 100; ++i) b.tokens[i] = static_cast<int>(rng.index(6));
      CHECK(std::abs(la - logit_of(long_params, long_cfg, b)) <= 1e-10);
    }
  }
}
