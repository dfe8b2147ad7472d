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
#include <vector>

#include "boltzgate/energy.hpp"
#include "boltzgate/oracle.hpp"
#include "boltzgate/ops.hpp"
#include "boltzgate/sampler.hpp"
#include "doctest.h"
#include "support/check.hpp"

using namespace boltzgate;
using boltzgate::testing::uniform_tensor;

namespace {

sampler::GumbelConfig gumbel(double tau, bool hard = false) {
  sampler::GumbelConfig c;
  c.tau = tau;
  c.hard = hard;
  return c;
}

Tensor filled(double v, std::size_t n = 1) { return Tensor({1, 1, n}, v); }

std::size_t hamming(const Tensor& a, const Tensor& b) {
  std::size_t d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] >= 0.5) != (b[i] >= 0.5);
  return d;
}

}  // namespace

TEST_CASE("gate logits") {
  auto [a0, a1] = sampler::gate_logits(filled(0.5));
  CHECK(a0[0] == doctest::Approx(-std::log(2.0)).epsilon(1e-15));
  CHECK(a1[0] == a0[0]);
  auto [b0, b1] = sampler::gate_logits(filled(0.75));
  CHECK(b1[0] == doctest::Approx(std::log(0.75)).epsilon(1e-15));
  CHECK(b0[0] == doctest::Approx(std::log(0.25)).epsilon(1e-15));
  auto [c0, c1] = sampler::gate_logits(filled(0.0));
  CHECK(std::isfinite(c0[0]));
  CHECK(std::isfinite(c1[0]));
}

TEST_CASE("soft samples") {
  const auto mask = energy::all_valid(1);
  const auto zero = sampler::zero_noise({1, 1, 1});
  for (double tau : {0.1, 1.0, 5.0})
    CHECK(sampler::gumbel_soft_sample(filled(0.5), gumbel(tau), zero, mask)[0] ==
          doctest::Approx(0.5).epsilon(1e-15));
  CHECK(sampler::gumbel_soft_sample(filled(0.9), gumbel(0.01), zero, mask)[0] >= 0.999);
  CHECK_THROWS(sampler::gumbel_soft_sample(filled(0.5), gumbel(0.0), zero, mask));
  CHECK_THROWS(sampler::gumbel_soft_sample(filled(0.5), gumbel(11.0), zero, mask));
}

TEST_CASE("hard samples") {
  const auto mask = energy::all_valid(1);
  RandomStream rng(1);
  for (int i = 0; i < 500; ++i) {
    sampler::GumbelNoise n = sampler::zero_noise({1, 1, 1});
    n.g0[0] = 6.0 * (rng.uniform() - 0.5);
    n.g1[0] = n.g0[0] + 12.0 * (rng.uniform() - 0.5) * 0.999;
    CHECK(sampler::gumbel_hard_sample(filled(0.999), gumbel(1.0, true), n, mask)[0] == 1.0);
  }
  CHECK(sampler::gumbel_hard_sample(filled(0.5), gumbel(1.0, true), sampler::zero_noise({1, 1, 1}),
                                    mask)[0] == 1.0);
}

TEST_CASE("hard sample frequency equals s") {
  const std::size_t n = 100000;
  RandomStream rng(2);
  for (double p : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    const Tensor s({1, 1, n}, p);
    const auto noise = sampler::draw_noise(s.shape(), rng);
    const Tensor g = sampler::gumbel_hard_sample(s, gumbel(1.0, true), noise, energy::all_valid(n));
    double ones = 0.0;
    for (double v : g.data()) ones += v;
    const double sd = std::sqrt(n * p * (1.0 - p));
    CAPTURE(p);
    CHECK(std::abs(ones - n * p) <= 3.0 * sd);
  }
}

TEST_CASE("straight-through gradient equals the soft gradient") {
  RandomStream rng(3);
  const Tensor s = uniform_tensor({2, 3, 4}, rng, 0.05, 0.95);
  const auto noise = sampler::draw_noise(s.shape(), rng);
  const auto mask = energy::all_valid(4);
  auto grad = [&](bool hard) {
    Tape tape;
    Var sv = tape.variable(s);
    Var out = ops::sum(sampler::gumbel_sample(sv, gumbel(0.7, hard), noise, mask));
    tape.backward(out);
    return tape.grad(sv);
  };
  CHECK(max_abs_diff(grad(true), grad(false)) == 0.0);
  Tape tape;
  Var hard = sampler::gumbel_hard_sample(tape.constant(s), gumbel(0.7, true), noise, mask);
  for (double v : hard.value().data()) CHECK((v == 0.0 || v == 1.0));
}

TEST_CASE("soft sample gradient matches finite differences") {
  RandomStream rng(4);
  const Tensor s = uniform_tensor({1, 2, 3}, rng, 0.05, 0.95);
  const auto noise = sampler::draw_noise(s.shape(), rng);
  const Tensor w = uniform_tensor(s.shape(), rng);
  auto build = [&](Tape&, const std::vector<Var>& in) {
    return ops::sum(ops::mul_const(
        sampler::gumbel_soft_sample(in[0], gumbel(0.8), noise, energy::all_valid(3)), w));
  };
  CHECK(boltzgate::testing::max_gradient_error(build, {s}) <= 1e-4);
}

TEST_CASE("soft sample antisymmetry") {
  RandomStream rng(5);
  const auto mask = energy::all_valid(6);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor s = uniform_tensor({1, 1, 6}, rng, 0.01, 0.99);
    Tensor flipped = s;
    for (auto& v : flipped.data()) v = 1.0 - v;
    const auto noise = sampler::draw_noise(s.shape(), rng);
    const sampler::GumbelNoise swapped{noise.g1, noise.g0};
    const Tensor a = sampler::gumbel_soft_sample(s, gumbel(0.6), noise, mask);
    const Tensor b = sampler::gumbel_soft_sample(flipped, gumbel(0.6), swapped, mask);
    for (std::size_t i = 0; i < 6; ++i) CHECK(std::abs(a[i] - (1.0 - b[i])) <= 1e-12);
  }
}

TEST_CASE("lower temperature sharpens the sample") {
  RandomStream rng(6);
  const auto mask = energy::all_valid(20);
  const Tensor s = uniform_tensor({1, 1, 20}, rng, 0.01, 0.99);
  const auto noise = sampler::draw_noise(s.shape(), rng);
  Tensor prev({1, 1, 20}, 0.0);
  for (double tau : {1.0, 0.5, 0.1}) {
    const Tensor z = sampler::gumbel_soft_sample(s, gumbel(tau), noise, mask);
    for (std::size_t i = 0; i < 20; ++i) {
      const double conf = std::max(z[i], 1.0 - z[i]);
      CHECK(conf >= prev[i]);
      prev[i] = conf;
    }
  }
}

TEST_CASE("masked edges stay zero in every sampler") {
  RandomStream rng(7);
  const energy::KeyMask mask{1.0, 0.0, 1.0};
  Tensor s = uniform_tensor({2, 2, 3}, rng, 0.1, 0.9);
  for (std::size_t h = 0; h < 2; ++h)
    for (std::size_t t = 0; t < 2; ++t) s.at(h, t, 1) = 0.0;
  const auto noise = sampler::draw_noise(s.shape(), rng);
  const Tensor soft = sampler::gumbel_soft_sample(s, gumbel(0.5), noise, mask);
  const Tensor hard = sampler::gumbel_hard_sample(s, gumbel(0.5, true), noise, mask);
  sampler::NegativeSamplerConfig neg;
  neg.flip_fraction = 1.0;
  const auto pert = sampler::perturb_negative({s, Tensor({2, 2, 1}, 0.5)}, neg, rng, mask);
  for (std::size_t h = 0; h < 2; ++h)
    for (std::size_t t = 0; t < 2; ++t) {
      CHECK(soft.at(h, t, 1) == 0.0);
      CHECK(hard.at(h, t, 1) == 0.0);
      CHECK(pert.s.at(h, t, 1) == 0.0);
    }
}

TEST_CASE("perturbation") {
  const energy::KeyMask mask = energy::all_valid(5);
  SUBCASE("full flip gives the complement") {
    Tensor s({1, 1, 5});
    s[1] = s[3] = 1.0;
    sampler::NegativeSamplerConfig cfg;
    cfg.flip_fraction = 1.0;
    RandomStream rng(8);
    const auto neg = sampler::perturb_negative({s, Tensor({1, 1, 2}, 0.3)}, cfg, rng, mask);
    for (std::size_t i = 0; i < 5; ++i) CHECK((neg.s[i] >= 0.5) == (s[i] < 0.5));
    CHECK(neg.r[0] == 0.3);
  }
  SUBCASE("a tiny fraction flips exactly one edge") {
    sampler::NegativeSamplerConfig cfg;
    cfg.flip_fraction = 0.01;
    RandomStream rng(9);
    const Tensor s({1, 1, 5}, 0.8);
    CHECK(hamming(s, sampler::perturb_negative({s, Tensor({1, 1, 0})}, cfg, rng, mask).s) == 1);
  }
  SUBCASE("hamming distance is always ceil(rho * E)") {
    RandomStream rng(10);
    for (int run = 0; run < 1000; ++run) {
      const std::size_t keys = 2 + rng.index(7);
      energy::KeyMask m(keys, 1.0);
      m[rng.index(keys)] = 0.0;
      std::size_t edges = 0;
      for (double v : m) edges += v != 0.0;
      const std::size_t heads = 1 + rng.index(2), rows = 1 + rng.index(3);
      Tensor s = uniform_tensor({heads, rows, keys}, rng, 0.0, 1.0);
      for (std::size_t h = 0; h < heads; ++h)
        for (std::size_t t = 0; t < rows; ++t)
          for (std::size_t k = 0; k < keys; ++k)
            if (m[k] == 0.0) s.at(h, t, k) = 0.0;
      sampler::NegativeSamplerConfig cfg;
      cfg.flip_fraction = 0.05 + 0.95 * rng.uniform();
      const auto neg = sampler::perturb_negative({s, Tensor({heads, rows, 1})}, cfg, rng, m);
      const std::size_t total = heads * rows * edges;
      CHECK(hamming(s, neg.s) == sampler::flip_count(cfg.flip_fraction, total));
      CHECK(sampler::flip_count(cfg.flip_fraction, total) ==
            static_cast<std::size_t>(std::ceil(cfg.flip_fraction * static_cast<double>(total))));
      for (double v : neg.s.data())
        CHECK((v == 0.0 || v == kProbEps || v == 1.0 - kProbEps));
    }
  }
  SUBCASE("no unmasked edge") {
    sampler::NegativeSamplerConfig cfg;
    RandomStream rng(11);
    CHECK_THROWS(sampler::perturb_negative({Tensor({1, 1, 2}), Tensor({1, 1, 0})}, cfg, rng,
                                           energy::KeyMask{0.0, 0.0}));
  }
  SUBCASE("config validation") {
    sampler::NegativeSamplerConfig cfg;
    cfg.flip_fraction = 0.0;
    CHECK_THROWS(cfg.validate());
    cfg.flip_fraction = 1.5;
    CHECK_THROWS(cfg.validate());
  }
}

TEST_CASE("annealing") {
  sampler::NegativeSamplerConfig cfg;
  cfg.mode = sampler::NegativeMode::kAnneal;
  SUBCASE("decoupled landscape reaches its ground state") {
    RandomStream rng(12);
    auto inst = oracle::random_instance(rng, 8, 0, 2.0, 0.0, 0.0);
    for (auto& h : inst.h)
      if (std::abs(h) < 0.2) h = h < 0 ? -0.2 : 0.2;
    const auto li = oracle::lift(inst);
    cfg.anneal.sweeps = 400;
    const auto neg = sampler::anneal_negative(li.h, li.coupling, li.params, cfg, rng, li.mask);
    for (std::size_t s = 0; s < 8; ++s) CHECK((neg.s[s] >= 0.5) == (inst.h[s] > 0.0));
  }
  SUBCASE("flat landscape has zero energy") {
    RandomStream rng(13);
    const auto li = oracle::lift(oracle::zero_instance(4, 0));
    const auto neg = sampler::anneal_negative(li.h, li.coupling, li.params, cfg, rng, li.mask);
    Tensor z = neg.s;
    for (auto& v : z.data()) v = v >= 0.5 ? 1.0 : 0.0;
    CHECK(energy::total_energy(li.h, li.coupling, li.params, z, Tensor({1, 1, 0})) == 0.0);
  }
  SUBCASE("never below the exact ground state") {
    RandomStream rng(14);
    for (int trial = 0; trial < 20; ++trial) {
      const auto inst = oracle::random_instance(rng, 1 + rng.index(6), rng.index(3), 1.0, 1.0, 1.0);
      const auto li = oracle::lift(inst);
      cfg.anneal.sweeps = 50;
      const auto neg = sampler::anneal_negative(li.h, li.coupling, li.params, cfg, rng, li.mask);
      Tensor z = neg.s, u = neg.r;
      for (auto& v : z.data()) v = v >= 0.5 ? 1.0 : 0.0;
      for (auto& v : u.data()) v = v >= 0.5 ? 1.0 : 0.0;
      CHECK(energy::total_energy(li.h, li.coupling, li.params, z, u) >=
            oracle::ground_state_energy(inst) - 1e-12);
    }
  }
}
