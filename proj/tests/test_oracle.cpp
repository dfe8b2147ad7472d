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
#include <numbers>
#include <numeric>
#include <vector>

#include "boltzgate/energy.hpp"
#include "boltzgate/numerics.hpp"
#include "boltzgate/oracle.hpp"
#include "doctest.h"

using namespace boltzgate;

TEST_CASE("uniform distribution when every parameter is zero") {
  const auto post = oracle::enumerate(oracle::zero_instance(2, 1));
  CHECK(std::abs(post.log_partition - 3 * std::numbers::ln2) <= 1e-14);
  for (double m : post.marginals_z) CHECK(m == doctest::Approx(0.5).epsilon(1e-15));
  for (double m : post.marginals_u) CHECK(m == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(std::abs(oracle::exact_min_free_energy(oracle::zero_instance(2, 1)) +
                 3 * std::numbers::ln2) <= 1e-14);
  CHECK(oracle::exact_gate_probability(oracle::zero_instance(2, 1), 1) == doctest::Approx(0.5));
}

TEST_CASE("single edge") {
  auto inst = oracle::zero_instance(1, 0);
  inst.h[0] = std::log(3.0);
  CHECK(std::abs(oracle::enumerate(inst).marginals_z[0] - 0.75) <= 1e-15);
  const double h = -0.8;
  inst.h[0] = h;
  const std::vector<double> two{0.0, h};
  CHECK(std::abs(oracle::exact_min_free_energy(inst) + logsumexp(two)) <= 1e-14);
}

TEST_CASE("a coupled pair has equal marginals") {
  auto inst = oracle::zero_instance(2, 0);
  inst.coupling.at(0, 1) = inst.coupling.at(1, 0) = 0.9;
  const auto post = oracle::enumerate(inst);
  CHECK(std::abs(post.marginals_z[0] - post.marginals_z[1]) <= 1e-15);
}

TEST_CASE("uncoupled marginals are sigmoids of the bias") {
  RandomStream rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    auto inst = oracle::random_instance(rng, 1 + rng.index(6), 0, 2.0, 0.0, 0.0);
    for (std::size_t s = 0; s < inst.edges(); ++s)
      CHECK(std::abs(oracle::exact_gate_probability(inst, s) - sigmoid(inst.h[s])) <= 1e-12);
  }
}

TEST_CASE("probabilities are normalised and marginals bounded") {
  RandomStream rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const auto inst = oracle::random_instance(rng, 1 + rng.index(6), rng.index(4), 1.0, 1.0, 1.0);
    const auto post = oracle::enumerate(inst);
    REQUIRE(post.probabilities.size() == (1u << (inst.edges() + inst.latents())));
    const double total = std::accumulate(post.probabilities.begin(), post.probabilities.end(), 0.0);
    CHECK(std::abs(total - 1.0) <= 1e-12);
    for (double m : post.marginals_z) CHECK((m >= 0.0 && m <= 1.0));
    for (double m : post.marginals_u) CHECK((m >= 0.0 && m <= 1.0));
  }
}

TEST_CASE("state order is little-endian in z, then u") {
  auto inst = oracle::zero_instance(2, 1);
  inst.h[1] = 1.0;
  inst.b[0] = 2.0;
  inst.c_lat = 1.0;
  CHECK(oracle::state_energy(inst, 0b010) == -1.0);
  CHECK(oracle::state_energy(inst, 0b100) == -2.0);
  CHECK(oracle::state_energy(inst, 0b001) == 0.0);
}

TEST_CASE("errors") {
  CHECK_THROWS_WITH(oracle::enumerate(oracle::zero_instance(15, 6)),
                    "instance too large to enumerate");
  CHECK_THROWS_AS(oracle::exact_gate_probability(oracle::zero_instance(2, 0), 2),
                  std::out_of_range);
  auto asym = oracle::zero_instance(2, 0);
  asym.coupling.at(0, 1) = 1.0;
  CHECK_THROWS(oracle::enumerate(asym));
}

TEST_CASE("swapping two edges leaves log Z unchanged") {
  RandomStream rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t S = 2 + rng.index(5), M = rng.index(4);
    const auto inst = oracle::random_instance(rng, S, M, 1.0, 1.0, 1.0);
    const std::size_t a = rng.index(S);
    std::size_t b = rng.index(S - 1);
    if (b >= a) ++b;
    std::vector<std::size_t> perm(S);
    std::iota(perm.begin(), perm.end(), 0);
    std::swap(perm[a], perm[b]);
    auto swapped = inst;
    for (std::size_t i = 0; i < S; ++i) {
      swapped.h[i] = inst.h[perm[i]];
      for (std::size_t j = 0; j < S; ++j) swapped.coupling.at(i, j) = inst.coupling.at(perm[i], perm[j]);
      for (std::size_t m = 0; m < M; ++m) swapped.w.at(i, m) = inst.w.at(perm[i], m);
    }
    CHECK(std::abs(oracle::enumerate(inst).log_partition -
                   oracle::enumerate(swapped).log_partition) <= 1e-12);
  }
}

TEST_CASE("negating the bias mirrors the marginals") {
  RandomStream rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    auto inst = oracle::random_instance(rng, 1 + rng.index(6), 0, 2.0, 0.0, 0.0);
    auto neg = inst;
    for (auto& h : neg.h) h = -h;
    const auto a = oracle::enumerate(inst), b = oracle::enumerate(neg);
    for (std::size_t s = 0; s < inst.edges(); ++s)
      CHECK(std::abs(a.marginals_z[s] - (1.0 - b.marginals_z[s])) <= 1e-12);
  }
}

TEST_CASE("log Z matches logsumexp of the energy module's per-state energies") {
  RandomStream rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const auto inst = oracle::random_instance(rng, 1 + rng.index(6), rng.index(4), 1.0, 1.0, 1.0,
                                              0.5);
    const auto li = oracle::lift(inst);
    const std::size_t S = inst.edges(), M = inst.latents();
    std::vector<double> neg_e;
    for (std::uint64_t st = 0; st < (1ull << (S + M)); ++st) {
      Tensor z({1, 1, S}), u({1, 1, M});
      for (std::size_t i = 0; i < S; ++i) z[i] = static_cast<double>((st >> i) & 1);
      for (std::size_t m = 0; m < M; ++m) u[m] = static_cast<double>((st >> (S + m)) & 1);
      neg_e.push_back(-energy::total_energy(li.h, li.coupling, li.params, z, u));
    }
    CHECK(std::abs(logsumexp(neg_e) - oracle::enumerate(inst).log_partition) <= 1e-10);
  }
}

TEST_CASE("ground state is the lowest state energy") {
  RandomStream rng(6);
  const auto inst = oracle::random_instance(rng, 5, 2, 1.0, 1.0, 1.0);
  double lo = INFINITY;
  for (std::uint64_t st = 0; st < (1u << 7); ++st) lo = std::min(lo, oracle::state_energy(inst, st));
  CHECK(oracle::ground_state_energy(inst) == lo);
}
