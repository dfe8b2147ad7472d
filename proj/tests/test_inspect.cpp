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
#include <filesystem>
#include <fstream>

#include "boltzgate/data.hpp"
#include "boltzgate/inspect.hpp"
#include "boltzgate/random.hpp"
#include "doctest.h"

using namespace boltzgate;

namespace {

model::ModelConfig cfg_for(std::size_t max_len) {
  model::ModelConfig c;
  c.max_len = max_len;
  c.d_model = 8;
  c.heads = 2;
  c.num_layers = 2;
  c.ffn_dim = 16;
  c.num_latent = 5;
  c.kernel = 7;
  c.stride = 5;
  c.dropout = 0.0;
  c.mode = attention::AttentionMode::kBmSoft;
  return c;
}

data::EncodedBatch batch_for(std::size_t n, std::size_t length) {
  data::SynthSpec spec;
  spec.length = length;
  spec.copies = 1;
  return data::encode_records(data::synth_generate(spec, n), length);
}

ParameterSet energised(const model::ModelConfig& cfg, std::uint64_t seed) {
  RandomStream rng(seed);
  ParameterSet p = model::init_parameters(cfg, rng);
  for (auto& [name, t] : p.entries())
    if (name.find(".energy.") != std::string::npos)
      for (auto& v : t.data()) v += rng.uniform() - 0.5;
  return p;
}

}  // namespace

TEST_CASE("edge count") {
  CHECK(inspect::top_edge_count(0.005, 100) == 25);  // 4950 pairs
  CHECK(inspect::top_edge_count(0.005, 12) == 1);
  CHECK(inspect::top_edge_count(0.5, 4) == 3);
}

TEST_CASE("an untrained model exports empty structure") {
  const auto cfg = cfg_for(60);
  RandomStream rng(1);
  const auto ex = inspect::compute(model::init_parameters(cfg, rng), cfg, batch_for(3, 60));
  CHECK(ex.samples == 3);
  REQUIRE(ex.latent_usage.size() == cfg.num_latent);
  for (double u : ex.latent_usage) CHECK(u == doctest::Approx(0.5));  // sigmoid(0)
  CHECK(ex.pair_matrix.shape() == Shape{cfg.frames(), cfg.frames()});
  for (double v : ex.pair_matrix.data()) CHECK(v == 0.0);
  for (double v : ex.module_position.data()) CHECK(v == 0.0);
  CHECK(ex.positive_edges.empty());
  CHECK(ex.negative_edges.empty());
  CHECK(ex.hyperedges.empty());
}

TEST_CASE("exports from coupled parameters") {
  const auto cfg = cfg_for(500);
  const auto ex = inspect::compute(energised(cfg, 2), cfg, batch_for(2, 500));
  const std::size_t k = inspect::top_edge_count(0.005, cfg.frames());
  CHECK(ex.positive_edges.size() == k);
  CHECK(ex.negative_edges.size() == k);
  for (const auto& e : ex.positive_edges) {
    CHECK(e.i < e.j);
    CHECK(e.weight > 0.0);
  }
  for (std::size_t n = 1; n < ex.positive_edges.size(); ++n)
    CHECK(ex.positive_edges[n - 1].weight >= ex.positive_edges[n].weight);
  for (double u : ex.latent_usage) {
    CHECK(u > 0.0);
    CHECK(u < 1.0);
  }
  // The pair matrix is an average of symmetric couplings.
  for (std::size_t a = 0; a < cfg.frames(); ++a)
    for (std::size_t b = 0; b < cfg.frames(); ++b)
      CHECK(ex.pair_matrix.at(a, b) == doctest::Approx(ex.pair_matrix.at(b, a)));
  for (const auto& h : ex.hyperedges) CHECK(std::abs(h.weight) >= 0.05);
  CHECK(!ex.hyperedges.empty());

  const auto dir = std::filesystem::temp_directory_path() / "boltzgate_test_inspect";
  std::filesystem::remove_all(dir);
  const auto files = inspect::write(ex, {}, dir);
  CHECK(files.size() == 7);
  for (const auto& f : files) CHECK(std::filesystem::file_size(dir / f) > 0);
  std::ifstream edges(dir / "pair_edges.csv");
  std::size_t lines = 0;
  for (std::string line; std::getline(edges, line);) ++lines;
  CHECK(lines == 1 + 2 * k);
}

TEST_CASE("inspect rejects softmax models and empty data") {
  auto cfg = cfg_for(60);
  RandomStream rng(3);
  const auto params = model::init_parameters(cfg, rng);
  CHECK_THROWS(inspect::compute(params, cfg, batch_for(0, 60)));
  cfg.mode = attention::AttentionMode::kSoftmax;
  RandomStream rng2(3);
  CHECK_THROWS(inspect::compute(model::init_parameters(cfg, rng2), cfg, batch_for(1, 60)));
}
