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

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "boltzgate/checkpoint.hpp"
#include "boltzgate/random.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace boltzgate;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

model::ModelConfig tiny() {
  model::ModelConfig c;
  c.max_len = 40;
  c.d_model = 8;
  c.heads = 2;
  c.num_layers = 2;
  c.ffn_dim = 16;
  c.num_latent = 3;
  c.kernel = 7;
  c.stride = 5;
  c.mode = attention::AttentionMode::kBmHard;
  c.solver.iterations = 4;
  c.solver.damping = 0.3;
  return c;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "boltzgate_test_checkpoint";
  fs::create_directories(dir);
  return dir / name;
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

void write_json(const fs::path& p, const json& j) { std::ofstream(p) << j.dump(); }

}  // namespace

TEST_CASE("config JSON round-trip") {
  const auto c = tiny();
  const auto back = checkpoint::config_from_json(checkpoint::config_to_json(c));
  CHECK(checkpoint::config_to_json(back) == checkpoint::config_to_json(c));
  CHECK(back.mode == c.mode);
  CHECK(back.solver.iterations == 4);
  CHECK(back.solver.damping == 0.3);

  json j = json::parse(checkpoint::config_to_json(c));
  j["surprise"] = 1;
  CHECK_THROWS(checkpoint::config_from_json(j.dump()));
  j = json::parse(checkpoint::config_to_json(c));
  j["heads"] = 3;  // 8 is not divisible by 3
  CHECK_THROWS(checkpoint::config_from_json(j.dump()));
}

TEST_CASE("save and load preserve every parameter bit") {
  const auto cfg = tiny();
  RandomStream rng(5);
  ParameterSet params = model::init_parameters(cfg, rng);
  for (auto& [name, t] : params.entries())
    for (auto& v : t.data()) v += rng.normal() * 1e-3 + 1.0 / 3.0;
  const fs::path p = scratch("round.json");
  checkpoint::save(p, {cfg, params});
  const auto loaded = checkpoint::load(p);
  REQUIRE(loaded.params.same_layout(params));
  const auto a = params.flatten(), b = loaded.params.flatten();
  CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
  CHECK(checkpoint::config_to_json(loaded.config) == checkpoint::config_to_json(cfg));
  CHECK(read_json(p).at("format_version") == checkpoint::kFormatVersion);
}

TEST_CASE("corrupted checkpoints are rejected") {
  const auto cfg = tiny();
  RandomStream rng(6);
  const fs::path good = scratch("good.json");
  checkpoint::save(good, {cfg, model::init_parameters(cfg, rng)});
  const json doc = read_json(good);
  const fs::path bad = scratch("bad.json");

  SUBCASE("unknown version") {
    json j = doc;
    j["format_version"] = checkpoint::kFormatVersion + 1;
    write_json(bad, j);
    CHECK_THROWS_WITH(checkpoint::load(bad), doctest::Contains("version"));
  }
  SUBCASE("missing parameter") {
    json j = doc;
    j["parameters"].erase(j["parameters"].begin() + 3);
    write_json(bad, j);
    CHECK_THROWS_WITH(checkpoint::load(bad), doctest::Contains("missing"));
  }
  SUBCASE("shape disagreement") {
    json j = doc;
    j["parameters"][0]["shape"] = {1, 1};
    j["parameters"][0]["values"] = {0.0};
    write_json(bad, j);
    CHECK_THROWS_WITH(checkpoint::load(bad), doctest::Contains("shape"));
  }
  SUBCASE("config that does not match the parameters") {
    json j = doc;
    j["config"]["d_model"] = 16;
    write_json(bad, j);
    CHECK_THROWS(checkpoint::load(bad));
  }
  SUBCASE("not a checkpoint") {
    std::ofstream(bad) << "{\"hello\": 1}";
    CHECK_THROWS(checkpoint::load(bad));
    std::ofstream(bad) << "{{{";
    CHECK_THROWS(checkpoint::load(bad));
    CHECK_THROWS(checkpoint::load(scratch("absent.json")));
  }
}
