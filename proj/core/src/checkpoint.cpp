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

#include "boltzgate/checkpoint.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace boltzgate::checkpoint {
namespace {

using json = nlohmann::json;

constexpr const char* kFormatName = "boltzgate-checkpoint";

std::string solver_mode_name(meanfield::UpdateMode m) {
  return m == meanfield::UpdateMode::kParallel ? "parallel" : "sequential";
}

meanfield::UpdateMode parse_solver_mode(const std::string& s) {
  if (s == "parallel") return meanfield::UpdateMode::kParallel;
  if (s == "sequential") return meanfield::UpdateMode::kSequential;
  throw std::invalid_argument("unknown solver mode '" + s + "'");
}

void reject_unknown(const json& obj, std::initializer_list<const char*> known, const char* where) {
  std::set<std::string> allowed(known.begin(), known.end());
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key))
      throw std::invalid_argument(std::string("unknown key '") + key + "' in " + where);
  }
}

json config_json(const model::ModelConfig& c) {
  return json{{"vocab_size", c.vocab_size},
              {"max_len", c.max_len},
              {"d_model", c.d_model},
              {"num_layers", c.num_layers},
              {"ffn_dim", c.ffn_dim},
              {"dropout", c.dropout},
              {"num_latent", c.num_latent},
              {"kernel", c.kernel},
              {"stride", c.stride},
              {"heads", c.heads},
              {"c_lat_init", c.c_lat_init},
              {"mode", attention::to_string(c.mode)},
              {"solver",
               {{"iterations", c.solver.iterations},
                {"damping", c.solver.damping},
                {"tolerance", c.solver.tolerance},
                {"mode", solver_mode_name(c.solver.mode)},
                {"early_exit", c.solver.early_exit}}}};
}

model::ModelConfig config_from(const json& j) {
  reject_unknown(j,
                 {"vocab_size", "max_len", "d_model", "num_layers", "ffn_dim", "dropout",
                  "num_latent", "kernel", "stride", "heads", "c_lat_init", "mode", "solver"},
                 "model config");
  model::ModelConfig c;
  c.vocab_size = j.at("vocab_size").get<std::size_t>();
  c.max_len = j.at("max_len").get<std::size_t>();
  c.d_model = j.at("d_model").get<std::size_t>();
  c.num_layers = j.at("num_layers").get<std::size_t>();
  c.ffn_dim = j.at("ffn_dim").get<std::size_t>();
  c.dropout = j.at("dropout").get<double>();
  c.num_latent = j.at("num_latent").get<std::size_t>();
  c.kernel = j.at("kernel").get<std::size_t>();
  c.stride = j.at("stride").get<std::size_t>();
  c.heads = j.at("heads").get<std::size_t>();
  c.c_lat_init = j.at("c_lat_init").get<double>();
  c.mode = attention::parse_mode(j.at("mode").get<std::string>());
  const json& s = j.at("solver");
  reject_unknown(s, {"iterations", "damping", "tolerance", "mode", "early_exit"}, "solver config");
  c.solver.iterations = s.at("iterations").get<int>();
  c.solver.damping = s.at("damping").get<double>();
  c.solver.tolerance = s.at("tolerance").get<double>();
  c.solver.mode = parse_solver_mode(s.at("mode").get<std::string>());
  c.solver.early_exit = s.at("early_exit").get<bool>();
  c.validate();
  return c;
}

}  // namespace

std::string config_to_json(const model::ModelConfig& cfg) { return config_json(cfg).dump(); }

model::ModelConfig config_from_json(const std::string& text) {
  return config_from(json::parse(text));
}

void save(const std::filesystem::path& path, const Checkpoint& ckpt) {
  json params = json::array();
  for (const auto& [name, t] : ckpt.params.entries()) {
    params.push_back({{"name", name}, {"shape", t.shape()}, {"values", t.values()}});
  }
  json doc{{"format", kFormatName},
           {"format_version", kFormatVersion},
           {"config", config_json(ckpt.config)},
           {"parameters", std::move(params)}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out << doc.dump() << '\n';
  if (!out) throw std::runtime_error("failed writing checkpoint " + path.string());
}

Checkpoint load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw std::runtime_error("malformed checkpoint " + path.string() + ": " + e.what());
  }
  if (doc.value("format", std::string()) != kFormatName)
    throw std::runtime_error(path.string() + " is not a boltzgate checkpoint");
  const int version = doc.at("format_version").get<int>();
  if (version != kFormatVersion)
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));

  Checkpoint ckpt;
  ckpt.config = config_from(doc.at("config"));
  RandomStream rng(0);
  ParameterSet expected = model::init_parameters(ckpt.config, rng);
  for (const auto& entry : doc.at("parameters")) {
    const std::string name = entry.at("name").get<std::string>();
    Shape shape = entry.at("shape").get<Shape>();
    std::vector<double> values = entry.at("values").get<std::vector<double>>();
    if (!expected.contains(name)) throw std::runtime_error("unexpected parameter '" + name + "'");
    if (expected.get(name).shape() != shape)
      throw std::runtime_error("parameter '" + name + "' has shape " + shape_to_string(shape) +
                               ", expected " + shape_to_string(expected.get(name).shape()));
    ckpt.params.add(name, Tensor(std::move(shape), std::move(values)));
  }
  if (!ckpt.params.same_layout(expected)) {
    for (const auto& [name, t] : expected.entries())
      if (!ckpt.params.contains(name))
        throw std::runtime_error("checkpoint is missing parameter '" + name + "'");
    throw std::runtime_error("checkpoint parameters are out of order");
  }
  return ckpt;
}

}  // namespace boltzgate::checkpoint
