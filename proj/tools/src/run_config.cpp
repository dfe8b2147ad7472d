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

#include "boltzgate_cli/run_config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace boltzgate::cli {
namespace {

using json = nlohmann::json;

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : obj.items())
    if (!allowed.count(key)) throw ConfigError("unknown config key '" + where + key + "'");
}

template <typename T>
void take(const json& obj, const char* key, T& dst, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    dst = it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + where + key + "' has the wrong type");
  }
}

std::string neg_name(sampler::NegativeMode m) {
  return m == sampler::NegativeMode::kPerturb ? "perturb" : "anneal";
}

sampler::NegativeMode parse_neg(const std::string& s) {
  if (s == "perturb") return sampler::NegativeMode::kPerturb;
  if (s == "anneal") return sampler::NegativeMode::kAnneal;
  throw ConfigError("unknown negative sampler '" + s + "' (expected perturb or anneal)");
}

attention::AttentionMode parse_mode_or_throw(const std::string& s) {
  try {
    return attention::parse_mode(s);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace

void RunConfig::finalize() {
  train.seed = seed;
  train.threads = threads == 0 ? 1 : threads;
  if (!(val_fraction >= 0.0 && val_fraction < 1.0))
    throw ConfigError("val_fraction must lie in [0, 1)");
  try {
    model.validate();
    train.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

RunConfig default_run_config() {
  RunConfig cfg;
  cfg.threads = std::max(1u, std::thread::hardware_concurrency());
  return cfg;
}

RunConfig parse_run_config(const std::string& json_text, RunConfig cfg) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(doc,
             {"data", "val", "out", "checkpoint", "seed", "threads", "mode", "val_fraction",
              "synth", "model", "train", "inspect"},
             "");
  take(doc, "data", cfg.data, "");
  take(doc, "val", cfg.val, "");
  take(doc, "out", cfg.out, "");
  take(doc, "checkpoint", cfg.checkpoint, "");
  take(doc, "seed", cfg.seed, "");
  cfg.seed_from_file = cfg.seed_from_file || doc.contains("seed");
  take(doc, "threads", cfg.threads, "");
  take(doc, "val_fraction", cfg.val_fraction, "");
  if (doc.contains("mode")) cfg.model.mode = parse_mode_or_throw(doc["mode"].get<std::string>());

  if (doc.contains("synth")) {
    const json& s = doc["synth"];
    check_keys(s, {"samples", "noise"}, "synth.");
    take(s, "samples", cfg.synth_samples, "synth.");
    take(s, "noise", cfg.synth_noise, "synth.");
  }
  if (doc.contains("model")) {
    const json& m = doc["model"];
    check_keys(m,
               {"max_len", "d_model", "num_layers", "ffn_dim", "dropout", "num_latent", "kernel",
                "stride", "heads", "c_lat_init", "mf_iters", "damping"},
               "model.");
    auto& c = cfg.model;
    take(m, "max_len", c.max_len, "model.");
    take(m, "d_model", c.d_model, "model.");
    take(m, "num_layers", c.num_layers, "model.");
    take(m, "ffn_dim", c.ffn_dim, "model.");
    take(m, "dropout", c.dropout, "model.");
    take(m, "num_latent", c.num_latent, "model.");
    take(m, "kernel", c.kernel, "model.");
    take(m, "stride", c.stride, "model.");
    take(m, "heads", c.heads, "model.");
    take(m, "c_lat_init", c.c_lat_init, "model.");
    take(m, "mf_iters", c.solver.iterations, "model.");
    take(m, "damping", c.solver.damping, "model.");
  }
  if (doc.contains("train")) {
    const json& t = doc["train"];
    check_keys(t,
               {"lr", "lr_min", "epochs", "batch", "clip_norm", "margin", "lambda_max",
                "warmup_epochs", "tau_start", "tau_end", "hard_after_epoch", "neg", "rho",
                "anneal_sweeps", "energy_branch"},
               "train.");
    auto& c = cfg.train;
    take(t, "lr", c.lr, "train.");
    take(t, "lr_min", c.lr_min, "train.");
    take(t, "epochs", c.epochs, "train.");
    take(t, "batch", c.batch, "train.");
    take(t, "clip_norm", c.clip_norm, "train.");
    take(t, "margin", c.margin, "train.");
    take(t, "lambda_max", c.lambda_max, "train.");
    take(t, "warmup_epochs", c.warmup_epochs, "train.");
    take(t, "tau_start", c.tau_start, "train.");
    take(t, "tau_end", c.tau_end, "train.");
    take(t, "hard_after_epoch", c.hard_after_epoch, "train.");
    if (t.contains("neg")) c.negatives.mode = parse_neg(t["neg"].get<std::string>());
    take(t, "rho", c.negatives.flip_fraction, "train.");
    take(t, "anneal_sweeps", c.negatives.anneal.sweeps, "train.");
    take(t, "energy_branch", c.energy_branch, "train.");
  }
  if (doc.contains("inspect")) {
    const json& i = doc["inspect"];
    check_keys(i, {"top_fraction", "hyperedge_threshold"}, "inspect.");
    take(i, "top_fraction", cfg.inspect.top_fraction, "inspect.");
    take(i, "hyperedge_threshold", cfg.inspect.hyperedge_threshold, "inspect.");
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str(), std::move(base));
}

std::string serialize_run_config(const RunConfig& cfg) {
  const auto& m = cfg.model;
  const auto& t = cfg.train;
  json doc{{"data", cfg.data},
           {"val", cfg.val},
           {"out", cfg.out},
           {"checkpoint", cfg.checkpoint},
           {"seed", cfg.seed},
           {"threads", cfg.threads},
           {"mode", attention::to_string(m.mode)},
           {"val_fraction", cfg.val_fraction},
           {"synth", {{"samples", cfg.synth_samples}, {"noise", cfg.synth_noise}}},
           {"model",
            {{"max_len", m.max_len},
             {"d_model", m.d_model},
             {"num_layers", m.num_layers},
             {"ffn_dim", m.ffn_dim},
             {"dropout", m.dropout},
             {"num_latent", m.num_latent},
             {"kernel", m.kernel},
             {"stride", m.stride},
             {"heads", m.heads},
             {"c_lat_init", m.c_lat_init},
             {"mf_iters", m.solver.iterations},
             {"damping", m.solver.damping}}},
           {"train",
            {{"lr", t.lr},
             {"lr_min", t.lr_min},
             {"epochs", t.epochs},
             {"batch", t.batch},
             {"clip_norm", t.clip_norm},
             {"margin", t.margin},
             {"lambda_max", t.lambda_max},
             {"warmup_epochs", t.warmup_epochs},
             {"tau_start", t.tau_start},
             {"tau_end", t.tau_end},
             {"hard_after_epoch", t.hard_after_epoch},
             {"neg", neg_name(t.negatives.mode)},
             {"rho", t.negatives.flip_fraction},
             {"anneal_sweeps", t.negatives.anneal.sweeps},
             {"energy_branch", t.energy_branch}}},
           {"inspect",
            {{"top_fraction", cfg.inspect.top_fraction},
             {"hyperedge_threshold", cfg.inspect.hyperedge_threshold}}}};
  return doc.dump(2);
}

void apply_overrides(RunConfig& cfg, const Overrides& o) {
  if (o.data) cfg.data = *o.data;
  if (o.val) cfg.val = *o.val;
  if (o.out) cfg.out = *o.out;
  if (o.checkpoint) cfg.checkpoint = *o.checkpoint;
  if (o.mode) cfg.model.mode = parse_mode_or_throw(*o.mode);
  if (o.neg) cfg.train.negatives.mode = parse_neg(*o.neg);
  if (o.epochs) cfg.train.epochs = *o.epochs;
  if (o.batch) cfg.train.batch = *o.batch;
  if (o.threads) cfg.threads = *o.threads;
  if (o.kernel) cfg.model.kernel = *o.kernel;
  if (o.stride) cfg.model.stride = *o.stride;
  if (o.mf_iters) cfg.model.solver.iterations = *o.mf_iters;
  if (o.lr) cfg.train.lr = *o.lr;
  if (o.margin) cfg.train.margin = *o.margin;
  if (o.lambda_max) cfg.train.lambda_max = *o.lambda_max;
  if (o.rho) cfg.train.negatives.flip_fraction = *o.rho;
  if (o.seed) {
    cfg.seed = *o.seed;
  } else if (!cfg.seed_from_file) {
    if (const char* env = std::getenv("BOLTZGATE_SEED")) {
      char* end = nullptr;
      const unsigned long long v = std::strtoull(env, &end, 10);
      if (end == env || *end != '\0') throw ConfigError("BOLTZGATE_SEED must be an integer");
      cfg.seed = v;
    }
  }
}

}  // namespace boltzgate::cli
