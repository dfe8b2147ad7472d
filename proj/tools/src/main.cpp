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

#include <iostream>

#include "CLI11.hpp"
#include "boltzgate_cli/commands.hpp"

namespace {

using boltzgate::cli::Overrides;

void add_run_flags(CLI::App* cmd, std::string& config_path, Overrides& o) {
  cmd->add_option("--config", config_path, "JSON run configuration");
  cmd->add_option("--data", o.data, "TSV dataset or 'synth'");
  cmd->add_option("--val", o.val, "validation TSV (default: seeded 10% split of --data)");
  cmd->add_option("--mode", o.mode, "softmax | bm_soft | bm_hard");
  cmd->add_option("--epochs", o.epochs);
  cmd->add_option("--batch", o.batch);
  cmd->add_option("--lr", o.lr);
  cmd->add_option("--seed", o.seed, "falls back to BOLTZGATE_SEED");
  cmd->add_option("--threads", o.threads);
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--margin", o.margin);
  cmd->add_option("--lambda-max", o.lambda_max);
  cmd->add_option("--kernel", o.kernel);
  cmd->add_option("--stride", o.stride);
  cmd->add_option("--mf-iters", o.mf_iters);
  cmd->add_option("--neg", o.neg, "perturb | anneal");
  cmd->add_option("--rho", o.rho, "fraction of edges flipped by perturb");
  cmd->add_option("--checkpoint", o.checkpoint);
}

boltzgate::cli::RunConfig resolve(const std::string& config_path, const Overrides& o) {
  auto cfg = boltzgate::cli::default_run_config();
  if (!config_path.empty()) cfg = boltzgate::cli::load_run_config(config_path, cfg);
  boltzgate::cli::apply_overrides(cfg, o);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Boltzmann-gated attention classifier for DNA sequences"};
  app.require_subcommand(1);

  std::string train_cfg, eval_cfg, inspect_cfg;
  Overrides train_o, eval_o, inspect_o;
  auto* train = app.add_subcommand("train", "train a model");
  add_run_flags(train, train_cfg, train_o);
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  add_run_flags(eval, eval_cfg, eval_o);
  auto* insp = app.add_subcommand("inspect", "export learned structure");
  add_run_flags(insp, inspect_cfg, inspect_o);

  boltzgate::cli::GradcheckOptions grad_o;
  std::optional<std::uint64_t> grad_seed;
  std::string grad_mode = "bm_soft";
  auto* grad = app.add_subcommand("gradcheck", "finite-difference check on a tiny model");
  grad->add_option("--seed", grad_seed);
  grad->add_option("--mode", grad_mode);
  grad->add_flag("--inject-gradient-error", grad_o.inject_error, "negative control");

  boltzgate::cli::OracleVerifyOptions oracle_o;
  std::optional<std::uint64_t> oracle_seed;
  auto* orc = app.add_subcommand("oracle-verify", "mean-field checks against enumeration");
  orc->add_option("--seed", oracle_seed);
  orc->add_flag("--inject-bound-violation", oracle_o.inject_violation, "negative control");

  boltzgate::data::SynthSpec synth_spec;
  std::size_t synth_n = 2000;
  std::string synth_path;
  std::optional<std::uint64_t> synth_seed;
  auto* syn = app.add_subcommand("synth", "write a synthetic planted-motif dataset");
  syn->add_option("--out", synth_path, "TSV path")->required();
  syn->add_option("-n,--samples", synth_n);
  syn->add_option("--length", synth_spec.length);
  syn->add_option("--noise", synth_spec.noise);
  syn->add_option("--copies", synth_spec.copies, "planted copies of each motif");
  syn->add_option("--seed", synth_seed);

  CLI11_PARSE(app, argc, argv);

  // Seeds for the small commands follow the same flag-then-env rule.
  auto seed_or_env = [](const std::optional<std::uint64_t>& flag) {
    Overrides o;
    o.seed = flag;
    auto cfg = boltzgate::cli::default_run_config();
    boltzgate::cli::apply_overrides(cfg, o);
    return cfg.seed;
  };

  try {
    if (*train) return boltzgate::cli::cmd_train(resolve(train_cfg, train_o), std::cout);
    if (*eval) return boltzgate::cli::cmd_eval(resolve(eval_cfg, eval_o), std::cout);
    if (*insp) return boltzgate::cli::cmd_inspect(resolve(inspect_cfg, inspect_o), std::cout);
    if (*grad) {
      grad_o.seed = seed_or_env(grad_seed);
      grad_o.mode = boltzgate::attention::parse_mode(grad_mode);
      return boltzgate::cli::cmd_gradcheck(grad_o, std::cout);
    }
    if (*orc) {
      oracle_o.seed = seed_or_env(oracle_seed);
      return boltzgate::cli::cmd_oracle_verify(oracle_o, std::cout);
    }
    if (*syn) {
      synth_spec.seed = seed_or_env(synth_seed);
      return boltzgate::cli::cmd_synth(synth_spec, synth_n, synth_path, std::cout);
    }
  } catch (const boltzgate::cli::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
