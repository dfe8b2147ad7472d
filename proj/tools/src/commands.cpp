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

#include "boltzgate_cli/commands.hpp"

#include <fstream>
#include <iomanip>

#include "boltzgate/checkpoint.hpp"
#include "boltzgate/inspect.hpp"
#include "boltzgate/training.hpp"
#include "json.hpp"

namespace boltzgate::cli {
namespace {

data::SynthSpec synth_spec(const RunConfig& cfg, std::uint64_t stream) {
  data::SynthSpec spec;
  spec.length = cfg.model.max_len;
  spec.noise = cfg.synth_noise;
  spec.seed = RandomStream::derive(cfg.seed, {stream});
  return spec;
}

checkpoint::Checkpoint load_checkpoint_flag(const RunConfig& cfg) {
  if (cfg.checkpoint.empty()) throw ConfigError("--checkpoint is required");
  return checkpoint::load(cfg.checkpoint);
}

}  // namespace

std::vector<data::SequenceRecord> load_dataset(const std::string& source, const RunConfig& cfg,
                                               const char* flag) {
  if (source.empty()) throw ConfigError(std::string(flag) + " is required (a TSV path or 'synth')");
  if (source == "synth") {
    // Distinct streams so a synthetic validation set never repeats training samples.
    const std::uint64_t stream = std::string(flag) == "--val" ? 2 : 1;
    return data::synth_generate(synth_spec(cfg, stream), cfg.synth_samples);
  }
  auto records = data::load_tsv(source);
  if (records.empty()) throw std::runtime_error("dataset " + source + " has no records");
  return records;
}

int cmd_train(const RunConfig& cfg_in, std::ostream& log) {
  RunConfig cfg = cfg_in;
  cfg.finalize();
  auto records = load_dataset(cfg.data, cfg, "--data");
  std::vector<data::SequenceRecord> train_records, val_records;
  if (!cfg.val.empty()) {
    train_records = std::move(records);
    val_records = load_dataset(cfg.val, cfg, "--val");
  } else {
    std::tie(train_records, val_records) =
        data::split_validation(records, cfg.val_fraction, RandomStream::derive(cfg.seed, {3}));
  }
  const data::EncodedBatch train = data::encode_records(train_records, cfg.model.max_len);
  const data::EncodedBatch val = data::encode_records(val_records, cfg.model.max_len);

  const std::filesystem::path out = cfg.out;
  std::filesystem::create_directories(out);
  {
    std::ofstream f(out / "run_config.json");
    f << serialize_run_config(cfg) << '\n';
  }
  RandomStream init_rng(RandomStream::derive(cfg.seed, {4}));
  training::Trainer trainer(cfg.model, cfg.train, model::init_parameters(cfg.model, init_rng));

  std::ofstream metrics(out / "metrics.jsonl");
  if (!metrics) throw std::runtime_error("cannot write " + (out / "metrics.jsonl").string());
  double best = -1.0;
  log << "training " << train.size() << " samples (" << val.size() << " validation), mode "
      << attention::to_string(cfg.model.mode) << '\n';
  for (int epoch = 1; epoch <= cfg.train.epochs; ++epoch) {
    training::EpochMetrics m = trainer.train_epoch(train, val.size() ? &val : nullptr, epoch);
    metrics << training::metrics_to_json(m) << '\n' << std::flush;
    log << std::fixed << std::setprecision(4) << "epoch " << epoch << " loss " << m.train_loss
        << " acc " << m.train_acc << " val_loss " << m.val_loss << " val_acc " << m.val_acc
        << " lambda " << m.lambda << " tau " << m.tau << '\n';
    log.unsetf(std::ios::floatfield);
    const double score = val.size() ? m.val_acc : m.train_acc;
    if (score > best) {
      best = score;
      checkpoint::save(out / "best.ckpt.json", {cfg.model, trainer.params()});
    }
  }
  checkpoint::save(out / "last.ckpt.json", {cfg.model, trainer.params()});
  log << "best " << (val.size() ? "validation" : "training") << " accuracy " << best << '\n';
  return 0;
}

int cmd_eval(const RunConfig& cfg, std::ostream& log) {
  checkpoint::Checkpoint ckpt = load_checkpoint_flag(cfg);
  RunConfig data_cfg = cfg;
  data_cfg.model.max_len = ckpt.config.max_len;
  const auto records = load_dataset(cfg.data, data_cfg, "--data");
  const data::EncodedBatch batch = data::encode_records(records, ckpt.config.max_len);
  const training::Evaluation ev =
      training::evaluate(ckpt.params, ckpt.config, batch, std::max<std::size_t>(1, cfg.threads));
  log << std::setprecision(17) << "accuracy " << ev.accuracy << " loss " << ev.loss << " n "
      << ev.count << '\n';
  if (!cfg.out.empty()) {
    std::filesystem::create_directories(cfg.out);
    std::ofstream f(std::filesystem::path(cfg.out) / "eval.json");
    f << nlohmann::json{{"accuracy", ev.accuracy}, {"loss", ev.loss}, {"count", ev.count}}.dump()
      << '\n';
  }
  return 0;
}

int cmd_gradcheck(const GradcheckOptions& opts, std::ostream& log) {
  model::ModelConfig mcfg = training::tiny_model_config();
  mcfg.mode = opts.mode;
  training::TrainConfig tcfg;
  training::GradcheckConfig gcfg;
  gcfg.seed = opts.seed;
  if (opts.inject_error) {
    gcfg.corrupt = [](ParameterSet& g) { g.get("head.b2")[0] += 1e-3; };
  }
  const training::GradcheckReport report = training::gradient_check(mcfg, tcfg, gcfg);
  log << std::scientific << std::setprecision(3);
  for (const auto& [name, err] : report.max_rel_error) log << name << ' ' << err << '\n';
  log << "worst " << report.worst << " (" << report.worst_parameter << "), tolerance "
      << gcfg.tolerance << ", energy hinge " << (report.active_hinge ? "active" : "inactive")
      << '\n'
      << (report.passed ? "PASS" : "FAIL") << '\n';
  log.unsetf(std::ios::floatfield);
  return report.passed ? 0 : 1;
}

int cmd_inspect(const RunConfig& cfg, std::ostream& log) {
  checkpoint::Checkpoint ckpt = load_checkpoint_flag(cfg);
  RunConfig data_cfg = cfg;
  data_cfg.model.max_len = ckpt.config.max_len;
  const auto records = load_dataset(cfg.data, data_cfg, "--data");
  const data::EncodedBatch batch = data::encode_records(records, ckpt.config.max_len);
  const inspect::StructureExport ex = inspect::compute(ckpt.params, ckpt.config, batch, cfg.inspect);
  const auto files = inspect::write(ex, cfg.inspect, cfg.out);
  log << "inspected " << ex.samples << " samples; wrote";
  for (const auto& f : files) log << ' ' << f;
  log << " to " << cfg.out << '\n';
  return 0;
}

int cmd_synth(const data::SynthSpec& spec, std::size_t n, const std::filesystem::path& path,
              std::ostream& log) {
  const auto records = data::synth_generate(spec, n);
  data::write_tsv(path, records);
  std::size_t positives = 0;
  for (const auto& r : records) positives += r.label;
  log << "wrote " << n << " records (" << positives << " positive) to " << path.string() << '\n';
  return 0;
}

}  // namespace boltzgate::cli
