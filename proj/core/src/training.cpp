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

#include "boltzgate/training.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "boltzgate/meanfield.hpp"
#include "boltzgate/numerics.hpp"
#include "boltzgate/ops.hpp"
#include "json.hpp"

namespace boltzgate::training {
namespace {

constexpr std::uint64_t kShuffleKey = 0x5348;
constexpr std::uint64_t kSampleKey = 0x534d;

void zero_fill(ParameterSet& set) {
  for (auto& [name, t] : set.entries()) std::fill(t.data().begin(), t.data().end(), 0.0);
}

// Runs fn(slot, index) for indices [0, n) in waves of `threads`; slot is the
// position within the wave. `after_wave(first, count)` runs on the caller.
template <typename Fn, typename After>
void run_waves(std::size_t n, std::size_t threads, Fn&& fn, After&& after_wave) {
  threads = std::max<std::size_t>(1, threads);
  for (std::size_t first = 0; first < n; first += threads) {
    const std::size_t count = std::min(threads, n - first);
    if (count == 1) {
      fn(0, first);
    } else {
      std::vector<std::thread> pool;
      std::vector<std::exception_ptr> errors(count);
      pool.reserve(count);
      for (std::size_t k = 0; k < count; ++k) {
        pool.emplace_back([&, k] {
          try {
            fn(k, first + k);
          } catch (...) {
            errors[k] = std::current_exception();
          }
        });
      }
      for (auto& t : pool) t.join();
      for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    }
    after_wave(first, count);
  }
}

energy::EnergyParams energy_values(const energy::EnergyVars& v) {
  return energy::EnergyParams{v.w_diag.value(), v.w_lat.value(), v.b_lat.value(), v.c_lat.item()};
}

}  // namespace

void TrainConfig::validate() const {
  if (!(lr > 0.0) || !(lr_min > 0.0) || lr_min > lr)
    throw std::invalid_argument("learning rates must satisfy 0 < lr_min <= lr");
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (batch == 0) throw std::invalid_argument("batch must be >= 1");
  if (!(clip_norm > 0.0)) throw std::invalid_argument("clip_norm must be positive");
  if (!(margin > 0.0)) throw std::invalid_argument("margin must be positive");
  if (!(lambda_max >= 0.0)) throw std::invalid_argument("lambda_max must be >= 0");
  if (warmup_epochs < 0 || hard_after_epoch < 0)
    throw std::invalid_argument("epoch boundaries must be >= 0");
  sampler::GumbelConfig{tau_start, false}.validate();
  sampler::GumbelConfig{tau_end, false}.validate();
  negatives.validate();
}

double bce_loss(double logit, int label) {
  // max(x, 0) - x y + log(1 + exp(-|x|))
  return std::max(logit, 0.0) - logit * label + std::log1p(std::exp(-std::abs(logit)));
}

double energy_margin_loss(double e_pos, double e_neg, double margin) {
  return std::max(0.0, e_pos - e_neg + margin);
}

double total_loss(double task, double energy, double lambda) { return task + lambda * energy; }

double lambda_schedule(const TrainConfig& cfg, int epoch) {
  if (epoch <= cfg.warmup_epochs) return 0.0;
  if (epoch >= cfg.epochs) return cfg.lambda_max;
  return cfg.lambda_max * static_cast<double>(epoch - cfg.warmup_epochs) /
         static_cast<double>(cfg.epochs - cfg.warmup_epochs);
}

double tau_schedule(const TrainConfig& cfg, int epoch) {
  if (cfg.epochs <= 1 || epoch <= 1) return cfg.tau_start;
  if (epoch >= cfg.epochs) return cfg.tau_end;
  const double frac = static_cast<double>(epoch - 1) / static_cast<double>(cfg.epochs - 1);
  return cfg.tau_start + (cfg.tau_end - cfg.tau_start) * frac;
}

bool hard_sampling(const TrainConfig& cfg, int epoch) { return epoch > cfg.hard_after_epoch; }

double cosine_lr(const TrainConfig& cfg, std::size_t step, std::size_t total_steps) {
  if (total_steps == 0 || step == 0) return cfg.lr;
  if (step >= total_steps) return cfg.lr_min;
  const double c = 0.5 * (1.0 + std::cos(std::numbers::pi * static_cast<double>(step) /
                                         static_cast<double>(total_steps)));
  return cfg.lr_min + (cfg.lr - cfg.lr_min) * c;
}

double clip_gradients(ParameterSet& grads, double max_norm) {
  const double norm = grads.l2_norm();
  if (norm > max_norm) grads.scale(max_norm / norm);
  return norm;
}

AdamState make_adam_state(const ParameterSet& params) {
  AdamState s;
  s.m = params.zeros_like();
  s.v = params.zeros_like();
  return s;
}

void adam_step(ParameterSet& params, const ParameterSet& grads, AdamState& state, double lr) {
  if (!params.same_layout(grads) || !params.same_layout(state.m))
    throw ShapeError("adam_step: parameter, gradient and state layouts differ");
  ++state.t;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  auto& pe = params.entries();
  const auto& ge = grads.entries();
  for (std::size_t i = 0; i < pe.size(); ++i) {
    auto p = pe[i].second.data();
    auto g = ge[i].second.data();
    auto m = state.m.entries()[i].second.data();
    auto v = state.v.entries()[i].second.data();
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g[j];
      v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g[j] * g[j];
      p[j] -= lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + state.eps);
    }
  }
}

std::string metrics_to_json(const EpochMetrics& m) {
  nlohmann::json j{{"epoch", m.epoch},
                   {"train_loss", m.train_loss},
                   {"train_acc", m.train_acc},
                   {"val_loss", m.val_loss},
                   {"val_acc", m.val_acc},
                   {"mean_pos_energy", m.mean_pos_energy},
                   {"mean_neg_energy", m.mean_neg_energy},
                   {"lambda", m.lambda},
                   {"tau", m.tau},
                   {"lr", m.lr}};
  return j.dump();
}

EpochMetrics metrics_from_json(const std::string& line) {
  const auto j = nlohmann::json::parse(line);
  EpochMetrics m;
  m.epoch = j.at("epoch").get<int>();
  m.train_loss = j.at("train_loss").get<double>();
  m.train_acc = j.at("train_acc").get<double>();
  m.val_loss = j.at("val_loss").get<double>();
  m.val_acc = j.at("val_acc").get<double>();
  m.mean_pos_energy = j.at("mean_pos_energy").get<double>();
  m.mean_neg_energy = j.at("mean_neg_energy").get<double>();
  m.lambda = j.at("lambda").get<double>();
  m.tau = j.at("tau").get<double>();
  m.lr = j.at("lr").get<double>();
  return m;
}

SampleResult sample_loss(const ParameterSet& params, const model::ModelConfig& mcfg,
                         const TrainConfig& tcfg, std::span<const int> tokens,
                         std::span<const std::uint8_t> mask, int label,
                         const StepSettings& settings, RandomStream* rng,
                         SampleRandomness* randomness, ParameterSet* grads) {
  Tape tape;
  BoundParameters bound(tape, params, grads != nullptr);
  std::optional<RandomStream> forward_rng;
  if (rng) forward_rng.emplace(rng->child({0}));

  model::ForwardOptions fo;
  fo.training = settings.training;
  if (attention::is_structured(mcfg.mode)) fo.gumbel = settings.gumbel;
  fo.rng = forward_rng ? &*forward_rng : nullptr;
  fo.randomness = randomness ? &randomness->forward : nullptr;
  model::ForwardResult fwd = model::forward(bound, tokens, mask, mcfg, fo);

  SampleResult out;
  out.logit = fwd.logit.item();
  Var task = ops::bce_with_logits(fwd.logit, static_cast<double>(label));
  out.task_loss = task.item();
  Var loss = task;

  if (tcfg.energy_branch && !fwd.layers.empty()) {
    Var energy_sum;
    for (std::size_t l = 0; l < fwd.layers.size(); ++l) {
      const model::LayerStructure& ls = fwd.layers[l];
      Var e_pos = energy::total_energy(ls.h, ls.coupling, ls.energy, ls.s, ls.r);

      Tensor s_neg;
      if (randomness && l < randomness->negatives.size()) {
        s_neg = randomness->negatives[l];
      } else {
        if (!rng) throw std::invalid_argument("negative sampling requires a random stream");
        RandomStream neg_rng = rng->child({1, l});
        if (tcfg.negatives.mode == sampler::NegativeMode::kPerturb) {
          s_neg = sampler::perturb_negative({ls.s.value(), ls.r.value()}, tcfg.negatives, neg_rng,
                                            fwd.frame_mask)
                      .s;
        } else {
          s_neg = sampler::anneal_negative(ls.h.value(), ls.coupling.value(),
                                           energy_values(ls.energy), tcfg.negatives, neg_rng,
                                           fwd.frame_mask)
                      .s;
        }
        if (randomness) randomness->negatives.push_back(s_neg);
      }
      Var neg = tape.constant(std::move(s_neg));
      Var r_neg = meanfield::update_r(neg, ls.energy);
      Var e_neg = energy::total_energy(ls.h, ls.coupling, ls.energy, neg, r_neg);
      Var hinge = ops::relu(ops::add_scalar(ops::sub(e_pos, e_neg), tcfg.margin));

      out.pos_energy += e_pos.item();
      out.neg_energy += e_neg.item();
      energy_sum = energy_sum.valid() ? ops::add(energy_sum, hinge) : hinge;
    }
    out.energy_loss = energy_sum.item();
    // With lambda = 0 the energy terms stay off the loss graph entirely.
    if (settings.lambda != 0.0) loss = ops::add(task, ops::scale(energy_sum, settings.lambda));
  }
  out.loss = loss.item();

  if (grads) {
    tape.backward(loss);
    bound.accumulate_gradients(*grads);
  }
  return out;
}

Evaluation evaluate(const ParameterSet& params, const model::ModelConfig& mcfg,
                    const data::EncodedBatch& batch, std::size_t threads) {
  if (batch.size() == 0) throw std::invalid_argument("cannot evaluate an empty dataset");
  Evaluation ev;
  ev.count = batch.size();
  ev.logits.resize(batch.size());
  run_waves(
      batch.size(), threads,
      [&](std::size_t, std::size_t i) {
        Tape tape;
        BoundParameters bound(tape, params, false);
        model::ForwardOptions fo;
        ev.logits[i] = model::forward(bound, batch.tokens_of(i), batch.mask_of(i), mcfg, fo)
                           .logit.item();
      },
      [](std::size_t, std::size_t) {});
  std::size_t correct = 0;
  double loss = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    loss += bce_loss(ev.logits[i], batch.labels[i]);
    correct += static_cast<int>(ev.logits[i] > 0.0) == batch.labels[i];
  }
  ev.loss = loss / static_cast<double>(batch.size());
  ev.accuracy = static_cast<double>(correct) / static_cast<double>(batch.size());
  return ev;
}

Trainer::Trainer(model::ModelConfig mcfg, TrainConfig tcfg, ParameterSet params)
    : mcfg_(std::move(mcfg)), tcfg_(std::move(tcfg)), params_(std::move(params)) {
  mcfg_.validate();
  tcfg_.validate();
  adam_ = make_adam_state(params_);
}

std::size_t Trainer::total_steps(std::size_t n) const {
  return static_cast<std::size_t>(tcfg_.epochs) * ((n + tcfg_.batch - 1) / tcfg_.batch);
}

EpochMetrics Trainer::train_epoch(const data::EncodedBatch& train, const data::EncodedBatch* val,
                                  int epoch) {
  if (train.size() == 0) throw std::invalid_argument("cannot train on an empty dataset");
  if (train.length != mcfg_.max_len)
    throw std::invalid_argument("training data length does not match max_len");

  StepSettings settings;
  settings.training = true;
  settings.lambda = tcfg_.energy_branch ? lambda_schedule(tcfg_, epoch) : 0.0;
  const double tau = tau_schedule(tcfg_, epoch);
  if (mcfg_.mode == attention::AttentionMode::kBmHard)
    settings.gumbel = sampler::GumbelConfig{tau, hard_sampling(tcfg_, epoch)};

  const auto ep = static_cast<std::uint64_t>(epoch);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  RandomStream shuffle_rng = RandomStream(tcfg_.seed).child({kShuffleKey, ep});
  std::shuffle(order.begin(), order.end(), shuffle_rng.engine());

  const std::size_t slots = std::max<std::size_t>(1, tcfg_.threads);
  std::vector<ParameterSet> slot_grads(slots, params_.zeros_like());
  std::vector<SampleResult> slot_results(slots);
  ParameterSet grads = params_.zeros_like();
  const std::size_t total = total_steps(train.size());

  EpochMetrics m;
  m.epoch = epoch;
  m.lambda = settings.lambda;
  m.tau = tau;
  double loss_sum = 0.0, pos_sum = 0.0, neg_sum = 0.0;
  std::size_t correct = 0;

  const std::size_t batches = (train.size() + tcfg_.batch - 1) / tcfg_.batch;
  for (std::size_t b = 0; b < batches; ++b) {
    const std::size_t begin = b * tcfg_.batch;
    const std::size_t count = std::min(tcfg_.batch, train.size() - begin);
    zero_fill(grads);
    double batch_loss = 0.0;
    run_waves(
        count, slots,
        [&](std::size_t slot, std::size_t k) {
          const std::size_t i = order[begin + k];
          RandomStream rng = RandomStream(tcfg_.seed).child({kSampleKey, ep, i});
          zero_fill(slot_grads[slot]);
          slot_results[slot] =
              sample_loss(params_, mcfg_, tcfg_, train.tokens_of(i), train.mask_of(i),
                          train.labels[i], settings, &rng, nullptr, &slot_grads[slot]);
        },
        [&](std::size_t first, std::size_t n) {
          for (std::size_t slot = 0; slot < n; ++slot) {
            const SampleResult& r = slot_results[slot];
            const std::size_t i = order[begin + first + slot];
            grads.axpy(1.0, slot_grads[slot]);
            batch_loss += r.loss;
            pos_sum += r.pos_energy;
            neg_sum += r.neg_energy;
            correct += static_cast<int>(r.logit > 0.0) == train.labels[i];
          }
        });
    if (!std::isfinite(batch_loss))
      throw NumericError("non-finite loss at batch " + std::to_string(b) + " of epoch " +
                         std::to_string(epoch));
    loss_sum += batch_loss;
    grads.scale(1.0 / static_cast<double>(count));
    clip_gradients(grads, tcfg_.clip_norm);
    m.lr = cosine_lr(tcfg_, step_, total);
    adam_step(params_, grads, adam_, m.lr);
    ++step_;
  }

  const auto n = static_cast<double>(train.size());
  m.train_loss = loss_sum / n;
  m.train_acc = static_cast<double>(correct) / n;
  m.mean_pos_energy = pos_sum / n;
  m.mean_neg_energy = neg_sum / n;
  if (val && val->size() > 0) {
    Evaluation ev = evaluate(params_, mcfg_, *val, tcfg_.threads);
    m.val_loss = ev.loss;
    m.val_acc = ev.accuracy;
  }
  return m;
}

model::ModelConfig tiny_model_config() {
  model::ModelConfig c;
  c.max_len = 20;
  c.d_model = 8;
  c.num_layers = 1;
  c.ffn_dim = 16;
  c.dropout = 0.0;
  c.num_latent = 2;
  c.heads = 2;
  c.mode = attention::AttentionMode::kBmSoft;
  c.solver.iterations = 2;
  return c;
}

GradcheckReport gradient_check(const model::ModelConfig& mcfg, const TrainConfig& tcfg,
                               const GradcheckConfig& gcfg) {
  RandomStream rng(gcfg.seed);
  RandomStream init_rng = rng.child({0});
  ParameterSet params = model::init_parameters(mcfg, init_rng);
  RandomStream jitter = rng.child({1});
  for (auto& [name, t] : params.entries()) {
    const bool coupling = name.find(".energy.") != std::string::npos;
    for (auto& v : t.data()) v += coupling ? jitter.uniform() - 0.5 : 0.1 * jitter.normal();
  }

  // A short sequence so the last frame is padding.
  RandomStream seq_rng = rng.child({2});
  const std::size_t length = mcfg.max_len - std::min(mcfg.max_len - 1, mcfg.stride + 1);
  std::vector<int> raw(length);
  for (auto& tkn : raw) tkn = static_cast<int>(seq_rng.index(4));
  data::Padded sample = data::pad_or_truncate(raw, mcfg.max_len);
  const int label = 1;

  StepSettings settings;
  settings.lambda = gcfg.lambda;
  if (attention::is_structured(mcfg.mode)) settings.gumbel = sampler::GumbelConfig{gcfg.tau, false};

  SampleRandomness frozen;
  RandomStream sample_rng = rng.child({3});
  ParameterSet analytic = params.zeros_like();
  SampleResult base = sample_loss(params, mcfg, tcfg, sample.tokens, sample.mask, label, settings,
                                  &sample_rng, &frozen, &analytic);
  if (gcfg.corrupt) gcfg.corrupt(analytic);

  ParameterSet probe = params;
  auto loss_at = [&](std::span<const double> theta) {
    probe.assign_flat(theta);
    return sample_loss(probe, mcfg, tcfg, sample.tokens, sample.mask, label, settings, nullptr,
                       &frozen, nullptr)
        .loss;
  };
  const std::vector<double> theta = params.flatten();
  const std::vector<double> numeric = finite_diff_gradient(loss_at, theta, gcfg.h);

  GradcheckReport report;
  report.active_hinge = base.energy_loss > 0.0;
  std::size_t offset = 0;
  for (const auto& [name, g] : analytic.entries()) {
    double worst = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j)
      worst = std::max(worst, relative_error(g[j], numeric[offset + j], gcfg.floor));
    offset += g.size();
    report.max_rel_error[name] = worst;
    if (worst >= report.worst) {
      report.worst = worst;
      report.worst_parameter = name;
    }
  }
  report.passed = report.worst <= gcfg.tolerance;
  return report;
}

}  // namespace boltzgate::training
