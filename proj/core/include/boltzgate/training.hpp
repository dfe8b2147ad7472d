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

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "boltzgate/data.hpp"
#include "boltzgate/model.hpp"
#include "boltzgate/params.hpp"
#include "boltzgate/sampler.hpp"

namespace boltzgate::training {

struct TrainConfig {
  double lr = 1e-4;
  double lr_min = 1e-6;
  int epochs = 10;
  std::size_t batch = 64;
  double clip_norm = 1.0;
  double margin = 1.0;
  double lambda_max = 0.1;
  int warmup_epochs = 3;  // lambda stays 0 through this epoch
  double tau_start = 1.0;
  double tau_end = 0.5;
  int hard_after_epoch = 3;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  sampler::NegativeSamplerConfig negatives;
  /// When false the energy terms and negatives are never computed.
  bool energy_branch = true;

  void validate() const;
};

double bce_loss(double logit, int label);
double energy_margin_loss(double e_pos, double e_neg, double margin);
double total_loss(double task, double energy, double lambda);

/// Epochs are 1-based.
double lambda_schedule(const TrainConfig& cfg, int epoch);
double tau_schedule(const TrainConfig& cfg, int epoch);
bool hard_sampling(const TrainConfig& cfg, int epoch);
double cosine_lr(const TrainConfig& cfg, std::size_t step, std::size_t total_steps);

/// Rescales `grads` in place to global L2 norm `max_norm` when it is larger.
/// Returns the norm before clipping.
double clip_gradients(ParameterSet& grads, double max_norm);

struct AdamState {
  ParameterSet m;
  ParameterSet v;
  std::uint64_t t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

AdamState make_adam_state(const ParameterSet& params);
void adam_step(ParameterSet& params, const ParameterSet& grads, AdamState& state, double lr);

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double val_loss = 0.0;
  double val_acc = 0.0;
  double mean_pos_energy = 0.0;
  double mean_neg_energy = 0.0;
  double lambda = 0.0;
  double tau = 0.0;
  double lr = 0.0;

  bool operator==(const EpochMetrics&) const = default;
};

/// One JSON object, no trailing newline.
std::string metrics_to_json(const EpochMetrics& m);
EpochMetrics metrics_from_json(const std::string& line);

/// Per-epoch settings that shape a sample's loss.
struct StepSettings {
  double lambda = 0.0;
  std::optional<sampler::GumbelConfig> gumbel;  // unset: gates are s
  bool training = false;                        // dropout
};

/// Randomness one sample consumes; recorded on first use and replayed after,
/// which freezes Gumbel noise, dropout and negatives for finite differences.
struct SampleRandomness {
  model::ForwardRandomness forward;
  std::vector<Tensor> negatives;  // s_neg per layer
};

struct SampleResult {
  double loss = 0.0;
  double task_loss = 0.0;
  double energy_loss = 0.0;  // summed over layers, before lambda
  double pos_energy = 0.0;
  double neg_energy = 0.0;
  double logit = 0.0;
};

/// Loss of one sample: BCE + lambda * sum_layers hinge(E_pos - E_neg + margin).
/// E_pos is the energy at (s, update_r(s)); E_neg at (s_neg, update_r(s_neg))
/// with s_neg a constant. When `grads` is set the gradient is added to it.
SampleResult sample_loss(const ParameterSet& params, const model::ModelConfig& mcfg,
                         const TrainConfig& tcfg, std::span<const int> tokens,
                         std::span<const std::uint8_t> mask, int label,
                         const StepSettings& settings, RandomStream* rng,
                         SampleRandomness* randomness, ParameterSet* grads);

struct Evaluation {
  double loss = 0.0;
  double accuracy = 0.0;
  std::size_t count = 0;
  std::vector<double> logits;
};

/// Deterministic evaluation: no dropout, soft gates, no noise.
Evaluation evaluate(const ParameterSet& params, const model::ModelConfig& mcfg,
                    const data::EncodedBatch& batch, std::size_t threads = 1);

class Trainer {
 public:
  Trainer(model::ModelConfig mcfg, TrainConfig tcfg, ParameterSet params);

  /// Runs one epoch (1-based) and fills validation columns when `val` is given.
  /// Throws NumericError naming the batch index on a non-finite loss.
  EpochMetrics train_epoch(const data::EncodedBatch& train, const data::EncodedBatch* val,
                           int epoch);

  const ParameterSet& params() const { return params_; }
  const model::ModelConfig& model_config() const { return mcfg_; }
  const TrainConfig& train_config() const { return tcfg_; }
  std::size_t steps_taken() const { return step_; }

  /// Total optimizer steps for the configured epochs over `n` samples.
  std::size_t total_steps(std::size_t n) const;

 private:
  model::ModelConfig mcfg_;
  TrainConfig tcfg_;
  ParameterSet params_;
  AdamState adam_;
  std::size_t step_ = 0;
};

struct GradcheckConfig {
  double h = 1e-5;
  double floor = 1e-6;  // relative-error denominator floor
  double tolerance = 1e-4;
  double lambda = 0.1;
  double tau = 1.0;
  std::uint64_t seed = 0;
  /// Test hook applied to the analytic gradient before comparison.
  std::function<void(ParameterSet&)> corrupt;
};

struct GradcheckReport {
  std::map<std::string, double> max_rel_error;  // per parameter tensor
  double worst = 0.0;
  std::string worst_parameter;
  bool active_hinge = false;
  bool passed = false;
};

/// Tiny model used for gradient checks: L=20, d_model=8, H=2, 1 layer, M=2, K=2.
model::ModelConfig tiny_model_config();

/// Central-difference check of the full loss on one synthetic sample with
/// frozen noise and negatives. Energy parameters are randomised so every
/// term of the energy is exercised.
GradcheckReport gradient_check(const model::ModelConfig& mcfg, const TrainConfig& tcfg,
                               const GradcheckConfig& gcfg);

}  // namespace boltzgate::training
