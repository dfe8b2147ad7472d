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

#include <benchmark/benchmark.h>

#include "boltzgate/data.hpp"
#include "boltzgate/meanfield.hpp"
#include "boltzgate/model.hpp"
#include "boltzgate/ops.hpp"
#include "boltzgate/training.hpp"

using namespace boltzgate;

namespace {

Tensor uniform(const Shape& shape, RandomStream& rng, double scale) {
  Tensor t(shape);
  for (auto& v : t.data()) v = scale * (2.0 * rng.uniform() - 1.0);
  return t;
}

struct GatingProblem {
  Tensor h, coupling;
  energy::EnergyParams params;
  energy::KeyMask mask;
};

// One layer's gating problem: H heads, S frames attending to each other.
GatingProblem problem(std::size_t keys) {
  const std::size_t heads = 4, head_dim = 32, latents = 16;
  RandomStream rng(1);
  GatingProblem p;
  p.mask = energy::all_valid(keys);
  const Tensor q = uniform({heads, keys, head_dim}, rng, 1.0);
  const Tensor k = uniform({heads, keys, head_dim}, rng, 1.0);
  p.params = energy::make_energy_params(heads, head_dim, keys, latents);
  p.params.w_diag = uniform(p.params.w_diag.shape(), rng, 0.1);
  p.params.w_lat = uniform(p.params.w_lat.shape(), rng, 0.1);
  p.h = energy::bias_field(q, k, p.mask);
  p.coupling = energy::pair_coupling(k, p.params.w_diag, p.mask);
  return p;
}

void BM_MeanfieldParallel(benchmark::State& state) {
  const auto p = problem(static_cast<std::size_t>(state.range(0)));
  meanfield::SolverConfig cfg;
  cfg.trace_free_energy = false;
  for (auto _ : state) {
    auto sol = meanfield::solve(p.h, p.coupling, p.params, cfg, p.mask);
    benchmark::DoNotOptimize(sol.state.s.data().data());
  }
}
BENCHMARK(BM_MeanfieldParallel)->Arg(20)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_MeanfieldTape(benchmark::State& state) {
  const auto p = problem(static_cast<std::size_t>(state.range(0)));
  meanfield::SolverConfig cfg;
  cfg.trace_free_energy = false;
  for (auto _ : state) {
    Tape tape;
    const auto vars = energy::bind(tape, p.params, true);
    Var h = tape.variable(p.h);
    auto out = meanfield::solve(h, tape.constant(p.coupling), vars, cfg, p.mask);
    tape.backward(ops::sum(out.s));
    const Tensor g = tape.grad(h);
    benchmark::DoNotOptimize(g.data().data());
  }
}
BENCHMARK(BM_MeanfieldTape)->Arg(20)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_MeanfieldSequential(benchmark::State& state) {
  const auto p = problem(20);
  meanfield::SolverConfig cfg;
  cfg.mode = meanfield::UpdateMode::kSequential;
  cfg.trace_free_energy = false;
  for (auto _ : state) {
    auto sol = meanfield::solve(p.h, p.coupling, p.params, cfg, p.mask);
    benchmark::DoNotOptimize(sol.state.s.data().data());
  }
}
BENCHMARK(BM_MeanfieldSequential)->Unit(benchmark::kMillisecond);

// Forward pass of one 500-nt sequence at the default model size.
void BM_Forward(benchmark::State& state) {
  model::ModelConfig cfg;
  cfg.mode = static_cast<attention::AttentionMode>(state.range(0));
  RandomStream rng(2);
  const ParameterSet params = model::init_parameters(cfg, rng);
  data::SynthSpec spec;
  spec.length = cfg.max_len;
  const auto batch = data::encode_records(data::synth_generate(spec, 1), cfg.max_len);
  for (auto _ : state) {
    Tape tape;
    BoundParameters bound(tape, params, false);
    auto fwd = model::forward(bound, batch.tokens_of(0), batch.mask_of(0), cfg, {});
    benchmark::DoNotOptimize(fwd.logit.value().data().data());
  }
  state.SetLabel(attention::to_string(cfg.mode));
}
BENCHMARK(BM_Forward)
    ->Arg(static_cast<int>(attention::AttentionMode::kSoftmax))
    ->Arg(static_cast<int>(attention::AttentionMode::kBmSoft))
    ->Unit(benchmark::kMillisecond);

// Loss and gradient of one training sample, energy branch included.
void BM_SampleLossGradient(benchmark::State& state) {
  model::ModelConfig cfg;
  cfg.max_len = 100;
  cfg.d_model = 32;
  cfg.heads = 2;
  cfg.num_layers = 2;
  cfg.ffn_dim = 64;
  cfg.num_latent = 4;
  RandomStream rng(3);
  const ParameterSet params = model::init_parameters(cfg, rng);
  data::SynthSpec spec;
  spec.length = cfg.max_len;
  const auto batch = data::encode_records(data::synth_generate(spec, 1), cfg.max_len);
  training::TrainConfig tcfg;
  training::StepSettings settings;
  settings.lambda = 0.1;
  settings.training = true;
  for (auto _ : state) {
    RandomStream draw(4);
    ParameterSet grads = params.zeros_like();
    auto r = training::sample_loss(params, cfg, tcfg, batch.tokens_of(0), batch.mask_of(0),
                                   batch.labels[0], settings, &draw, nullptr, &grads);
    benchmark::DoNotOptimize(r.loss);
  }
}
BENCHMARK(BM_SampleLossGradient)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
