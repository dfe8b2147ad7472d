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

#include "boltzgate/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "boltzgate/numerics.hpp"

namespace boltzgate::sampler {
namespace {

void check_noise(const Tensor& s, const GumbelNoise& noise) {
  require_same_shape(s, noise.g0, "gumbel noise (class 0)");
  require_same_shape(s, noise.g1, "gumbel noise (class 1)");
}

bool valid_key(const energy::KeyMask& mask, std::size_t flat, std::size_t keys) {
  return mask[flat % keys] != 0.0;
}

void check_mask(const Tensor& s, const energy::KeyMask& mask) {
  if (s.rank() == 0 || mask.size() != s.shape().back()) {
    throw ShapeError("sampler: mask length does not match the key axis of " +
                     shape_to_string(s.shape()));
  }
}

// Perturbed logit gap (alpha1 + g1 - alpha0 - g0) on the clamped probability.
double logit_gap(double s, double g0, double g1) {
  const double p = clamp_probability(s);
  return std::log(p) - std::log1p(-p) + g1 - g0;
}

struct Relaxed {
  Tensor soft;
  Tensor hard;
  Tensor dsoft_ds;  // zero where the clamp is active or the key is padded
};

Relaxed relax(const Tensor& s, const GumbelConfig& cfg, const GumbelNoise& noise,
              const energy::KeyMask& mask) {
  cfg.validate();
  check_noise(s, noise);
  check_mask(s, mask);
  const std::size_t keys = s.shape().back();
  Relaxed out{Tensor(s.shape()), Tensor(s.shape()), Tensor(s.shape())};
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!valid_key(mask, i, keys)) continue;
    const double gap = logit_gap(s[i], noise.g0[i], noise.g1[i]);
    const double z = sigmoid(gap / cfg.tau);
    out.soft[i] = z;
    out.hard[i] = gap >= 0.0 ? 1.0 : 0.0;
    const double p = s[i];
    if (p >= kProbEps && p <= 1.0 - kProbEps) {
      out.dsoft_ds[i] = z * (1.0 - z) / cfg.tau * (1.0 / p + 1.0 / (1.0 - p));
    }
  }
  return out;
}

Var record_sample(Var s, Tensor forward, Tensor dsoft_ds) {
  return s.tape().record(std::move(forward), {s}, [s, dsoft_ds](Tape& tape, const Tensor& g) {
    Tensor* gs = tape.grad_target(s);
    if (!gs) return;
    for (std::size_t i = 0; i < g.size(); ++i) (*gs)[i] += g[i] * dsoft_ds[i];
  });
}

}  // namespace

void GumbelConfig::validate() const {
  if (!(tau > 0.0)) throw std::invalid_argument("gumbel temperature must be positive");
  if (tau > 10.0) throw std::invalid_argument("gumbel temperature must be at most 10");
}

GumbelNoise draw_noise(const Shape& shape, RandomStream& rng) {
  GumbelNoise noise{Tensor(shape), Tensor(shape)};
  for (std::size_t i = 0; i < noise.g0.size(); ++i) {
    noise.g0[i] = rng.gumbel();
    noise.g1[i] = rng.gumbel();
  }
  return noise;
}

GumbelNoise zero_noise(const Shape& shape) { return GumbelNoise{Tensor(shape), Tensor(shape)}; }

std::pair<Tensor, Tensor> gate_logits(const Tensor& s) {
  Tensor a0(s.shape()), a1(s.shape());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double p = clamp_probability(s[i]);
    a0[i] = std::log1p(-p);
    a1[i] = std::log(p);
  }
  return {std::move(a0), std::move(a1)};
}

Var gumbel_soft_sample(Var s, const GumbelConfig& cfg, const GumbelNoise& noise,
                       const energy::KeyMask& mask) {
  Relaxed r = relax(s.value(), cfg, noise, mask);
  return record_sample(s, std::move(r.soft), std::move(r.dsoft_ds));
}

Var gumbel_hard_sample(Var s, const GumbelConfig& cfg, const GumbelNoise& noise,
                       const energy::KeyMask& mask) {
  Relaxed r = relax(s.value(), cfg, noise, mask);
  return record_sample(s, std::move(r.hard), std::move(r.dsoft_ds));
}

Var gumbel_sample(Var s, const GumbelConfig& cfg, const GumbelNoise& noise,
                  const energy::KeyMask& mask) {
  return cfg.hard ? gumbel_hard_sample(s, cfg, noise, mask)
                  : gumbel_soft_sample(s, cfg, noise, mask);
}

Tensor gumbel_soft_sample(const Tensor& s, const GumbelConfig& cfg, const GumbelNoise& noise,
                          const energy::KeyMask& mask) {
  return relax(s, cfg, noise, mask).soft;
}

Tensor gumbel_hard_sample(const Tensor& s, const GumbelConfig& cfg, const GumbelNoise& noise,
                          const energy::KeyMask& mask) {
  return relax(s, cfg, noise, mask).hard;
}

void NegativeSamplerConfig::validate() const {
  if (!(flip_fraction > 0.0 && flip_fraction <= 1.0)) {
    throw std::invalid_argument("flip fraction must lie in (0, 1]");
  }
  if (mode == NegativeMode::kAnneal) {
    if (anneal.sweeps < 1) throw std::invalid_argument("anneal sweeps must be >= 1");
    if (!(anneal.t_start > 0.0 && anneal.t_end > 0.0)) {
      throw std::invalid_argument("anneal temperatures must be positive");
    }
  }
}

std::size_t flip_count(double flip_fraction, std::size_t edges) {
  const auto n = static_cast<std::size_t>(std::ceil(flip_fraction * static_cast<double>(edges)));
  return std::clamp<std::size_t>(n, 1, edges);
}

energy::StructureState perturb_negative(const energy::StructureState& positive,
                                        const NegativeSamplerConfig& cfg, RandomStream& rng,
                                        const energy::KeyMask& mask) {
  cfg.validate();
  const Tensor& s = positive.s;
  check_mask(s, mask);
  const std::size_t keys = s.shape().back();
  std::vector<std::size_t> candidates;
  candidates.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i)
    if (valid_key(mask, i, keys)) candidates.push_back(i);
  if (candidates.empty()) throw std::invalid_argument("no unmasked edges to perturb");

  Tensor binary(s.shape());
  for (std::size_t i : candidates) binary[i] = s[i] >= 0.5 ? 1.0 : 0.0;

  // Partial Fisher-Yates: the first n slots become a uniform n-subset.
  const std::size_t n = flip_count(cfg.flip_fraction, candidates.size());
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + rng.index(candidates.size() - i);
    std::swap(candidates[i], candidates[j]);
    binary[candidates[i]] = 1.0 - binary[candidates[i]];
  }

  energy::StructureState out{Tensor(s.shape()), positive.r};
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!valid_key(mask, i, keys)) continue;
    out.s[i] = binary[i] != 0.0 ? 1.0 - kProbEps : kProbEps;
  }
  return out;
}

energy::StructureState anneal_negative(const Tensor& h, const Tensor& coupling,
                                       const energy::EnergyParams& params,
                                       const NegativeSamplerConfig& cfg, RandomStream& rng,
                                       const energy::KeyMask& mask) {
  cfg.validate();
  energy::require_symmetric(coupling);
  const std::size_t heads = h.dim(0), rows = h.dim(1), keys = h.dim(2);
  const std::size_t latents = params.latents();
  if (mask.size() != keys) throw ShapeError("anneal_negative: mask length mismatch");
  const double c = params.c_lat;
  const int sweeps = cfg.anneal.sweeps;
  const double ratio =
      sweeps > 1 ? std::pow(cfg.anneal.t_end / cfg.anneal.t_start, 1.0 / (sweeps - 1)) : 1.0;

  energy::StructureState out{Tensor({heads, rows, keys}), Tensor({heads, rows, latents})};
  std::vector<double> z(keys), u(latents), best_z(keys), best_u(latents);

  for (std::size_t hd = 0; hd < heads; ++hd) {
    for (std::size_t t = 0; t < rows; ++t) {
      auto row_energy = [&] {
        double e = 0.0;
        for (std::size_t s = 0; s < keys; ++s) {
          if (z[s] == 0.0) continue;
          e -= h.at(hd, t, s);
          for (std::size_t o = s + 1; o < keys; ++o) e -= coupling.at(hd, s, o) * z[o];
        }
        double lat = 0.0;
        for (std::size_t m = 0; m < latents; ++m) {
          if (u[m] == 0.0) continue;
          lat += params.b_lat.at(hd, m);
          for (std::size_t s = 0; s < keys; ++s) lat += params.w_lat.at(hd, s, m) * z[s];
        }
        return e - c * lat;
      };
      std::fill(z.begin(), z.end(), 0.0);
      std::fill(u.begin(), u.end(), 0.0);
      double current = row_energy();
      double best = current;
      best_z = z;
      best_u = u;
      double temperature = cfg.anneal.t_start;
      for (int sweep = 0; sweep < sweeps; ++sweep, temperature *= ratio) {
        for (std::size_t s = 0; s < keys; ++s) {
          if (mask[s] == 0.0) continue;
          double field = h.at(hd, t, s);
          for (std::size_t o = 0; o < keys; ++o) field += coupling.at(hd, s, o) * z[o];
          for (std::size_t m = 0; m < latents; ++m) field += c * params.w_lat.at(hd, s, m) * u[m];
          const double delta = -(1.0 - 2.0 * z[s]) * field;
          if (delta <= 0.0 || rng.uniform() < std::exp(-delta / temperature)) {
            z[s] = 1.0 - z[s];
            current += delta;
            if (current < best) {
              best = current;
              best_z = z;
              best_u = u;
            }
          }
        }
        for (std::size_t m = 0; m < latents; ++m) {
          double field = params.b_lat.at(hd, m);
          for (std::size_t s = 0; s < keys; ++s) field += params.w_lat.at(hd, s, m) * z[s];
          u[m] = rng.uniform() < sigmoid(c * field / temperature) ? 1.0 : 0.0;
        }
        current = row_energy();
        if (current < best) {
          best = current;
          best_z = z;
          best_u = u;
        }
      }
      for (std::size_t s = 0; s < keys; ++s) {
        if (mask[s] == 0.0) continue;
        out.s.at(hd, t, s) = best_z[s] != 0.0 ? 1.0 - kProbEps : kProbEps;
      }
      for (std::size_t m = 0; m < latents; ++m)
        out.r.at(hd, t, m) = best_u[m] != 0.0 ? 1.0 - kProbEps : kProbEps;
    }
  }
  return out;
}

}  // namespace boltzgate::sampler
