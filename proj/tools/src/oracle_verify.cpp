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
#include <iomanip>

#include "boltzgate/meanfield.hpp"
#include "boltzgate/oracle.hpp"
#include "boltzgate_cli/commands.hpp"

namespace boltzgate::cli {
namespace {

meanfield::SolverConfig converge_config(meanfield::UpdateMode mode, double tolerance) {
  meanfield::SolverConfig c;
  c.mode = mode;
  c.iterations = 5000;
  c.tolerance = tolerance;
  c.early_exit = true;
  return c;
}

oracle::TinyInstance draw(RandomStream& rng, double coupling_scale, double latent_scale) {
  const std::size_t edges = 1 + rng.index(6);
  const std::size_t latents = rng.index(4);
  const double c_lat = 2.0 * rng.uniform() - 1.0;
  return oracle::random_instance(rng, edges, latents, 1.0, coupling_scale, latent_scale, c_lat);
}

double solved_free_energy(const oracle::TinyInstance& inst, meanfield::UpdateMode mode) {
  const oracle::LiftedInstance li = oracle::lift(inst);
  const auto sol =
      meanfield::solve(li.h, li.coupling, li.params, converge_config(mode, 1e-12), li.mask);
  return energy::free_energy(li.h, li.coupling, li.params, sol.state, li.mask);
}

}  // namespace

int cmd_oracle_verify(const OracleVerifyOptions& opts, std::ostream& log) {
  const RandomStream root(opts.seed);
  bool all = true;
  log << std::setprecision(6);

  {
    RandomStream rng = root.child({1});
    std::size_t bad = 0;
    double worst_gap = INFINITY;
    for (int i = 0; i < 200; ++i) {
      const oracle::TinyInstance inst = draw(rng, 1.0, 1.0);
      double bound = oracle::exact_min_free_energy(inst);
      if (opts.inject_violation) bound += 1e3;
      for (auto mode : {meanfield::UpdateMode::kParallel, meanfield::UpdateMode::kSequential}) {
        const double gap = solved_free_energy(inst, mode) - bound;
        worst_gap = std::min(worst_gap, gap);
        bad += gap < -1e-9;
      }
    }
    all = all && bad == 0;
    log << "bound: " << (bad ? "FAIL" : "PASS") << " (200 instances, smallest F + log Z = "
        << worst_gap << ", violations " << bad << ")\n";
  }

  {
    RandomStream rng = root.child({2});
    bool ok = true;
    for (int i = 0; i < 100; ++i) {
      const oracle::TinyInstance inst = draw(rng, 0.1, 0.1);
      const oracle::LiftedInstance li = oracle::lift(inst);
      const auto sol = meanfield::solve(li.h, li.coupling, li.params,
                                        converge_config(meanfield::UpdateMode::kParallel, 1e-12),
                                        li.mask);
      const oracle::ExactPosterior exact = oracle::enumerate(inst);
      double err = 0.0;
      for (std::size_t s = 0; s < inst.edges(); ++s)
        err = std::max(err, std::abs(sol.state.s[s] - exact.marginals_z[s]));
      ok = ok && err <= 0.05;
      log << "  weak instance " << i << " (S=" << inst.edges() << ", M=" << inst.latents()
          << "): max marginal error " << err << '\n';
    }
    RandomStream zrng = root.child({3});
    double zero_err = 0.0;
    for (int i = 0; i < 20; ++i) {
      oracle::TinyInstance inst = oracle::zero_instance(1 + zrng.index(6), zrng.index(4));
      for (auto& h : inst.h) h = 2.0 * zrng.uniform() - 1.0;
      for (auto& b : inst.b) b = 2.0 * zrng.uniform() - 1.0;
      const oracle::LiftedInstance li = oracle::lift(inst);
      const auto sol = meanfield::solve(li.h, li.coupling, li.params,
                                        converge_config(meanfield::UpdateMode::kParallel, 1e-14),
                                        li.mask);
      const oracle::ExactPosterior exact = oracle::enumerate(inst);
      for (std::size_t s = 0; s < inst.edges(); ++s)
        zero_err = std::max(zero_err, std::abs(sol.state.s[s] - exact.marginals_z[s]));
    }
    ok = ok && zero_err <= 1e-12;
    all = all && ok;
    log << "marginals: " << (ok ? "PASS" : "FAIL") << " (100 weak-coupling instances within 0.05;"
        << " uncoupled max error " << zero_err << ")\n";
  }

  {
    RandomStream rng = root.child({4});
    std::size_t increases = 0;
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      const oracle::TinyInstance inst = draw(rng, 1.0, 1.0);
      const oracle::LiftedInstance li = oracle::lift(inst);
      std::vector<double> trail;
      meanfield::SolverConfig cfg;
      cfg.mode = meanfield::UpdateMode::kSequential;
      cfg.iterations = 20;
      meanfield::solve(li.h, li.coupling, li.params, cfg, li.mask,
                       [&](double f) { trail.push_back(f); });
      for (std::size_t k = 1; k < trail.size(); ++k) {
        const double rise = trail[k] - trail[k - 1];
        worst = std::max(worst, rise);
        increases += rise > 1e-10;
      }
    }
    all = all && increases == 0;
    log << "monotonicity: " << (increases ? "FAIL" : "PASS") << " (100 instances, largest rise "
        << worst << ")\n";
  }

  {
    RandomStream rng = root.child({5});
    std::size_t converged = 0, bad = 0;
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      const oracle::TinyInstance inst = draw(rng, 1.0, 1.0);
      const oracle::LiftedInstance li = oracle::lift(inst);
      const auto sol = meanfield::solve(li.h, li.coupling, li.params,
                                        converge_config(meanfield::UpdateMode::kParallel, 1e-8),
                                        li.mask);
      if (sol.trace.residual > 1e-8) continue;
      ++converged;
      const double extra =
          meanfield::fixed_point_residual(li.h, li.coupling, li.params, sol.state.s, li.mask);
      worst = std::max(worst, extra);
      bad += extra > 1e-8;
    }
    const bool ok = bad == 0 && converged > 0;
    all = all && ok;
    log << "fixed point: " << (ok ? "PASS" : "FAIL") << " (" << converged
        << "/100 converged, largest extra-sweep change " << worst << ")\n";
  }

  log << (all ? "ALL PASS" : "SOME CHECKS FAILED") << '\n';
  return all ? 0 : 1;
}

}  // namespace boltzgate::cli
