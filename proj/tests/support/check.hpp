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

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "boltzgate/numerics.hpp"
#include "boltzgate/random.hpp"
#include "boltzgate/tape.hpp"
#include "boltzgate/tensor.hpp"

namespace boltzgate::testing {

inline Tensor uniform_tensor(Shape shape, RandomStream& rng, double lo = -2.0, double hi = 2.0) {
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = lo + (hi - lo) * rng.uniform();
  return t;
}

using GraphBuilder = std::function<Var(Tape&, const std::vector<Var>&)>;

// Builds the graph on a fresh tape with every input as a variable.
inline double evaluate_graph(const GraphBuilder& build, const std::vector<Tensor>& inputs,
                             std::vector<Tensor>* grads = nullptr) {
  Tape tape;
  std::vector<Var> vars;
  for (const auto& t : inputs) vars.push_back(tape.variable(t));
  Var out = build(tape, vars);
  if (grads) {
    tape.backward(out);
    grads->clear();
    for (Var v : vars) grads->push_back(tape.grad(v));
  }
  return out.item();
}

// Largest relative error between the tape gradient and central differences
// over every coordinate of every input.
inline double max_gradient_error(const GraphBuilder& build, const std::vector<Tensor>& inputs,
                                 double h = 1e-5, double floor = 1e-6) {
  std::vector<Tensor> analytic;
  evaluate_graph(build, inputs, &analytic);
  double worst = 0.0;
  for (std::size_t which = 0; which < inputs.size(); ++which) {
    auto f = [&](std::span<const double> theta) {
      std::vector<Tensor> moved = inputs;
      std::copy(theta.begin(), theta.end(), moved[which].data().begin());
      return evaluate_graph(build, moved);
    };
    const auto numeric = finite_diff_gradient(f, inputs[which].data(), h);
    for (std::size_t i = 0; i < numeric.size(); ++i)
      worst = std::max(worst, relative_error(analytic[which][i], numeric[i], floor));
  }
  return worst;
}

}  // namespace boltzgate::testing
