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

#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace boltzgate {

/// Score assigned to padded key positions; finite so arithmetic never produces NaN.
inline constexpr double kNegMask = -1e4;
/// Probability clamp applied before any logarithm of a gate probability.
inline constexpr double kProbEps = 1e-6;

/// Raised when a numerical routine meets a non-finite or undefined value.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Logistic function, stable for |x| up to the double exponent range.
double sigmoid(double x) noexcept;

/// log(sum(exp(v))) with max subtraction. Throws NumericError("empty reduction").
double logsumexp(std::span<const double> v);

/// Bernoulli entropy -p log p - (1-p) log(1-p), with 0 log 0 = 0.
double bernoulli_entropy(double p) noexcept;

double clamp_probability(double p) noexcept;

using ScalarFunction = std::function<double(std::span<const double>)>;

/// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h for every coordinate.
/// Throws NumericError naming the coordinate when an evaluation is not finite.
std::vector<double> finite_diff_gradient(const ScalarFunction& f, std::span<const double> theta,
                                         double h = 1e-5);

/// |a - b| / max(|a|, |b|, floor), the comparison metric for gradient checks.
double relative_error(double a, double b, double floor) noexcept;

}  // namespace boltzgate
