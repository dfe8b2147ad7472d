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
#include <initializer_list>
#include <random>

namespace boltzgate {

/// Seeded random source that can derive independent child streams.
///
/// Child streams are keyed (e.g. by epoch, sample, layer) so the numbers a
/// sample sees do not depend on how samples are scheduled across threads.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed);

  /// SplitMix64 mixing of a seed with a key path.
  static std::uint64_t derive(std::uint64_t seed, std::initializer_list<std::uint64_t> keys);

  RandomStream child(std::initializer_list<std::uint64_t> keys) const;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t next() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on the open interval (0, 1).
  double open_uniform();
  /// Standard Gumbel draw -log(-log U).
  double gumbel();
  double normal(double mean = 0.0, double stddev = 1.0);
  bool bernoulli(double p) { return uniform() < p; }
  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n);

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace boltzgate
