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

#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "boltzgate/tape.hpp"
#include "boltzgate/tensor.hpp"

namespace boltzgate {

/// Named tensors in insertion order.
class ParameterSet {
 public:
  using Entry = std::pair<std::string, Tensor>;

  void add(std::string name, Tensor value);
  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  Tensor& get(const std::string& name);
  const Tensor& get(const std::string& name) const;

  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t numel() const noexcept;
  std::vector<Entry>& entries() noexcept { return entries_; }
  const std::vector<Entry>& entries() const noexcept { return entries_; }

  /// Same names and shapes, all zeros.
  ParameterSet zeros_like() const;
  bool same_layout(const ParameterSet& other) const;

  std::vector<double> flatten() const;
  void assign_flat(std::span<const double> values);

  /// this += scale * other (layouts must match).
  void axpy(double scale, const ParameterSet& other);
  void scale(double factor);
  double l2_norm() const;

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// A ParameterSet registered on a tape, as variables or as constants.
class BoundParameters {
 public:
  BoundParameters(Tape& tape, const ParameterSet& params, bool trainable);

  Var operator[](const std::string& name) const;
  bool contains(const std::string& name) const { return vars_.count(name) != 0; }

  /// Gradients collected after Tape::backward, laid out like the source set.
  ParameterSet gradients() const;
  void accumulate_gradients(ParameterSet& into) const;

 private:
  Tape* tape_;
  const ParameterSet* source_;
  std::unordered_map<std::string, Var> vars_;
};

}  // namespace boltzgate
