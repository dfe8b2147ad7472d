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

#include "boltzgate/params.hpp"

#include <cmath>
#include <stdexcept>

namespace boltzgate {

void ParameterSet::add(std::string name, Tensor value) {
  if (contains(name)) throw std::invalid_argument("duplicate parameter '" + name + "'");
  index_.emplace(name, entries_.size());
  entries_.emplace_back(std::move(name), std::move(value));
}

Tensor& ParameterSet::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("unknown parameter '" + name + "'");
  return entries_[it->second].second;
}

const Tensor& ParameterSet::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("unknown parameter '" + name + "'");
  return entries_[it->second].second;
}

std::size_t ParameterSet::numel() const noexcept {
  std::size_t n = 0;
  for (const auto& [name, t] : entries_) n += t.size();
  return n;
}

ParameterSet ParameterSet::zeros_like() const {
  ParameterSet out;
  for (const auto& [name, t] : entries_) out.add(name, Tensor(t.shape()));
  return out;
}

bool ParameterSet::same_layout(const ParameterSet& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].first != other.entries_[i].first ||
        entries_[i].second.shape() != other.entries_[i].second.shape())
      return false;
  }
  return true;
}

std::vector<double> ParameterSet::flatten() const {
  std::vector<double> out;
  out.reserve(numel());
  for (const auto& [name, t] : entries_) out.insert(out.end(), t.data().begin(), t.data().end());
  return out;
}

void ParameterSet::assign_flat(std::span<const double> values) {
  if (values.size() != numel()) throw ShapeError("assign_flat: length mismatch");
  std::size_t offset = 0;
  for (auto& [name, t] : entries_) {
    for (auto& v : t.data()) v = values[offset++];
  }
}

void ParameterSet::axpy(double scale, const ParameterSet& other) {
  if (!same_layout(other)) throw ShapeError("axpy: parameter layouts differ");
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    auto dst = entries_[i].second.data();
    auto src = other.entries_[i].second.data();
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += scale * src[j];
  }
}

void ParameterSet::scale(double factor) {
  for (auto& [name, t] : entries_)
    for (auto& v : t.data()) v *= factor;
}

double ParameterSet::l2_norm() const {
  double sq = 0.0;
  for (const auto& [name, t] : entries_)
    for (double v : t.data()) sq += v * v;
  return std::sqrt(sq);
}

BoundParameters::BoundParameters(Tape& tape, const ParameterSet& params, bool trainable)
    : tape_(&tape), source_(&params) {
  for (const auto& [name, t] : params.entries()) {
    vars_.emplace(name, trainable ? tape.variable(t) : tape.constant(t));
  }
}

Var BoundParameters::operator[](const std::string& name) const {
  auto it = vars_.find(name);
  if (it == vars_.end()) throw std::out_of_range("parameter '" + name + "' is not bound");
  return it->second;
}

ParameterSet BoundParameters::gradients() const {
  ParameterSet out = source_->zeros_like();
  accumulate_gradients(out);
  return out;
}

void BoundParameters::accumulate_gradients(ParameterSet& into) const {
  for (auto& [name, g] : into.entries()) {
    Var v = (*this)[name];
    if (!tape_->has_grad(v)) continue;
    const Tensor grad = tape_->grad(v);
    auto dst = g.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += grad[i];
  }
}

}  // namespace boltzgate
