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

#include "boltzgate/tape.hpp"

namespace boltzgate {

const Tensor& Var::value() const { return tape_->value(id_); }

bool Var::requires_grad() const { return tape_->requires_grad(id_); }

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), std::nullopt, {}, false});
  return Var(this, nodes_.size() - 1);
}

Var Tape::variable(Tensor value) {
  nodes_.push_back(Node{std::move(value), std::nullopt, {}, true});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::initializer_list<Var> inputs, Backward backward) {
  bool needs = false;
  for (const Var& in : inputs) {
    if (&in.tape() != this) throw std::logic_error("input recorded on a different tape");
    needs = needs || in.requires_grad();
  }
  nodes_.push_back(
      Node{std::move(value), std::nullopt, needs ? std::move(backward) : Backward{}, needs});
  return Var(this, nodes_.size() - 1);
}

void Tape::backward(Var output) {
  if (output.value().size() != 1) {
    throw ShapeError("backward() requires a scalar output, got " +
                     shape_to_string(output.shape()));
  }
  for (auto& node : nodes_) node.grad.reset();
  if (!nodes_[output.id()].requires_grad) return;
  nodes_[output.id()].grad = Tensor(output.shape(), 1.0);
  for (std::size_t i = output.id() + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (node.grad && node.backward) node.backward(*this, *node.grad);
  }
}

Tensor* Tape::grad_target(Var v) {
  Node& node = nodes_[v.id()];
  if (!node.requires_grad) return nullptr;
  if (!node.grad) node.grad = Tensor(node.value.shape(), 0.0);
  return &*node.grad;
}

Tensor Tape::grad(Var v) const {
  const Node& node = nodes_[v.id()];
  if (node.grad) return *node.grad;
  return Tensor(node.value.shape(), 0.0);
}

}  // namespace boltzgate
