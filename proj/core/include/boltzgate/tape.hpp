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

#include <cstddef>
#include <deque>
#include <functional>
#include <initializer_list>
#include <optional>

#include "boltzgate/tensor.hpp"

namespace boltzgate {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  double item() const { return value().item(); }
  bool requires_grad() const;
  bool valid() const noexcept { return tape_ != nullptr; }

  Tape& tape() const { return *tape_; }
  std::size_t id() const noexcept { return id_; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Reverse-mode gradient recorder over a fixed forward computation.
///
/// Each recorded node owns its forward value and a backward closure that
/// pushes its output gradient into its inputs. Nodes that depend on no
/// variable are stored without a closure and never receive gradient.
/// Backward visits nodes in reverse recording order and skips any node
/// whose gradient was never written, so branches that do not reach the
/// output contribute nothing (not even zeros).
class Tape {
 public:
  using Backward = std::function<void(Tape&, const Tensor& grad_out)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  Var variable(Tensor value);
  Var record(Tensor value, std::initializer_list<Var> inputs, Backward backward);

  /// Seeds d(output)/d(output) = 1 and propagates. Output must hold one element.
  void backward(Var output);

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

  /// Gradient accumulator for `v`, zero-initialised on first touch.
  /// Returns nullptr when `v` does not depend on any variable.
  Tensor* grad_target(Var v);

  /// Accumulated gradient of `v`; zeros when nothing reached it.
  Tensor grad(Var v) const;
  bool has_grad(Var v) const { return nodes_[v.id()].grad.has_value(); }

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    std::optional<Tensor> grad;
    Backward backward;
    bool requires_grad = false;
  };

  std::deque<Node> nodes_;
};

}  // namespace boltzgate
