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

namespace boltzgate::detail {

/// c += op(a) * op(b) for row-major storage. `a` is stored as rows x cols
/// (a_rows, a_cols) before the optional transpose; same for `b`.
void gemm_acc(const double* a, std::size_t a_rows, std::size_t a_cols, bool trans_a,
              const double* b, std::size_t b_rows, std::size_t b_cols, bool trans_b,
              double* c);

}  // namespace boltzgate::detail
