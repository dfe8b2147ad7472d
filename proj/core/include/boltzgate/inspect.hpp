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

#include <filesystem>
#include <string>
#include <vector>

#include "boltzgate/data.hpp"
#include "boltzgate/model.hpp"
#include "boltzgate/params.hpp"

namespace boltzgate::inspect {

struct PairEdge {
  std::size_t i = 0;
  std::size_t j = 0;  // i < j
  double weight = 0.0;
};

struct Hyperedge {
  std::size_t module = 0;
  std::size_t position = 0;
  double weight = 0.0;
};

struct InspectOptions {
  double top_fraction = 0.005;      // of the S(S-1)/2 key pairs, per sign
  double hyperedge_threshold = 0.05;  // on |W_lat| averaged over heads and layers
};

struct StructureExport {
  std::vector<double> latent_usage;  // [M]
  Tensor pair_matrix;                // [S x S]
  Tensor module_position;            // [M x S] signed
  Tensor module_position_abs;        // [M x S]
  std::vector<PairEdge> positive_edges;
  std::vector<PairEdge> negative_edges;
  std::vector<Hyperedge> hyperedges;
  std::size_t samples = 0;
};

/// Number of edges kept per sign: ceil(fraction * pairs).
std::size_t top_edge_count(double fraction, std::size_t keys);

/// Averages over layers and heads. latent_usage and pair_matrix are also
/// averaged over the dataset (latent usage over valid query frames only).
StructureExport compute(const ParameterSet& params, const model::ModelConfig& cfg,
                        const data::EncodedBatch& batch, const InspectOptions& opts = {});

/// Writes CSV matrices, edge lists and manifest.json into `dir`; returns the file names.
std::vector<std::string> write(const StructureExport& ex, const InspectOptions& opts,
                               const std::filesystem::path& dir);

}  // namespace boltzgate::inspect
