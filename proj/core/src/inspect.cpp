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

#include "boltzgate/inspect.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <stdexcept>

#include "json.hpp"

namespace boltzgate::inspect {
namespace {

std::vector<PairEdge> strongest(const Tensor& pair, std::size_t k, bool positive) {
  const std::size_t keys = pair.dim(0);
  std::vector<PairEdge> edges;
  for (std::size_t i = 0; i < keys; ++i)
    for (std::size_t j = i + 1; j < keys; ++j) {
      const double w = pair.at(i, j);
      if (positive ? w > 0.0 : w < 0.0) edges.push_back({i, j, w});
    }
  std::stable_sort(edges.begin(), edges.end(), [&](const PairEdge& a, const PairEdge& b) {
    return positive ? a.weight > b.weight : a.weight < b.weight;
  });
  if (edges.size() > k) edges.resize(k);
  return edges;
}

std::ofstream open(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << std::setprecision(17);
  return out;
}

void write_matrix(const std::filesystem::path& path, const Tensor& m) {
  auto out = open(path);
  for (std::size_t i = 0; i < m.dim(0); ++i) {
    for (std::size_t j = 0; j < m.dim(1); ++j) out << (j ? "," : "") << m.at(i, j);
    out << '\n';
  }
}

}  // namespace

std::size_t top_edge_count(double fraction, std::size_t keys) {
  const double pairs = static_cast<double>(keys) * static_cast<double>(keys - 1) / 2.0;
  return static_cast<std::size_t>(std::ceil(fraction * pairs));
}

StructureExport compute(const ParameterSet& params, const model::ModelConfig& cfg,
                        const data::EncodedBatch& batch, const InspectOptions& opts) {
  if (!attention::is_structured(cfg.mode))
    throw std::invalid_argument("inspect needs a structured attention mode, not softmax");
  if (batch.size() == 0) throw std::invalid_argument("cannot inspect an empty dataset");
  const std::size_t keys = cfg.frames(), latents = cfg.num_latent, heads = cfg.heads;
  const auto layers = static_cast<double>(cfg.num_layers);

  StructureExport ex;
  ex.samples = batch.size();
  ex.latent_usage.assign(latents, 0.0);
  ex.pair_matrix = Tensor({keys, keys});
  std::size_t usage_rows = 0;

  for (std::size_t n = 0; n < batch.size(); ++n) {
    Tape tape;
    BoundParameters bound(tape, params, false);
    model::ForwardResult fwd =
        model::forward(bound, batch.tokens_of(n), batch.mask_of(n), cfg, model::ForwardOptions{});
    for (const auto& ls : fwd.layers) {
      const Tensor& r = ls.r.value();
      const Tensor& j = ls.coupling.value();
      for (std::size_t h = 0; h < heads; ++h) {
        for (std::size_t t = 0; t < keys; ++t) {
          if (fwd.frame_mask[t] == 0.0) continue;
          for (std::size_t m = 0; m < latents; ++m) ex.latent_usage[m] += r.at(h, t, m);
          ++usage_rows;
        }
        for (std::size_t a = 0; a < keys; ++a)
          for (std::size_t b = 0; b < keys; ++b) ex.pair_matrix.at(a, b) += j.at(h, a, b);
      }
    }
  }
  for (auto& u : ex.latent_usage) u /= static_cast<double>(std::max<std::size_t>(usage_rows, 1));
  for (auto& v : ex.pair_matrix.data())
    v /= static_cast<double>(batch.size()) * layers * static_cast<double>(heads);

  ex.module_position = Tensor({latents, keys});
  ex.module_position_abs = Tensor({latents, keys});
  for (std::size_t l = 0; l < cfg.num_layers; ++l) {
    const Tensor& w = params.get(model::layer_prefix(l) + "energy.w_lat");
    for (std::size_t h = 0; h < heads; ++h)
      for (std::size_t s = 0; s < keys; ++s)
        for (std::size_t m = 0; m < latents; ++m) {
          ex.module_position.at(m, s) += w.at(h, s, m);
          ex.module_position_abs.at(m, s) += std::abs(w.at(h, s, m));
        }
  }
  const double norm = layers * static_cast<double>(heads);
  for (auto& v : ex.module_position.data()) v /= norm;
  for (auto& v : ex.module_position_abs.data()) v /= norm;

  const std::size_t k = top_edge_count(opts.top_fraction, keys);
  ex.positive_edges = strongest(ex.pair_matrix, k, true);
  ex.negative_edges = strongest(ex.pair_matrix, k, false);
  for (std::size_t m = 0; m < latents; ++m)
    for (std::size_t s = 0; s < keys; ++s) {
      const double w = ex.module_position.at(m, s);
      if (std::abs(w) >= opts.hyperedge_threshold && w != 0.0) ex.hyperedges.push_back({m, s, w});
    }
  return ex;
}

std::vector<std::string> write(const StructureExport& ex, const InspectOptions& opts,
                               const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    auto out = open(dir / "latent_usage.csv");
    for (std::size_t m = 0; m < ex.latent_usage.size(); ++m)
      out << (m ? "," : "") << ex.latent_usage[m];
    out << '\n';
  }
  write_matrix(dir / "pair_matrix.csv", ex.pair_matrix);
  write_matrix(dir / "module_position.csv", ex.module_position);
  write_matrix(dir / "module_position_abs.csv", ex.module_position_abs);
  {
    auto out = open(dir / "pair_edges.csv");
    out << "sign,i,j,weight\n";
    for (const auto& e : ex.positive_edges) out << "+," << e.i << ',' << e.j << ',' << e.weight << '\n';
    for (const auto& e : ex.negative_edges) out << "-," << e.i << ',' << e.j << ',' << e.weight << '\n';
  }
  {
    auto out = open(dir / "hyperedges.csv");
    out << "module,position,weight\n";
    for (const auto& e : ex.hyperedges) out << e.module << ',' << e.position << ',' << e.weight << '\n';
  }
  std::vector<std::string> files{"latent_usage.csv",        "pair_matrix.csv", "module_position.csv",
                                 "module_position_abs.csv", "pair_edges.csv",  "hyperedges.csv"};
  nlohmann::json manifest{
      {"samples", ex.samples},
      {"latents", ex.latent_usage.size()},
      {"keys", ex.pair_matrix.dim(0)},
      {"top_fraction", opts.top_fraction},
      {"hyperedge_threshold", opts.hyperedge_threshold},
      {"positive_edges", ex.positive_edges.size()},
      {"negative_edges", ex.negative_edges.size()},
      {"hyperedges", ex.hyperedges.size()},
      {"files",
       {{"latent_usage", {{"file", files[0]}, {"shape", {ex.latent_usage.size()}}}},
        {"pair_matrix", {{"file", files[1]}, {"shape", ex.pair_matrix.shape()}}},
        {"module_position", {{"file", files[2]}, {"shape", ex.module_position.shape()}}},
        {"module_position_abs", {{"file", files[3]}, {"shape", ex.module_position_abs.shape()}}},
        {"pair_edges", {{"file", files[4]}}},
        {"hyperedges", {{"file", files[5]}}}}}};
  auto out = open(dir / "manifest.json");
  out << manifest.dump(2) << '\n';
  files.push_back("manifest.json");
  return files;
}

}  // namespace boltzgate::inspect
