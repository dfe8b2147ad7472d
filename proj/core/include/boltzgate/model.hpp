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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "boltzgate/attention.hpp"
#include "boltzgate/energy.hpp"
#include "boltzgate/meanfield.hpp"
#include "boltzgate/params.hpp"
#include "boltzgate/random.hpp"
#include "boltzgate/sampler.hpp"

namespace boltzgate::model {

inline constexpr int kPadToken = 5;
inline constexpr std::size_t kVocabSize = 6;

struct ModelConfig {
  std::size_t vocab_size = kVocabSize;
  std::size_t max_len = 500;
  std::size_t d_model = 128;
  std::size_t num_layers = 3;
  std::size_t ffn_dim = 512;
  double dropout = 0.1;
  std::size_t num_latent = 16;
  std::size_t kernel = 9;
  std::size_t stride = 5;
  std::size_t heads = 4;
  double c_lat_init = 0.5;
  attention::AttentionMode mode = attention::AttentionMode::kBmSoft;
  meanfield::SolverConfig solver;

  void validate() const;
  std::size_t frames() const { return (max_len + stride - 1) / stride; }
  std::size_t head_dim() const { return d_model / heads; }
  /// Left zero padding that centres the kernel on each stride block.
  std::size_t left_pad() const { return kernel > stride ? (kernel - stride) / 2 : 0; }
};

/// Parameters with the documented initialisation: projections N(0, 1/fan_in),
/// unit layer-norm gains, zero biases, zero pairwise and latent couplings.
ParameterSet init_parameters(const ModelConfig& cfg, RandomStream& rng);

std::string layer_prefix(std::size_t layer);

/// Randomness a forward pass consumes. Anything left empty is drawn from
/// `rng` (when set) and written back, so a second pass can replay it.
struct ForwardRandomness {
  std::vector<sampler::GumbelNoise> gumbel;  // one per layer
  std::vector<Tensor> dropout_masks;         // pre-scaled keep masks, in draw order
};

struct ForwardOptions {
  bool training = false;  // dropout on
  std::optional<sampler::GumbelConfig> gumbel;
  RandomStream* rng = nullptr;
  ForwardRandomness* randomness = nullptr;
  bool trace_free_energy = false;  // per-sweep free energies in LayerStructure::trace
};

struct LayerStructure {
  Var h;
  Var coupling;
  Var s;
  Var r;
  Var gates;
  energy::EnergyVars energy;
  meanfield::SolveTrace trace;
};

struct Frontend {
  Var features;              // [frames x d_model]
  energy::KeyMask frame_mask;  // 1 where any token of the stride block is real
};

struct Encoded {
  Var hidden;
  std::vector<LayerStructure> layers;  // empty in softmax mode
};

struct ForwardResult {
  Var logit;
  energy::KeyMask frame_mask;
  std::vector<LayerStructure> layers;
};

/// Frame i is valid iff any token in [i * stride, (i + 1) * stride) is valid.
energy::KeyMask frame_mask(std::span<const std::uint8_t> token_mask, std::size_t stride,
                           std::size_t frames);

/// Embedding, strided convolution and GELU; padded tokens and frames are zeroed.
Frontend embed_and_conv(const BoundParameters& p, std::span<const int> tokens,
                        std::span<const std::uint8_t> mask, const ModelConfig& cfg);
/// Adds the positional table on valid frames, then embedding dropout.
Var add_positions(const BoundParameters& p, const Frontend& front, const ModelConfig& cfg,
                  const ForwardOptions& opts);

Encoded encoder_forward(const BoundParameters& p, Var features, const energy::KeyMask& frame_mask,
                        const ModelConfig& cfg, const ForwardOptions& opts);

Var pool_and_classify(const BoundParameters& p, Var hidden, const energy::KeyMask& frame_mask,
                      const ModelConfig& cfg);

ForwardResult forward(const BoundParameters& p, std::span<const int> tokens,
                      std::span<const std::uint8_t> mask, const ModelConfig& cfg,
                      const ForwardOptions& opts);

/// Attention weights of one layer looked up from bound parameters.
attention::AttentionWeights layer_attention(const BoundParameters& p, std::size_t layer,
                                            const ModelConfig& cfg);

}  // namespace boltzgate::model
