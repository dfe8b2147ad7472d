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

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace boltzgate::data {

inline constexpr std::size_t kTargetLength = 500;
inline constexpr int kPadToken = 5;

struct SequenceRecord {
  std::string seq;
  int label = 0;

  bool operator==(const SequenceRecord&) const = default;
};

/// A->0 C->1 G->2 T->3 N->4, case-insensitive; any other character maps to N.
std::vector<int> encode(std::string_view seq);

/// Inverse of encode on tokens 0..4.
std::string decode(std::span<const int> tokens);

struct Padded {
  std::vector<int> tokens;
  std::vector<std::uint8_t> mask;
};

/// Keeps the first `target` tokens and right-pads with kPadToken.
Padded pad_or_truncate(std::span<const int> tokens, std::size_t target = kTargetLength);

/// Lines "SEQ<TAB>LABEL"; LF or CRLF; blank lines skipped.
std::vector<SequenceRecord> load_tsv(const std::filesystem::path& path);
void write_tsv(const std::filesystem::path& path, std::span<const SequenceRecord> records);

struct SynthSpec {
  std::size_t length = kTargetLength;
  std::string motif_a = "TGACGTCAGTTC";
  std::string motif_b = "CATCGAGGCTAA";
  std::string motif_c = "GGTACCTTAGCA";
  std::size_t copies = 3;  // planted occurrences of each chosen motif
  std::array<double, 4> background{0.25, 0.25, 0.25, 0.25};  // A, C, G, T
  double noise = 0.05;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Label rule (A and B) or C on the sequence's actual content, before noise.
int rule_label(const SynthSpec& spec, std::string_view seq);

/// Chance motif occurrences are scrubbed from the background. Each sample
/// then draws a fair coin for its class and a planting pattern:
/// positives get {A,B} or {C}, negatives get {}, {A} or {B}. The label is
/// recomputed from the finished sequence and flipped with probability `noise`.
/// Sample i depends only on (seed, i).
std::vector<SequenceRecord> synth_generate(const SynthSpec& spec, std::size_t n);

/// Fixed-length encoded records, row-major.
struct EncodedBatch {
  std::size_t length = 0;
  std::vector<int> tokens;
  std::vector<std::uint8_t> mask;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  std::span<const int> tokens_of(std::size_t i) const {
    return std::span<const int>(tokens).subspan(i * length, length);
  }
  std::span<const std::uint8_t> mask_of(std::size_t i) const {
    return std::span<const std::uint8_t>(mask).subspan(i * length, length);
  }
};

EncodedBatch encode_records(std::span<const SequenceRecord> records,
                            std::size_t target = kTargetLength);

/// Seeded split holding out round(fraction * n) records for validation.
std::pair<std::vector<SequenceRecord>, std::vector<SequenceRecord>> split_validation(
    std::span<const SequenceRecord> records, double fraction, std::uint64_t seed);

}  // namespace boltzgate::data
