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

#include "boltzgate/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "boltzgate/random.hpp"

namespace boltzgate::data {
namespace {

constexpr char kAlphabet[] = "ACGTN";

std::size_t draw_categorical(const std::array<double, 4>& weights, RandomStream& rng) {
  const double total = weights[0] + weights[1] + weights[2] + weights[3];
  double u = rng.uniform() * total;
  for (std::size_t i = 0; i < 3; ++i) {
    if (u < weights[i]) return i;
    u -= weights[i];
  }
  return 3;
}

bool overlaps(std::size_t a, std::size_t alen, std::size_t b, std::size_t blen) {
  return a < b + blen && b < a + alen;
}

// Redraws background windows until no motif occurs by chance, so only
// planted motifs decide the label.
void scrub(std::string& seq, const SynthSpec& spec, RandomStream& rng) {
  const std::string* motifs[] = {&spec.motif_a, &spec.motif_b, &spec.motif_c};
  for (int round = 0; round < 100000; ++round) {
    bool found = false;
    for (const std::string* m : motifs) {
      const auto pos = seq.find(*m);
      if (pos == std::string::npos) continue;
      found = true;
      for (std::size_t k = pos; k < pos + m->size(); ++k)
        seq[k] = kAlphabet[draw_categorical(spec.background, rng)];
    }
    if (!found) return;
  }
  throw std::invalid_argument("background distribution keeps producing motifs");
}

}  // namespace

std::vector<int> encode(std::string_view seq) {
  if (seq.empty()) throw std::invalid_argument("cannot encode an empty sequence");
  std::vector<int> out(seq.size());
  for (std::size_t i = 0; i < seq.size(); ++i) {
    switch (seq[i]) {
      case 'A': case 'a': out[i] = 0; break;
      case 'C': case 'c': out[i] = 1; break;
      case 'G': case 'g': out[i] = 2; break;
      case 'T': case 't': out[i] = 3; break;
      default: out[i] = 4;
    }
  }
  return out;
}

std::string decode(std::span<const int> tokens) {
  std::string out(tokens.size(), 'N');
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] < 0 || tokens[i] > 4)
      throw std::invalid_argument("cannot decode token " + std::to_string(tokens[i]));
    out[i] = kAlphabet[tokens[i]];
  }
  return out;
}

Padded pad_or_truncate(std::span<const int> tokens, std::size_t target) {
  Padded out{std::vector<int>(target, kPadToken), std::vector<std::uint8_t>(target, 0)};
  const std::size_t keep = std::min(target, tokens.size());
  std::copy_n(tokens.begin(), keep, out.tokens.begin());
  std::fill_n(out.mask.begin(), keep, 1);
  return out;
}

std::vector<SequenceRecord> load_tsv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open dataset " + path.string());
  std::vector<SequenceRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto tab = line.find('\t');
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (tab == std::string::npos) throw std::runtime_error(where + ": expected SEQ<TAB>LABEL");
    std::string seq = line.substr(0, tab);
    std::string label = line.substr(tab + 1);
    if (seq.empty()) throw std::runtime_error(where + ": empty sequence");
    if (label != "0" && label != "1")
      throw std::runtime_error(where + ": label must be 0 or 1, got '" + label + "'");
    records.push_back({std::move(seq), label == "1" ? 1 : 0});
  }
  return records;
}

void write_tsv(const std::filesystem::path& path, std::span<const SequenceRecord> records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write dataset " + path.string());
  for (const auto& r : records) out << r.seq << '\t' << r.label << '\n';
  if (!out) throw std::runtime_error("failed writing dataset " + path.string());
}

void SynthSpec::validate() const {
  for (const std::string* m : {&motif_a, &motif_b, &motif_c}) {
    if (m->empty()) throw std::invalid_argument("motifs must be non-empty");
    if (m->size() >= length)
      throw std::invalid_argument("motif '" + *m + "' is not shorter than the sequence length " +
                                  std::to_string(length));
  }
  if (copies == 0) throw std::invalid_argument("copies must be >= 1");
  if (copies * (motif_a.size() + motif_b.size()) > length || copies * motif_c.size() > length)
    throw std::invalid_argument("planted motifs do not fit in one sequence");
  for (double w : background)
    if (!(w >= 0.0)) throw std::invalid_argument("background weights must be non-negative");
  if (background[0] + background[1] + background[2] + background[3] <= 0.0)
    throw std::invalid_argument("background weights must not all be zero");
  if (!(noise >= 0.0 && noise <= 1.0)) throw std::invalid_argument("noise must lie in [0, 1]");
}

int rule_label(const SynthSpec& spec, std::string_view seq) {
  auto has = [&](const std::string& m) { return seq.find(m) != std::string_view::npos; };
  return ((has(spec.motif_a) && has(spec.motif_b)) || has(spec.motif_c)) ? 1 : 0;
}

std::vector<SequenceRecord> synth_generate(const SynthSpec& spec, std::size_t n) {
  spec.validate();
  std::vector<SequenceRecord> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    RandomStream rng = RandomStream(spec.seed).child({i});
    std::string seq(spec.length, 'A');
    for (auto& c : seq) c = kAlphabet[draw_categorical(spec.background, rng)];
    scrub(seq, spec, rng);

    std::vector<const std::string*> plant;
    if (rng.bernoulli(0.5)) {
      if (rng.bernoulli(0.5)) plant = {&spec.motif_a, &spec.motif_b};
      else plant = {&spec.motif_c};
    } else {
      const std::size_t pick = rng.index(3);
      if (pick == 1) plant = {&spec.motif_a};
      if (pick == 2) plant = {&spec.motif_b};
    }
    std::vector<std::pair<std::size_t, std::size_t>> used;
    for (std::size_t copy = 0; copy < spec.copies * plant.size(); ++copy) {
      const std::string* m = plant[copy % plant.size()];
      const std::size_t slots = spec.length - m->size() + 1;
      std::size_t pos = rng.index(slots);
      for (int attempt = 0; attempt < 1000; ++attempt) {
        const bool clash = std::any_of(used.begin(), used.end(), [&](const auto& u) {
          return overlaps(pos, m->size(), u.first, u.second);
        });
        if (!clash) break;
        pos = rng.index(slots);
      }
      seq.replace(pos, m->size(), *m);
      used.emplace_back(pos, m->size());
    }
    int label = rule_label(spec, seq);
    if (rng.bernoulli(spec.noise)) label = 1 - label;
    out.push_back({std::move(seq), label});
  }
  return out;
}

EncodedBatch encode_records(std::span<const SequenceRecord> records, std::size_t target) {
  EncodedBatch batch;
  batch.length = target;
  batch.tokens.reserve(records.size() * target);
  batch.mask.reserve(records.size() * target);
  for (const auto& r : records) {
    if (r.label != 0 && r.label != 1) throw std::invalid_argument("labels must be 0 or 1");
    Padded p = pad_or_truncate(encode(r.seq), target);
    batch.tokens.insert(batch.tokens.end(), p.tokens.begin(), p.tokens.end());
    batch.mask.insert(batch.mask.end(), p.mask.begin(), p.mask.end());
    batch.labels.push_back(r.label);
  }
  return batch;
}

std::pair<std::vector<SequenceRecord>, std::vector<SequenceRecord>> split_validation(
    std::span<const SequenceRecord> records, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction < 1.0))
    throw std::invalid_argument("validation fraction must lie in [0, 1)");
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  RandomStream rng(seed);
  std::shuffle(order.begin(), order.end(), rng.engine());
  const auto held = static_cast<std::size_t>(std::llround(fraction * records.size()));
  std::vector<std::size_t> val_idx(order.begin(), order.begin() + held);
  std::vector<std::size_t> train_idx(order.begin() + held, order.end());
  std::sort(val_idx.begin(), val_idx.end());
  std::sort(train_idx.begin(), train_idx.end());
  std::pair<std::vector<SequenceRecord>, std::vector<SequenceRecord>> out;
  for (auto i : train_idx) out.first.push_back(records[i]);
  for (auto i : val_idx) out.second.push_back(records[i]);
  return out;
}

}  // namespace boltzgate::data
