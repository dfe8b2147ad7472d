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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "boltzgate/data.hpp"
#include "boltzgate/random.hpp"
#include "doctest.h"

using namespace boltzgate;
using namespace boltzgate::data;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name, const std::string& contents) {
  const fs::path dir = fs::temp_directory_path() / "boltzgate_test_data";
  fs::create_directories(dir);
  const fs::path p = dir / name;
  std::ofstream(p, std::ios::binary) << contents;
  return p;
}

std::size_t count(std::string_view seq, std::string_view motif) {
  std::size_t n = 0;
  for (std::size_t pos = seq.find(motif); pos != std::string_view::npos;
       pos = seq.find(motif, pos + 1))
    ++n;
  return n;
}

}  // namespace

TEST_CASE("encoding") {
  CHECK(encode("ACGTN") == std::vector<int>{0, 1, 2, 3, 4});
  CHECK(encode("acgt") == std::vector<int>{0, 1, 2, 3});
  CHECK(encode("AXA") == std::vector<int>{0, 4, 0});
  CHECK(encode("RYK") == std::vector<int>{4, 4, 4});
  CHECK_THROWS(encode(""));
  CHECK(decode(encode("GATTACAN")) == "GATTACAN");
  const std::vector<int> pad{0, 5};
  CHECK_THROWS(decode(pad));
}

TEST_CASE("decode inverts encode on canonical strings") {
  RandomStream rng(1);
  const std::string alphabet = "ACGTN";
  for (int trial = 0; trial < 200; ++trial) {
    std::string s(1 + rng.index(50), 'A');
    for (auto& c : s) c = alphabet[rng.index(5)];
    CHECK(decode(encode(s)) == s);
  }
}

TEST_CASE("padding and truncation") {
  const std::vector<int> two{0, 1};
  const Padded p = pad_or_truncate(two, 6);
  CHECK(p.tokens == std::vector<int>{0, 1, 5, 5, 5, 5});
  CHECK(p.mask == std::vector<std::uint8_t>{1, 1, 0, 0, 0, 0});

  std::vector<int> long_seq(502);
  for (std::size_t i = 0; i < long_seq.size(); ++i) long_seq[i] = static_cast<int>(i % 4);
  const Padded t = pad_or_truncate(long_seq);
  CHECK(t.tokens.size() == 500);
  CHECK(std::equal(t.tokens.begin(), t.tokens.end(), long_seq.begin()));
  for (auto m : t.mask) CHECK(m == 1);

  const std::vector<int> exact(500, 2);
  CHECK(pad_or_truncate(exact).tokens == exact);

  RandomStream rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<int> seq(1 + rng.index(700));
    for (auto& x : seq) x = static_cast<int>(rng.index(5));
    const Padded q = pad_or_truncate(seq);
    REQUIRE(q.tokens.size() == kTargetLength);
    REQUIRE(q.mask.size() == kTargetLength);
    for (std::size_t i = 0; i < kTargetLength; ++i) CHECK((q.mask[i] == 1) == (q.tokens[i] <= 4));
  }
}

TEST_CASE("TSV loading") {
  SUBCASE("single record") {
    const auto r = load_tsv(temp_file("one.tsv", "ACGT\t1\n"));
    REQUIRE(r.size() == 1);
    CHECK(r[0] == SequenceRecord{"ACGT", 1});
  }
  SUBCASE("bad label names the line") {
    CHECK_THROWS_WITH(load_tsv(temp_file("bad.tsv", "ACGT\t2\n")), doctest::Contains(":1"));
    CHECK_THROWS_WITH(load_tsv(temp_file("bad3.tsv", "A\t0\nC\t1\nG\tx\n")),
                      doctest::Contains(":3"));
    CHECK_THROWS(load_tsv(temp_file("notab.tsv", "ACGT 1\n")));
    CHECK_THROWS(load_tsv(temp_file("noseq.tsv", "\t1\n")));
  }
  SUBCASE("CRLF parses like LF, blank lines skipped") {
    const auto lf = load_tsv(temp_file("lf.tsv", "ACGT\t1\n\nGGA\t0\n"));
    const auto crlf = load_tsv(temp_file("crlf.tsv", "ACGT\t1\r\n\r\nGGA\t0\r\n"));
    CHECK(lf == crlf);
    CHECK(lf.size() == 2);
  }
  SUBCASE("missing file") {
    CHECK_THROWS(load_tsv("/nonexistent/boltzgate/data.tsv"));
  }
  SUBCASE("write then read") {
    const std::vector<SequenceRecord> recs{{"ACGTN", 0}, {"TTTT", 1}};
    const fs::path p = fs::temp_directory_path() / "boltzgate_test_data" / "round.tsv";
    write_tsv(p, recs);
    CHECK(load_tsv(p) == recs);
  }
}

TEST_CASE("label rule") {
  SynthSpec spec;
  spec.length = 60;
  const std::string filler(20, 'A');
  CHECK(rule_label(spec, filler + spec.motif_a + spec.motif_b) == 1);
  CHECK(rule_label(spec, filler + spec.motif_c) == 1);
  CHECK(rule_label(spec, filler + spec.motif_a) == 0);
  CHECK(rule_label(spec, filler + spec.motif_b) == 0);
  CHECK(rule_label(spec, filler) == 0);
}

TEST_CASE("synthetic generator") {
  SynthSpec spec;
  spec.noise = 0.0;
  const auto recs = synth_generate(spec, 400);
  for (const auto& r : recs) {
    CHECK(r.seq.size() == spec.length);
    CHECK(r.label == rule_label(spec, r.seq));
    const bool a = count(r.seq, spec.motif_a) > 0, b = count(r.seq, spec.motif_b) > 0;
    const bool c = count(r.seq, spec.motif_c) > 0;
    CHECK(r.label == static_cast<int>((a && b) || c));
  }

  SUBCASE("balance") {
    SynthSpec def;
    const auto many = synth_generate(def, 10000);
    double ones = 0.0;
    for (const auto& r : many) ones += r.label;
    CHECK(std::abs(ones / 10000.0 - 0.5) <= 0.05);
  }
  SUBCASE("noise rate") {
    SynthSpec noisy;
    noisy.noise = 0.2;
    const auto n = synth_generate(noisy, 4000);
    double flipped = 0.0;
    for (const auto& r : n) flipped += r.label != rule_label(noisy, r.seq);
    CHECK(std::abs(flipped / 4000.0 - 0.2) <= 0.03);
  }
  SUBCASE("reproducible and prefix-stable") {
    CHECK(synth_generate(spec, 50) == synth_generate(spec, 50));
    const auto longer = synth_generate(spec, 80);
    const auto shorter = synth_generate(spec, 30);
    CHECK(std::equal(shorter.begin(), shorter.end(), longer.begin()));
    SynthSpec other = spec;
    other.seed = 1;
    CHECK(synth_generate(other, 50) != synth_generate(spec, 50));
  }
  SUBCASE("invalid specs") {
    SynthSpec bad;
    bad.length = 10;
    CHECK_THROWS(synth_generate(bad, 1));
    bad = SynthSpec{};
    bad.copies = 0;
    CHECK_THROWS(bad.validate());
    bad = SynthSpec{};
    bad.noise = 1.5;
    CHECK_THROWS(bad.validate());
  }
}

TEST_CASE("a logistic model on motif counts learns the noiseless rule") {
  SynthSpec spec;
  spec.noise = 0.0;
  spec.seed = 3;
  const auto train = synth_generate(spec, 2000);
  spec.seed = 4;
  const auto test = synth_generate(spec, 1000);
  auto features = [&](const std::string& s) {
    return std::vector<double>{1.0, static_cast<double>(count(s, spec.motif_a)),
                               static_cast<double>(count(s, spec.motif_b)),
                               static_cast<double>(count(s, spec.motif_c))};
  };
  std::vector<double> w(4, 0.0);
  for (int epoch = 0; epoch < 500; ++epoch) {
    std::vector<double> g(4, 0.0);
    for (const auto& r : train) {
      const auto x = features(r.seq);
      double z = 0.0;
      for (std::size_t k = 0; k < 4; ++k) z += w[k] * x[k];
      const double err = 1.0 / (1.0 + std::exp(-z)) - r.label;
      for (std::size_t k = 0; k < 4; ++k) g[k] += err * x[k] / train.size();
    }
    for (std::size_t k = 0; k < 4; ++k) w[k] -= 0.5 * g[k];
  }
  double correct = 0.0;
  for (const auto& r : test) {
    const auto x = features(r.seq);
    double z = 0.0;
    for (std::size_t k = 0; k < 4; ++k) z += w[k] * x[k];
    correct += (z > 0.0) == (r.label == 1);
  }
  MESSAGE("logistic baseline accuracy: " << correct / test.size());
  CHECK(correct / test.size() >= 0.95);
}

TEST_CASE("record encoding and validation split") {
  const std::vector<SequenceRecord> recs{{"ACG", 1}, {"TTTTTTTT", 0}, {"N", 1}};
  const EncodedBatch b = encode_records(recs, 5);
  CHECK(b.size() == 3);
  CHECK(std::vector<int>(b.tokens_of(0).begin(), b.tokens_of(0).end()) ==
        std::vector<int>{0, 1, 2, 5, 5});
  CHECK(std::vector<int>(b.tokens_of(1).begin(), b.tokens_of(1).end()) ==
        std::vector<int>{3, 3, 3, 3, 3});
  CHECK(b.mask_of(2)[0] == 1);
  CHECK(b.mask_of(2)[1] == 0);
  CHECK(b.labels == std::vector<int>{1, 0, 1});

  SynthSpec spec;
  spec.length = 60;
  spec.copies = 1;
  const auto all = synth_generate(spec, 101);
  const auto [train, val] = split_validation(all, 0.1, 7);
  CHECK(val.size() == 10);
  CHECK(train.size() == 91);
  std::set<std::string> seen;
  for (const auto& r : train) seen.insert(r.seq);
  for (const auto& r : val) seen.insert(r.seq);
  CHECK(seen.size() == 101);
  const auto again = split_validation(all, 0.1, 7);
  CHECK(again.first == train);
  CHECK(again.second == val);
  CHECK(split_validation(all, 0.1, 8).second != val);
}
