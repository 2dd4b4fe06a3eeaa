// Copyright (c) 2026 The sembed Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "sembed/attribution.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "sembed/error.h"
#include "sembed/metrics.h"
#include "sembed/rng.h"

namespace sembed {
namespace {

// Hashed bag-of-words embedding: dimension 0 is a constant so the empty
// sentence still has nonzero norm, the rest count tokens per hash bucket.
std::vector<double> hash_embed(const std::vector<std::string>& tokens) {
  std::vector<double> v(9, 0.0);
  v[0] = 0.5;
  for (const std::string& t : tokens) {
    size_t h = 1469598103934665603ull;
    for (char c : t) h = (h ^ static_cast<size_t>(c)) * 1099511628211ull;
    v[1 + h % 8] += 1.0;
  }
  return v;
}

// Straight-line enumeration of every candidate removal, kept deliberately
// independent of the library's loop structure.
AttributionResult enumerate_reference(const std::vector<std::string>& a,
                                      const std::vector<std::string>& b,
                                      const EmbedFn& embed) {
  std::vector<double> ea = embed(a);
  std::vector<double> eb = embed(b);
  double base = cosine_similarity(ea, eb);

  std::set<std::string> words(a.begin(), a.end());
  words.insert(b.begin(), b.end());

  AttributionResult best;
  double best_min = 1e300;
  bool have = false;
  for (const std::string& w : words) {  // std::set iterates lexicographically
    auto strip = [&](const std::vector<std::string>& side) {
      std::vector<std::string> out;
      for (const auto& t : side) {
        if (t != w) out.push_back(t);
      }
      return out;
    };
    bool in_a = std::count(a.begin(), a.end(), w) > 0;
    bool in_b = std::count(b.begin(), b.end(), w) > 0;
    double sim_a = in_a ? cosine_similarity(embed(strip(a)), eb) : 1e300;
    double sim_b = in_b ? cosine_similarity(ea, embed(strip(b))) : 1e300;
    double m = std::min(sim_a, sim_b);
    if (!have || m < best_min) {
      best_min = m;
      best.word = w;
      best.drop = base - m;
      best.removed_from_a = in_a && sim_a <= sim_b;
      best.removed_from_b = in_b && sim_b <= sim_a;
      have = true;
    }
  }
  return best;
}

TEST_CASE("removing the shared word drops cosine the most") {
  // One-hot word embeddings: a = {dog, cat}, b = {dog, bird}. Removing
  // "dog" zeroes the overlap; removing a private word raises the cosine.
  EmbedFn one_hot = [](const std::vector<std::string>& tokens) {
    std::vector<double> v(4, 0.0);
    v[3] = 1e-9;  // keep empty removals non-degenerate
    for (const auto& t : tokens) {
      if (t == "dog") v[0] += 1;
      if (t == "cat") v[1] += 1;
      if (t == "bird") v[2] += 1;
    }
    return v;
  };
  AttributionResult r =
      most_relevant_word({"dog", "cat"}, {"dog", "bird"}, one_hot);
  CHECK(r.word == "dog");
  CHECK(r.drop == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(r.removed_from_a);
  CHECK(r.removed_from_b);
}

TEST_CASE("all-occurrence removal, not just the first") {
  // a = {x, x, y}: removing "x" must strip both copies, leaving exactly
  // {y}. Capture every probe to confirm that removal was evaluated and no
  // partial removal {x, y} ever was.
  std::vector<std::vector<std::string>> probes;
  EmbedFn capturing = [&](const std::vector<std::string>& tokens) {
    probes.push_back(tokens);
    return hash_embed(tokens);
  };
  most_relevant_word({"x", "x", "y"}, {"x", "z"}, capturing);
  CHECK(std::count(probes.begin(), probes.end(), std::vector<std::string>{"y"}) == 1);
  CHECK(std::count(probes.begin(), probes.end(),
                   std::vector<std::string>{"x", "y"}) == 0);
}

TEST_CASE("word private to one side is only removed there") {
  EmbedFn embed = hash_embed;
  AttributionResult r = enumerate_reference({"aa", "bb"}, {"aa", "cc"}, embed);
  AttributionResult lib = most_relevant_word({"aa", "bb"}, {"aa", "cc"}, embed);
  CHECK(lib.word == r.word);
  if (lib.word == "bb") {
    CHECK(lib.removed_from_a);
    CHECK_FALSE(lib.removed_from_b);
  }
  if (lib.word == "cc") {
    CHECK(lib.removed_from_b);
    CHECK_FALSE(lib.removed_from_a);
  }
}

TEST_CASE("ties break toward the lexicographically smallest word") {
  // A constant embedding makes every removal equivalent, so the tie rule
  // decides alone.
  EmbedFn constant = [](const std::vector<std::string>&) {
    return std::vector<double>{1.0, 2.0};
  };
  AttributionResult r =
      most_relevant_word({"zebra", "mango"}, {"apple", "pear"}, constant);
  CHECK(r.word == "apple");
  CHECK(r.drop == doctest::Approx(0.0));
}

TEST_CASE("attribution requires two tokens per side") {
  EmbedFn embed = hash_embed;
  CHECK_THROWS_AS(most_relevant_word({"solo"}, {"aa", "bb"}, embed), ContractError);
  CHECK_THROWS_AS(most_relevant_word({"aa", "bb"}, {"solo"}, embed), ContractError);
  CHECK_THROWS_AS(most_relevant_word({}, {"aa", "bb"}, embed), ContractError);
}

TEST_CASE("agrees with independent enumeration on randomized pairs") {
  Rng rng(2718);
  std::vector<std::string> pool;
  for (int i = 0; i < 12; ++i) pool.push_back("t" + std::to_string(i));

  int checked = 0;
  for (int trial = 0; trial < 300; ++trial) {
    auto draw = [&]() {
      size_t n = 2 + rng.uniform_int(4);
      std::vector<std::string> side;
      for (size_t i = 0; i < n; ++i) {
        side.push_back(pool[rng.uniform_int(pool.size())]);
      }
      return side;
    };
    std::vector<std::string> a = draw();
    std::vector<std::string> b = draw();
    AttributionResult got = most_relevant_word(a, b, hash_embed);
    AttributionResult want = enumerate_reference(a, b, hash_embed);
    CHECK(got.word == want.word);
    CHECK(std::abs(got.drop - want.drop) <= 1e-12);
    CHECK(got.removed_from_a == want.removed_from_a);
    CHECK(got.removed_from_b == want.removed_from_b);
    ++checked;
  }
  CHECK(checked == 300);
}

TEST_CASE("tagged pair loader checks lengths and labels") {
  namespace fs = std::filesystem;
  fs::create_directories("tmp_attr");
  auto write = [&](const std::string& name, const std::string& body) {
    std::ofstream out(fs::path("tmp_attr") / name);
    out << body;
    return (fs::path("tmp_attr") / name).string();
  };

  std::string good = write("good.jsonl",
                           "{\"a\": [\"dog\", \"runs\"], \"a_pos\": [\"NN\", \"VB\"],"
                           " \"b\": [\"dog\", \"sits\"], \"b_pos\": [\"NN\", \"VB\"],"
                           " \"label\": 1}\n"
                           "{\"a\": [\"x\"], \"a_pos\": [\"NN\"],"
                           " \"b\": [\"y\"], \"b_pos\": [\"NN\"]}\n");
  std::vector<TaggedPair> pairs = load_tagged_pairs_jsonl(good);
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0].a == std::vector<std::string>{"dog", "runs"});
  CHECK(pairs[0].a_pos == std::vector<std::string>{"NN", "VB"});
  CHECK(pairs[0].label == 1);
  CHECK(pairs[1].label == 1);  // label defaults to 1

  std::string bad = write("bad.jsonl",
                          "{\"a\": [\"dog\", \"runs\"], \"a_pos\": [\"NN\"],"
                          " \"b\": [\"x\", \"y\"], \"b_pos\": [\"NN\", \"VB\"]}\n");
  CHECK_THROWS_AS(load_tagged_pairs_jsonl(bad), DataError);
  fs::remove_all("tmp_attr");
}

TEST_CASE("pos distribution on a hand-built fixture") {
  // One-hot embedding over {dog, cat, bird}: the shared "dog" always wins.
  EmbedFn one_hot = [](const std::vector<std::string>& tokens) {
    std::vector<double> v(4, 0.0);
    v[3] = 1e-9;
    for (const auto& t : tokens) {
      if (t == "dog") v[0] += 1;
      if (t == "cat") v[1] += 1;
      if (t == "bird") v[2] += 1;
    }
    return v;
  };

  TaggedPair used;
  used.a = {"dog", "cat"};
  used.a_pos = {"NN", "JJ"};
  used.b = {"dog", "bird"};
  used.b_pos = {"NN", "VB"};
  used.label = 1;

  TaggedPair negative = used;
  negative.label = 0;  // skipped

  TaggedPair short_side;
  short_side.a = {"dog"};
  short_side.a_pos = {"NN"};
  short_side.b = {"dog", "bird"};
  short_side.b_pos = {"NN", "VB"};
  short_side.label = 1;  // skipped: side a has a single token

  PosDistribution dist = pos_tag_distribution({used, negative, short_side}, one_hot);
  CHECK(dist.pairs_used == 1);
  REQUIRE(dist.chosen.count("NN") == 1);
  CHECK(dist.chosen.at("NN") == doctest::Approx(1.0));
  CHECK(dist.chosen.size() == 1);
  CHECK(dist.prior.at("NN") == doctest::Approx(0.5));
  CHECK(dist.prior.at("JJ") == doctest::Approx(0.25));
  CHECK(dist.prior.at("VB") == doctest::Approx(0.25));

  std::string csv = pos_distribution_to_csv(dist);
  CHECK(csv ==
        "tag,chosen_share,prior_share\n"
        "JJ,0,0.25\n"
        "NN,1,0.5\n"
        "VB,0,0.25\n");
}

TEST_CASE("pos distribution shares sum to one on mixed data") {
  Rng rng(99);
  std::vector<std::string> words = {"na", "nb", "nc", "nd", "ne", "nf"};
  std::vector<std::string> tags = {"NN", "VB", "JJ"};
  std::vector<TaggedPair> pairs;
  for (int i = 0; i < 30; ++i) {
    TaggedPair p;
    size_t n = 2 + rng.uniform_int(3);
    for (size_t k = 0; k < n; ++k) {
      size_t w = rng.uniform_int(words.size());
      p.a.push_back(words[w]);
      p.a_pos.push_back(tags[w % tags.size()]);
    }
    size_t m = 2 + rng.uniform_int(3);
    for (size_t k = 0; k < m; ++k) {
      size_t w = rng.uniform_int(words.size());
      p.b.push_back(words[w]);
      p.b_pos.push_back(tags[w % tags.size()]);
    }
    p.label = 1;
    pairs.push_back(p);
  }
  PosDistribution dist = pos_tag_distribution(pairs, hash_embed);
  CHECK(dist.pairs_used == 30);
  double chosen_sum = 0.0, prior_sum = 0.0;
  for (const auto& [_, v] : dist.chosen) chosen_sum += v;
  for (const auto& [_, v] : dist.prior) prior_sum += v;
  CHECK(chosen_sum == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(prior_sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("pos distribution with no usable pairs is an error") {
  TaggedPair p;
  p.a = {"x"};
  p.a_pos = {"NN"};
  p.b = {"y", "z"};
  p.b_pos = {"NN", "NN"};
  p.label = 1;
  CHECK_THROWS_AS(pos_tag_distribution({p}, hash_embed), DataError);
}

}  // namespace
}  // namespace sembed
