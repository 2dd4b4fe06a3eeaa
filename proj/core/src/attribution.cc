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
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "sembed/error.h"
#include "sembed/io.h"
#include "sembed/metrics.h"

namespace sembed {

namespace {

std::vector<std::string> remove_word(const std::vector<std::string>& tokens,
                                     const std::string& w) {
  std::vector<std::string> out;
  for (const std::string& t : tokens) {
    if (t != w) out.push_back(t);
  }
  return out;
}

bool contains(const std::vector<std::string>& tokens, const std::string& w) {
  return std::find(tokens.begin(), tokens.end(), w) != tokens.end();
}

}  // namespace

AttributionResult most_relevant_word(const std::vector<std::string>& a,
                                     const std::vector<std::string>& b,
                                     const EmbedFn& embed) {
  SEMBED_CHECK(a.size() >= 2 && b.size() >= 2, ContractError,
               "attribution needs at least two tokens per side");

  const std::vector<double> ea = embed(a);
  const std::vector<double> eb = embed(b);
  const double base = cosine_similarity(ea, eb);

  // Lexicographic candidate order makes "first strict improvement wins"
  // equal to "largest drop, ties to the smallest word".
  std::set<std::string> candidates(a.begin(), a.end());
  candidates.insert(b.begin(), b.end());

  AttributionResult best;
  bool have_best = false;
  for (const std::string& w : candidates) {
    const bool in_a = contains(a, w);
    const bool in_b = contains(b, w);
    double min_sim = 0.0;
    bool min_from_a = false, min_from_b = false;
    bool first = true;
    if (in_a) {
      const double sim = cosine_similarity(embed(remove_word(a, w)), eb);
      min_sim = sim;
      min_from_a = true;
      first = false;
    }
    if (in_b) {
      const double sim = cosine_similarity(ea, embed(remove_word(b, w)));
      if (first || sim < min_sim) {
        min_sim = sim;
        min_from_a = false;
        min_from_b = true;
      } else if (sim == min_sim) {
        min_from_b = true;
      }
    }
    const double drop = base - min_sim;
    if (!have_best || drop > best.drop) {
      best.word = w;
      best.drop = drop;
      best.removed_from_a = min_from_a;
      best.removed_from_b = min_from_b;
      have_best = true;
    }
  }
  return best;
}

std::vector<TaggedPair> load_tagged_pairs_jsonl(const std::string& path) {
  using nlohmann::json;
  std::vector<TaggedPair> out;
  const std::vector<std::string> lines = read_lines(path);
  for (size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const std::string where = path + ":" + std::to_string(i + 1);
    json j = json::parse(lines[i], nullptr, false);
    SEMBED_CHECK(!j.is_discarded(), DataError, "malformed JSON in ", where);

    TaggedPair p;
    auto read_list = [&](const char* key, std::vector<std::string>* dst) {
      SEMBED_CHECK(j.contains(key) && j[key].is_array(), DataError, where,
                   ": missing array field \"", key, "\"");
      for (const auto& e : j[key]) {
        SEMBED_CHECK(e.is_string(), DataError, where, ": \"", key,
                     "\" entry is not a string");
        dst->push_back(e.get<std::string>());
      }
    };
    read_list("a", &p.a);
    read_list("a_pos", &p.a_pos);
    read_list("b", &p.b);
    read_list("b_pos", &p.b_pos);
    SEMBED_CHECK(p.a.size() == p.a_pos.size() && p.b.size() == p.b_pos.size(),
                 DataError, where, ": token/tag length mismatch");
    if (j.contains("label")) {
      SEMBED_CHECK(j["label"].is_number_integer(), DataError, where,
                   ": label is not an integer");
      p.label = j["label"].get<int>();
    }
    out.push_back(std::move(p));
  }
  SEMBED_CHECK(!out.empty(), DataError, path, " has no records");
  return out;
}

PosDistribution pos_tag_distribution(const std::vector<TaggedPair>& pairs,
                                     const EmbedFn& embed) {
  PosDistribution dist;
  std::map<std::string, int64_t> chosen_counts, prior_counts;
  int64_t total_tokens = 0;

  for (const TaggedPair& p : pairs) {
    if (p.label != 1 || p.a.size() < 2 || p.b.size() < 2) continue;
    const AttributionResult r = most_relevant_word(p.a, p.b, embed);

    std::string tag;
    bool found = false;
    for (size_t i = 0; i < p.a.size() && !found; ++i) {
      if (p.a[i] == r.word) {
        tag = p.a_pos[i];
        found = true;
      }
    }
    for (size_t i = 0; i < p.b.size() && !found; ++i) {
      if (p.b[i] == r.word) {
        tag = p.b_pos[i];
        found = true;
      }
    }
    SEMBED_CHECK(found, ContractError, "chosen word missing from both sides");
    ++chosen_counts[tag];
    ++dist.pairs_used;

    for (size_t i = 0; i < p.a.size(); ++i) ++prior_counts[p.a_pos[i]];
    for (size_t i = 0; i < p.b.size(); ++i) ++prior_counts[p.b_pos[i]];
    total_tokens += static_cast<int64_t>(p.a.size() + p.b.size());
  }
  SEMBED_CHECK(dist.pairs_used >= 1, DataError,
               "no usable pairs (label 1 with >= 2 tokens per side)");

  for (const auto& [tag, n] : chosen_counts) {
    dist.chosen[tag] = static_cast<double>(n) / static_cast<double>(dist.pairs_used);
  }
  for (const auto& [tag, n] : prior_counts) {
    dist.prior[tag] = static_cast<double>(n) / static_cast<double>(total_tokens);
  }
  return dist;
}

std::string pos_distribution_to_csv(const PosDistribution& dist) {
  std::set<std::string> tags;
  for (const auto& [tag, _] : dist.chosen) tags.insert(tag);
  for (const auto& [tag, _] : dist.prior) tags.insert(tag);

  std::ostringstream out;
  out << "tag,chosen_share,prior_share\n";
  for (const std::string& tag : tags) {
    const auto c = dist.chosen.find(tag);
    const auto p = dist.prior.find(tag);
    out << csv_escape(tag) << ','
        << format_g9(c == dist.chosen.end() ? 0.0 : c->second) << ','
        << format_g9(p == dist.prior.end() ? 0.0 : p->second) << '\n';
  }
  return out.str();
}

}  // namespace sembed
