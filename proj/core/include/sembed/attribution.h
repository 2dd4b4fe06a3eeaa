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

#ifndef SEMBED_ATTRIBUTION_H_
#define SEMBED_ATTRIBUTION_H_

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace sembed {

// Sentence embedding as a plain callable so analyses run against any model,
// including hand-constructed ones in tests. Must accept an empty token list
// (a removal can consume a whole sentence).
using EmbedFn =
    std::function<std::vector<double>(const std::vector<std::string>& tokens)>;

struct AttributionResult {
  std::string word;
  double drop = 0.0;       // cos(a, b) - min over evaluated removals
  bool removed_from_a = false;  // side(s) attaining that min
  bool removed_from_b = false;
};

// The word whose removal (of all its occurrences) maximally reduces the
// pair's cosine similarity. Candidates are the distinct words of either
// side; only sides containing the word are evaluated. Ties break toward the
// lexicographically smallest word. Each side needs >= 2 tokens.
AttributionResult most_relevant_word(const std::vector<std::string>& a,
                                     const std::vector<std::string>& b,
                                     const EmbedFn& embed);

struct TaggedPair {
  std::vector<std::string> a, a_pos;
  std::vector<std::string> b, b_pos;
  int label = 1;
};

// JSONL: {"a": [tokens], "a_pos": [tags], "b": [tokens], "b_pos": [tags],
// "label": 1}. Tag lists must match their token lists in length.
std::vector<TaggedPair> load_tagged_pairs_jsonl(const std::string& path);

struct PosDistribution {
  std::map<std::string, double> chosen;  // tag share among chosen words
  std::map<std::string, double> prior;   // tag share among all tokens
  int64_t pairs_used = 0;
};

// Distribution of POS tags over each pair's most relevant word, next to the
// prior tag distribution over every token of the used pairs. A pair is used
// when its label is 1 and both sides have >= 2 tokens; the chosen word's tag
// is read at its first occurrence, scanning side a then side b. Both
// distributions sum to 1.
PosDistribution pos_tag_distribution(const std::vector<TaggedPair>& pairs,
                                     const EmbedFn& embed);

// CSV with header tag,chosen_share,prior_share (union of tags, sorted).
std::string pos_distribution_to_csv(const PosDistribution& dist);

}  // namespace sembed

#endif  // SEMBED_ATTRIBUTION_H_
