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

#ifndef SEMBED_BM25_H_
#define SEMBED_BM25_H_

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace sembed {

// Okapi BM25 over tokenized documents with the never-negative idf variant
// idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5)).
class Bm25Index {
 public:
  explicit Bm25Index(const std::vector<std::vector<std::string>>& docs,
                     double k1 = 1.2, double b = 0.75);

  // Sum over query tokens (duplicates count) of
  // idf(t) * tf * (k1 + 1) / (tf + k1 * (1 - b + b * len/avglen)).
  double score(const std::vector<std::string>& query, size_t doc) const;

  std::vector<double> score_all(const std::vector<std::string>& query) const;

  size_t num_docs() const { return doc_lens_.size(); }
  double avg_doc_len() const { return avg_len_; }
  double idf(const std::string& term) const;

 private:
  double k1_, b_;
  double avg_len_ = 0.0;
  std::vector<double> doc_lens_;
  // term -> (doc -> term frequency); inner map holds only docs containing it
  std::unordered_map<std::string, std::unordered_map<size_t, int64_t>> tf_;
};

}  // namespace sembed

#endif  // SEMBED_BM25_H_
