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

#include "sembed/bm25.h"

#include <cmath>

#include "sembed/error.h"

namespace sembed {

Bm25Index::Bm25Index(const std::vector<std::vector<std::string>>& docs,
                     double k1, double b)
    : k1_(k1), b_(b) {
  SEMBED_CHECK(!docs.empty(), ContractError, "empty document collection");
  SEMBED_CHECK(k1 >= 0.0 && b >= 0.0 && b <= 1.0, ContractError,
               "invalid BM25 parameters");
  double total = 0.0;
  for (size_t d = 0; d < docs.size(); ++d) {
    doc_lens_.push_back(static_cast<double>(docs[d].size()));
    total += static_cast<double>(docs[d].size());
    for (const std::string& term : docs[d]) ++tf_[term][d];
  }
  SEMBED_CHECK(total > 0.0, DataError, "all documents are empty");
  avg_len_ = total / static_cast<double>(docs.size());
}

double Bm25Index::idf(const std::string& term) const {
  const auto it = tf_.find(term);
  const double n = static_cast<double>(doc_lens_.size());
  const double df = it == tf_.end() ? 0.0 : static_cast<double>(it->second.size());
  return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

double Bm25Index::score(const std::vector<std::string>& query, size_t doc) const {
  SEMBED_CHECK(doc < doc_lens_.size(), ContractError, "document ", doc,
               " not in index");
  const double len_norm = k1_ * (1.0 - b_ + b_ * doc_lens_[doc] / avg_len_);
  double total = 0.0;
  for (const std::string& term : query) {
    const auto it = tf_.find(term);
    if (it == tf_.end()) continue;
    const auto dit = it->second.find(doc);
    if (dit == it->second.end()) continue;
    const double tf = static_cast<double>(dit->second);
    total += idf(term) * tf * (k1_ + 1.0) / (tf + len_norm);
  }
  return total;
}

std::vector<double> Bm25Index::score_all(const std::vector<std::string>& query) const {
  std::vector<double> out(doc_lens_.size());
  for (size_t d = 0; d < doc_lens_.size(); ++d) out[d] = score(query, d);
  return out;
}

}  // namespace sembed
