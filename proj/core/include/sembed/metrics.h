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

#ifndef SEMBED_METRICS_H_
#define SEMBED_METRICS_H_

#include <cstdint>
#include <vector>

namespace sembed {

// Cosine similarity between two equal-length vectors; zero norm is a domain
// error.
double cosine_similarity(const std::vector<double>& u, const std::vector<double>& v);

// Average precision. Items are ranked by (score desc, original index asc);
// AP = mean over positives of precision at the positive's rank. At least one
// positive label is required.
double average_precision(const std::vector<double>& scores,
                         const std::vector<int>& labels);

// AP truncated at rank k with normalizer min(R, k), R = positive count.
// k >= 1; k >= n reproduces plain AP.
double average_precision_at_k(const std::vector<double>& scores,
                              const std::vector<int>& labels, int64_t k);

struct RankedJudgment {
  std::vector<double> scores;
  std::vector<int> labels;
};

// Unweighted mean AP over queries (plain MAP).
double mean_average_precision(const std::vector<RankedJudgment>& queries);

// Unweighted mean truncated AP over queries.
double mean_average_precision_at_k(const std::vector<RankedJudgment>& queries,
                                   int64_t k);

// Average (fractional) ranks, 1-based: tied values share the mean of the
// ranks they span.
std::vector<double> fractional_ranks(const std::vector<double>& v);

// Spearman rank correlation: Pearson correlation of the fractional rank
// vectors. Length >= 2; a constant input vector is a domain error.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace sembed

#endif  // SEMBED_METRICS_H_
