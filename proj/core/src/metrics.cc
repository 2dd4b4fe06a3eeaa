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

#include "sembed/metrics.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sembed/error.h"

namespace sembed {

double cosine_similarity(const std::vector<double>& u, const std::vector<double>& v) {
  SEMBED_CHECK(u.size() == v.size() && !u.empty(), ShapeError,
               "cosine needs equal-length non-empty vectors");
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  SEMBED_CHECK(nu > 0.0 && nv > 0.0, DomainError,
               "cosine of a zero vector is undefined");
  return dot / (std::sqrt(nu) * std::sqrt(nv));
}

namespace {

// Indices ordered by (score desc, index asc).
std::vector<size_t> ranking(const std::vector<double>& scores) {
  std::vector<size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return scores[a] > scores[b];
  });
  return order;
}

}  // namespace

double average_precision_at_k(const std::vector<double>& scores,
                              const std::vector<int>& labels, int64_t k) {
  SEMBED_CHECK(scores.size() == labels.size() && !scores.empty(), ShapeError,
               "scores/labels length mismatch or empty");
  SEMBED_CHECK(k >= 1, ContractError, "k must be >= 1");
  int64_t total_rel = 0;
  for (int label : labels) {
    SEMBED_CHECK(label == 0 || label == 1, ContractError,
                 "labels must be 0 or 1");
    total_rel += label;
  }
  SEMBED_CHECK(total_rel >= 1, DataError,
               "average precision needs at least one positive label");

  const std::vector<size_t> order = ranking(scores);
  const int64_t cutoff = std::min<int64_t>(k, static_cast<int64_t>(order.size()));
  double sum = 0.0;
  int64_t hits = 0;
  for (int64_t rank = 1; rank <= cutoff; ++rank) {
    if (labels[order[static_cast<size_t>(rank - 1)]] == 1) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(rank);
    }
  }
  return sum / static_cast<double>(std::min(total_rel, k));
}

double average_precision(const std::vector<double>& scores,
                         const std::vector<int>& labels) {
  return average_precision_at_k(scores, labels,
                                static_cast<int64_t>(scores.size()));
}

double mean_average_precision(const std::vector<RankedJudgment>& queries) {
  SEMBED_CHECK(!queries.empty(), ContractError, "no queries");
  double sum = 0.0;
  for (const auto& q : queries) sum += average_precision(q.scores, q.labels);
  return sum / static_cast<double>(queries.size());
}

double mean_average_precision_at_k(const std::vector<RankedJudgment>& queries,
                                   int64_t k) {
  SEMBED_CHECK(!queries.empty(), ContractError, "no queries");
  double sum = 0.0;
  for (const auto& q : queries) sum += average_precision_at_k(q.scores, q.labels, k);
  return sum / static_cast<double>(queries.size());
}

std::vector<double> fractional_ranks(const std::vector<double>& v) {
  SEMBED_CHECK(!v.empty(), ContractError, "empty vector");
  std::vector<size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return v[a] < v[b]; });

  std::vector<double> ranks(v.size());
  size_t i = 0;
  while (i < order.size()) {
    size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    // Positions i..j (0-based) share the average of 1-based ranks i+1..j+1.
    const double shared = 0.5 * static_cast<double>(i + j) + 1.0;
    for (size_t t = i; t <= j; ++t) ranks[order[t]] = shared;
    i = j + 1;
  }
  return ranks;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  SEMBED_CHECK(x.size() == y.size(), ShapeError, "length mismatch");
  SEMBED_CHECK(x.size() >= 2, ContractError, "spearman needs length >= 2");

  const std::vector<double> rx = fractional_ranks(x);
  const std::vector<double> ry = fractional_ranks(y);
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;

  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double dx = rx[i] - mx, dy = ry[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  SEMBED_CHECK(sxx > 0.0 && syy > 0.0, DomainError,
               "spearman is undefined for a constant vector");
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace sembed
