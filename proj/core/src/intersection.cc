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

#include "sembed/intersection.h"

#include <cmath>

#include "sembed/error.h"

namespace sembed {

IntersectionResult intersection_search(double target, int64_t min_size,
                                       int64_t max_size, double precision,
                                       const ScoreAtSizeFn& score) {
  SEMBED_CHECK(min_size >= 1 && min_size <= max_size, ContractError,
               "need 1 <= min_size <= max_size");
  SEMBED_CHECK(precision >= 0.0, ContractError, "precision must be >= 0");

  IntersectionResult result;
  auto probe = [&](int64_t size) {
    const double s = score(size);
    result.evaluations.emplace_back(size, s);
    return s;
  };

  const double at_min = probe(min_size);
  if (at_min >= target) {
    result.found = true;
    result.size = min_size;
    return result;
  }
  if (min_size == max_size) return result;

  const double at_max = probe(max_size);
  if (at_max < target) return result;  // no intersection within the pool

  // Invariant: score(lo) < target <= score(hi).
  int64_t lo = min_size, hi = max_size;
  while (hi - lo > 1) {
    const int64_t mid = lo + (hi - lo) / 2;
    const double s = probe(mid);
    if (std::fabs(s - target) <= precision) {
      result.found = true;
      result.size = mid;
      return result;
    }
    if (s >= target) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  result.found = true;
  result.size = hi;
  return result;
}

}  // namespace sembed
