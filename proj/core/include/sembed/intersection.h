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

#ifndef SEMBED_INTERSECTION_H_
#define SEMBED_INTERSECTION_H_

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

namespace sembed {

// Mean supervised score when training on `size` labeled examples (already
// averaged over that caller's seeds).
using ScoreAtSizeFn = std::function<double(int64_t size)>;

struct IntersectionResult {
  bool found = false;
  int64_t size = 0;  // valid only when found
  std::vector<std::pair<int64_t, double>> evaluations;  // in call order
};

// How many labeled examples the supervised baseline needs to catch up to an
// unsupervised score: binary search for the smallest size in [min_size,
// max_size] whose score reaches `target`, assuming the score is
// nondecreasing in size. Stops early when a probed score is within
// `precision` of the target. Returns found = false when even max_size stays
// below the target.
IntersectionResult intersection_search(double target, int64_t min_size,
                                       int64_t max_size, double precision,
                                       const ScoreAtSizeFn& score);

}  // namespace sembed

#endif  // SEMBED_INTERSECTION_H_
