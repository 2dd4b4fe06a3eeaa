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

#ifndef SEMBED_SWEEP_H_
#define SEMBED_SWEEP_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace sembed {

struct SweepRow {
  std::string axis;
  std::string value;
  std::string metric;
  double mean = 0.0;
  double stddev = 0.0;
  int64_t n_seeds = 0;  // surviving (non-diverged) seeds
};

struct SweepResult {
  std::vector<SweepRow> rows;  // one per axis value, in input order
};

// Trains and evaluates one sweep cell; returns the metric. A diverged run
// signals failure by returning NaN.
using SweepCellFn = std::function<double(const std::string& value, uint64_t seed)>;

// One row per axis value: mean and sample standard deviation over the seeds
// whose cell succeeded. Failed cells lower n_seeds; a value where every seed
// fails still gets its row, with NaN statistics and n_seeds 0, so failures
// are visible rather than silently dropped.
SweepResult parameter_sweep(const std::string& axis,
                            const std::vector<std::string>& values,
                            const std::vector<uint64_t>& seeds,
                            const std::string& metric, const SweepCellFn& cell);

// CSV with header axis,value,metric,mean,std,n_seeds.
std::string sweep_result_to_csv(const SweepResult& result);

}  // namespace sembed

#endif  // SEMBED_SWEEP_H_
