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

#include "sembed/sweep.h"

#include <cmath>
#include <limits>
#include <sstream>

#include "sembed/error.h"
#include "sembed/io.h"

namespace sembed {

SweepResult parameter_sweep(const std::string& axis,
                            const std::vector<std::string>& values,
                            const std::vector<uint64_t>& seeds,
                            const std::string& metric, const SweepCellFn& cell) {
  SEMBED_CHECK(!values.empty(), ContractError, "sweep needs at least one value");
  SEMBED_CHECK(!seeds.empty(), ContractError, "sweep needs at least one seed");

  SweepResult result;
  for (const std::string& value : values) {
    std::vector<double> scores;
    for (uint64_t seed : seeds) {
      const double score = cell(value, seed);
      if (std::isfinite(score)) scores.push_back(score);
    }

    SweepRow row;
    row.axis = axis;
    row.value = value;
    row.metric = metric;
    row.n_seeds = static_cast<int64_t>(scores.size());
    if (scores.empty()) {
      row.mean = std::numeric_limits<double>::quiet_NaN();
      row.stddev = std::numeric_limits<double>::quiet_NaN();
    } else {
      double sum = 0.0;
      for (double s : scores) sum += s;
      row.mean = sum / static_cast<double>(scores.size());
      if (scores.size() == 1) {
        row.stddev = 0.0;
      } else {
        double ss = 0.0;
        for (double s : scores) ss += (s - row.mean) * (s - row.mean);
        row.stddev = std::sqrt(ss / static_cast<double>(scores.size() - 1));
      }
    }
    result.rows.push_back(std::move(row));
  }
  return result;
}

std::string sweep_result_to_csv(const SweepResult& result) {
  std::ostringstream out;
  out << "axis,value,metric,mean,std,n_seeds\n";
  for (const SweepRow& row : result.rows) {
    out << csv_escape(row.axis) << ',' << csv_escape(row.value) << ','
        << csv_escape(row.metric) << ',' << format_g9(row.mean) << ','
        << format_g9(row.stddev) << ',' << row.n_seeds << '\n';
  }
  return out.str();
}

}  // namespace sembed
