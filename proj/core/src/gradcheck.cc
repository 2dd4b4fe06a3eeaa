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

#include "sembed/gradcheck.h"

#include <cmath>

#include "sembed/error.h"

namespace sembed {

GradientMap finite_difference_gradient(const std::function<double()>& f,
                                       const std::vector<ParamPtr>& params,
                                       double eps) {
  SEMBED_CHECK(eps > 0.0, ContractError, "finite difference eps must be positive");
  GradientMap out;
  for (const auto& p : params) {
    if (!p->trainable) continue;
    Tensor grad(p->value.shape());
    for (int64_t i = 0; i < p->value.numel(); ++i) {
      const double saved = p->value[i];
      p->value[i] = saved + eps;
      const double up = f();
      p->value[i] = saved - eps;
      const double down = f();
      p->value[i] = saved;
      grad[i] = (up - down) / (2.0 * eps);
    }
    SEMBED_CHECK(out.find(p->name) == out.end(), ContractError,
                 "duplicate parameter name: ", p->name);
    out[p->name] = std::move(grad);
  }
  return out;
}

double max_rel_error(const GradientMap& a, const GradientMap& b) {
  SEMBED_CHECK(a.size() == b.size(), ContractError,
               "gradient maps have different key sets");
  double worst = 0.0;
  for (const auto& [name, ga] : a) {
    auto it = b.find(name);
    SEMBED_CHECK(it != b.end(), ContractError, "missing key in map: ", name);
    const Tensor& gb = it->second;
    SEMBED_CHECK(ga.same_shape(gb), ShapeError, "shape mismatch for ", name);
    for (int64_t i = 0; i < ga.numel(); ++i) {
      const double denom = std::max({std::fabs(ga[i]), std::fabs(gb[i]), 1.0});
      worst = std::max(worst, std::fabs(ga[i] - gb[i]) / denom);
    }
  }
  return worst;
}

}  // namespace sembed
