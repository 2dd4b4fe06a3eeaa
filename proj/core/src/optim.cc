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

#include "sembed/optim.h"

#include <cmath>

#include "sembed/error.h"

namespace sembed {

void AdamState::update(const std::vector<ParamPtr>& params, const GradientMap& grads) {
  // Validate everything before touching any state: a refused update must
  // leave parameters and moments exactly as they were.
  for (const auto& p : params) {
    if (!p->trainable) continue;
    auto it = grads.find(p->name);
    SEMBED_CHECK(it != grads.end(), ContractError, "no gradient for ", p->name);
    SEMBED_CHECK(it->second.same_shape(p->value), ShapeError,
                 "gradient shape mismatch for ", p->name);
    SEMBED_CHECK(it->second.all_finite(), DomainError,
                 "non-finite gradient for ", p->name, "; update refused");
  }

  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));

  for (const auto& p : params) {
    if (!p->trainable) continue;
    const Tensor& g = grads.at(p->name);
    auto [mit, inserted_m] = m_.try_emplace(p->name, p->value.shape());
    auto [vit, inserted_v] = v_.try_emplace(p->name, p->value.shape());
    Tensor& m = mit->second;
    Tensor& v = vit->second;
    const int64_t n = p->value.numel();
    for (int64_t i = 0; i < n; ++i) {
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p->value[i] -= cfg_.lr * (mhat / (std::sqrt(vhat) + cfg_.eps) +
                                cfg_.weight_decay * p->value[i]);
    }
  }
}

}  // namespace sembed
