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

#ifndef SEMBED_GRADCHECK_H_
#define SEMBED_GRADCHECK_H_

#include <functional>
#include <vector>

#include "sembed/autograd.h"

namespace sembed {

// Central-difference gradient of a scalar function of the given parameters:
// (f(p + eps) - f(p - eps)) / (2 * eps), one coordinate at a time. f is
// re-evaluated from scratch on every call and must be deterministic
// (dropout off, any sampling done before f is built). Used as the
// independent oracle for backward(); deliberately knows nothing about tapes.
GradientMap finite_difference_gradient(const std::function<double()>& f,
                                       const std::vector<ParamPtr>& params,
                                       double eps = 1e-5);

// max over coordinates of |a-b| / max(|a|, |b|, 1). Maps must have equal
// keys and shapes.
double max_rel_error(const GradientMap& a, const GradientMap& b);

}  // namespace sembed

#endif  // SEMBED_GRADCHECK_H_
