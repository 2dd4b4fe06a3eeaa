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

#ifndef SEMBED_OPTIM_H_
#define SEMBED_OPTIM_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sembed/autograd.h"

namespace sembed {

struct AdamConfig {
  double lr = 3e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

// AdamW: bias-corrected first/second moments plus weight decay applied
// directly to the parameter (decoupled from the gradient path). Moments are
// keyed by parameter name so state survives re-registration across tapes.
class AdamState {
 public:
  AdamState() = default;
  explicit AdamState(AdamConfig cfg) : cfg_(cfg) {}

  // Applies one update to every trainable parameter. Every gradient is
  // validated first; a non-finite gradient anywhere refuses the whole
  // update and throws, leaving parameters and moments untouched.
  void update(const std::vector<ParamPtr>& params, const GradientMap& grads);

  int64_t step_count() const { return t_; }
  AdamConfig& config() { return cfg_; }
  const AdamConfig& config() const { return cfg_; }

  const std::map<std::string, Tensor>& first_moments() const { return m_; }
  const std::map<std::string, Tensor>& second_moments() const { return v_; }
  std::map<std::string, Tensor>& mutable_first_moments() { return m_; }
  std::map<std::string, Tensor>& mutable_second_moments() { return v_; }
  void set_step_count(int64_t t) { t_ = t; }

 private:
  AdamConfig cfg_;
  int64_t t_ = 0;
  std::map<std::string, Tensor> m_;
  std::map<std::string, Tensor> v_;
};

}  // namespace sembed

#endif  // SEMBED_OPTIM_H_
