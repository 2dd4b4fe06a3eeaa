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

#ifndef SEMBED_FLOW_H_
#define SEMBED_FLOW_H_

#include <cstdint>
#include <string>
#include <vector>

#include "sembed/autograd.h"

namespace sembed {

struct FlowConfig {
  int64_t dim = 0;      // embedding dimension
  int64_t layers = 4;   // coupling layers, masks alternate even/odd
  int64_t hidden = 64;  // subnet hidden width

  void validate() const;
};

// Invertible map from embedding space to a standard-normal latent, built
// from affine coupling layers. Each layer passes half the coordinates
// through unchanged and applies x * exp(s) + t to the rest, with s and t
// computed from the passed half by a one-hidden-layer GELU subnet whose
// output layer is zero-initialized, so the whole flow starts as identity.
class CouplingFlow {
 public:
  CouplingFlow(const FlowConfig& cfg, uint64_t seed,
               const std::string& prefix = "flow");

  struct Result {
    Var z;        // [B, dim] latent
    Var log_det;  // [B, 1] log |det dz/dx| per row
  };

  // Data -> latent with the per-row log-determinant.
  Result transform(Tape& tape, Var x) const;

  // Latent -> data, exact closed-form layer inversion. Value-level only.
  Tensor inverse(const Tensor& z) const;

  // Value-level data -> latent for embedding pipelines (no gradients).
  Tensor transform_values(const Tensor& x) const;

  // Mean negative log-likelihood per row under the standard-normal latent:
  // 0.5*|z|^2 + (dim/2)*log(2*pi) - log_det, averaged over the batch.
  Var nll(Tape& tape, Var x) const;

  std::vector<ParamPtr> parameters() const;
  const FlowConfig& config() const { return cfg_; }

 private:
  struct Layer {
    Tensor pass_mask;  // [dim], 1.0 on pass-through coordinates
    ParamPtr w1, b1;   // [dim, hidden], [hidden]
    ParamPtr ws, bs;   // [hidden, dim], [dim] -> log-scale, zero-init
    ParamPtr wt, bt;   // [hidden, dim], [dim] -> shift, zero-init
  };

  FlowConfig cfg_;
  std::string prefix_;
  std::vector<Layer> layers_;
};

}  // namespace sembed

#endif  // SEMBED_FLOW_H_
