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

#include "sembed/flow.h"

#include <cmath>

#include "sembed/error.h"

namespace sembed {

namespace {

ParamPtr flow_normal(const std::string& name, Shape shape, uint64_t seed) {
  Rng r(derive_seed(seed, name));
  Tensor t(std::move(shape));
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = r.normal(0.0, 0.02);
  return make_param(name, std::move(t));
}

ParamPtr flow_zeros(const std::string& name, Shape shape) {
  return make_param(name, Tensor::zeros(std::move(shape)));
}

}  // namespace

void FlowConfig::validate() const {
  SEMBED_CHECK(dim >= 2, ContractError, "flow dim must be >= 2");
  SEMBED_CHECK(layers >= 1, ContractError, "flow layers must be >= 1");
  SEMBED_CHECK(hidden >= 1, ContractError, "flow hidden must be >= 1");
}

CouplingFlow::CouplingFlow(const FlowConfig& cfg, uint64_t seed,
                           const std::string& prefix)
    : cfg_(cfg), prefix_(prefix) {
  cfg_.validate();
  for (int64_t l = 0; l < cfg_.layers; ++l) {
    const std::string lp = prefix + ".l" + std::to_string(l);
    Layer layer;
    layer.pass_mask = Tensor::zeros({cfg_.dim});
    for (int64_t i = 0; i < cfg_.dim; ++i) {
      // Even layers pass even coordinates; odd layers pass odd ones.
      if (i % 2 == l % 2) layer.pass_mask[i] = 1.0;
    }
    layer.w1 = flow_normal(lp + ".w1", {cfg_.dim, cfg_.hidden}, seed);
    layer.b1 = flow_zeros(lp + ".b1", {cfg_.hidden});
    layer.ws = flow_zeros(lp + ".ws", {cfg_.hidden, cfg_.dim});
    layer.bs = flow_zeros(lp + ".bs", {cfg_.dim});
    layer.wt = flow_zeros(lp + ".wt", {cfg_.hidden, cfg_.dim});
    layer.bt = flow_zeros(lp + ".bt", {cfg_.dim});
    layers_.push_back(std::move(layer));
  }
}

CouplingFlow::Result CouplingFlow::transform(Tape& tape, Var x) const {
  SEMBED_CHECK(x.shape().size() == 2 && x.shape()[1] == cfg_.dim, ShapeError,
               "flow input must be [B, ", cfg_.dim, "], got ",
               shape_to_string(x.shape()));
  const int64_t b = x.shape()[0];

  Var log_det = tape.constant(Tensor::zeros({b, 1}));
  for (const Layer& layer : layers_) {
    Var m = tape.constant(layer.pass_mask);
    Tensor inv_mask_t = layer.pass_mask;
    for (int64_t i = 0; i < cfg_.dim; ++i) inv_mask_t[i] = 1.0 - inv_mask_t[i];
    Var im = tape.constant(std::move(inv_mask_t));

    Var passed = mul(x, m);
    Var h = gelu(add(matmul(passed, tape.leaf(layer.w1)), tape.leaf(layer.b1)));
    Var s = mul(add(matmul(h, tape.leaf(layer.ws)), tape.leaf(layer.bs)), im);
    Var t = mul(add(matmul(h, tape.leaf(layer.wt)), tape.leaf(layer.bt)), im);

    // z = m*x + (1-m)*(x*exp(s) + t); s is zero on passed coordinates, so
    // exp(s) there is 1 and the log-det sum sees only transformed ones.
    x = add(passed, mul(im, add(mul(x, exp(s)), t)));
    log_det = add(log_det, sum_last(s));
  }
  return {x, log_det};
}

Tensor CouplingFlow::inverse(const Tensor& z) const {
  SEMBED_CHECK(z.shape().size() == 2 && z.shape()[1] == cfg_.dim, ShapeError,
               "flow latent must be [B, ", cfg_.dim, "]");
  Tape tape;
  Var x = tape.constant(z);
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
    const Layer& layer = *it;
    Var m = tape.constant(layer.pass_mask);
    Tensor inv_mask_t = layer.pass_mask;
    for (int64_t i = 0; i < cfg_.dim; ++i) inv_mask_t[i] = 1.0 - inv_mask_t[i];
    Var im = tape.constant(std::move(inv_mask_t));

    // Passed coordinates are unchanged by the forward layer, so the subnet
    // inputs are recoverable from the latent directly.
    Var passed = mul(x, m);
    Var h = gelu(add(matmul(passed, tape.leaf(layer.w1)), tape.leaf(layer.b1)));
    Var s = mul(add(matmul(h, tape.leaf(layer.ws)), tape.leaf(layer.bs)), im);
    Var t = mul(add(matmul(h, tape.leaf(layer.wt)), tape.leaf(layer.bt)), im);
    x = add(passed, mul(im, mul(sub(x, t), exp(neg(s)))));
  }
  return x.value();
}

Tensor CouplingFlow::transform_values(const Tensor& x) const {
  Tape tape;
  Var in = tape.constant(x);
  return transform(tape, in).z.value();
}

Var CouplingFlow::nll(Tape& tape, Var x) const {
  Result r = transform(tape, x);
  Var half_sq = scale(sum_last(mul(r.z, r.z)), 0.5);      // [B, 1]
  Var per_row = sub(half_sq, r.log_det);                  // [B, 1]
  const double log_z = 0.5 * static_cast<double>(cfg_.dim) *
                       std::log(2.0 * 3.14159265358979323846);
  return add(mean_all(per_row), tape.constant(Tensor::full({1}, log_z)));
}

std::vector<ParamPtr> CouplingFlow::parameters() const {
  std::vector<ParamPtr> out;
  for (const Layer& l : layers_) {
    out.insert(out.end(), {l.w1, l.b1, l.ws, l.bs, l.wt, l.bt});
  }
  return out;
}

}  // namespace sembed
