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

#ifndef SEMBED_AUTOGRAD_H_
#define SEMBED_AUTOGRAD_H_

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "sembed/rng.h"
#include "sembed/tensor.h"

namespace sembed {

// Named trainable tensor. Modules share storage by sharing the pointer;
// writing through one alias is visible through every other.
struct Param {
  std::string name;
  Tensor value;
  bool trainable = true;
};
using ParamPtr = std::shared_ptr<Param>;

inline ParamPtr make_param(std::string name, Tensor value, bool trainable = true) {
  auto p = std::make_shared<Param>();
  p->name = std::move(name);
  p->value = std::move(value);
  p->value.requires_grad = trainable;
  p->trainable = trainable;
  return p;
}

// Parameter name -> gradient tensor, ordered by name.
using GradientMap = std::map<std::string, Tensor>;

class Tape;

// Handle to a node on a Tape. Cheap to copy; must not outlive its tape.
struct Var {
  int32_t id = -1;
  Tape* tape = nullptr;

  bool valid() const { return tape != nullptr && id >= 0; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
};

// The primitive vocabulary. Every differentiable computation is a sequence
// of these; there is no fusion and no other source of gradients.
enum class Op : uint8_t {
  kLeaf,
  kMatmul,
  kAdd,
  kMul,
  kScale,
  kTranspose,
  kReshape,
  kConcat,
  kSlice,
  kEmbedding,
  kSoftmax,
  kLayerNorm,
  kGelu,
  kRelu,
  kDropout,
  kCrossEntropy,
  kSum,      // axis = all or last (kept dim)
  kMean,     // all elements
  kSqrt,
  kExp,
  kLog,
};

const char* op_name(Op op);

// One recorded primitive application.
struct TapeNode {
  Op op = Op::kLeaf;
  std::vector<int32_t> inputs;
  Tensor value;
  bool needs_grad = false;

  // Leaf payload; null for constants and non-leaves.
  Param* param = nullptr;

  // Saved op context. ctx holds whatever backward or replay needs that is
  // not recoverable from inputs (dropout mask, per-row log-sum-exp, ...).
  Tensor ctx;
  std::vector<int64_t> idata;
  double scalar0 = 0.0;
  double scalar1 = 0.0;
};

// Append-only record of primitive applications. Forward values are computed
// eagerly at record time; backward walks the record in reverse. replay()
// recomputes every node from the leaves and must reproduce the recorded
// values bit-identically (saved randomness, like dropout masks, is reused).
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaf holding a constant; gradients do not flow into it.
  Var constant(Tensor t);

  // Leaf bound to a named parameter. Registering the same Param twice
  // returns the same node, so gradients from every use accumulate.
  Var leaf(const ParamPtr& p);

  // Reverse-mode sweep from a scalar loss. Returns gradients for every
  // registered trainable parameter; parameters the loss does not depend on
  // get zero gradients.
  GradientMap backward(Var loss);

  // Recomputes all node values in recording order. Bit-identical to the
  // original forward pass.
  void replay();

  const Tensor& value(Var v) const;
  const TapeNode& node(int32_t id) const { return nodes_[static_cast<size_t>(id)]; }
  size_t size() const { return nodes_.size(); }

  // Forward outputs are checked for non-finite values when set (default).
  bool check_finite = true;

  // Internal: used by the primitive free functions.
  Var push(TapeNode node);
  std::vector<ParamPtr> registered_params() const { return params_; }

 private:
  std::deque<TapeNode> nodes_;
  std::vector<ParamPtr> params_;
  std::unordered_map<const Param*, int32_t> param_nodes_;
};

inline const Tensor& Var::value() const { return tape->value(*this); }

// ---- Primitives ----

// Batched matrix product. Both operands have rank >= 2; trailing two dims
// multiply, leading dims broadcast.
Var matmul(Var a, Var b);

// Elementwise with right-aligned broadcasting.
Var add(Var a, Var b);
Var mul(Var a, Var b);

// y = c * x for a compile-time-constant c (no gradient into c).
Var scale(Var x, double c);

// Axis permutation; default swaps the last two axes.
Var transpose(Var x);
Var transpose(Var x, std::vector<int64_t> perm);

Var reshape(Var x, Shape shape);

Var concat(const std::vector<Var>& xs, int64_t axis);

// Contiguous range [start, start+len) along axis.
Var slice(Var x, int64_t axis, int64_t start, int64_t len);

// table is [N, d]; ids index rows. Output shape ids_shape + [d].
Var embedding_lookup(Var table, const std::vector<int64_t>& ids,
                     const Shape& ids_shape);

// Softmax over the last axis.
Var softmax(Var x);

// (x - mean) / sqrt(var + eps) over the last axis; no affine part.
Var layer_norm(Var x, double eps = 1e-5);

Var gelu(Var x);  // exact erf form
Var relu(Var x);

// Inverted dropout; scales kept activations by 1/(1-p) at train time and is
// the identity in eval mode. The mask is drawn at record time and reused on
// replay.
Var dropout(Var x, double p, Rng& rng, bool train);

// logits [R, N] against integer targets (length R) -> per-row loss [R].
// Computed via log-sum-exp; never materializes probabilities.
Var cross_entropy_with_logits(Var logits, const std::vector<int64_t>& targets);

Var sum_all(Var x);   // -> [1]
Var sum_last(Var x);  // [..., n] -> [..., 1]
Var mean_all(Var x);  // -> [1]

Var sqrt(Var x);  // domain: x >= 0
Var exp(Var x);
Var log(Var x);  // domain: x > 0

// ---- Convenience compositions (no new node kinds) ----

inline Var neg(Var x) { return scale(x, -1.0); }
inline Var sub(Var a, Var b) { return add(a, neg(b)); }
inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }

// 1/x for strictly positive x, as exp(-log(x)).
inline Var reciprocal_pos(Var x) { return exp(neg(log(x))); }

}  // namespace sembed

#endif  // SEMBED_AUTOGRAD_H_
