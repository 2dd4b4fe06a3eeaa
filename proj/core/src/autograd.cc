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

#include "sembed/autograd.h"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstring>

#include "sembed/error.h"

namespace sembed {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using CMatMap = Eigen::Map<const RowMat>;

// Right-aligns shape to the given rank by prepending 1s.
Shape pad_shape(const Shape& s, size_t rank) {
  Shape out(rank, 1);
  std::copy(s.begin(), s.end(), out.begin() + (rank - s.size()));
  return out;
}

// Element strides of `shape` as seen while iterating `out_shape`; stride 0
// where `shape` broadcasts.
std::vector<int64_t> effective_strides(const Shape& shape, const Shape& out_shape) {
  const Shape padded = pad_shape(shape, out_shape.size());
  const auto strides = row_major_strides(padded);
  std::vector<int64_t> eff(out_shape.size(), 0);
  for (size_t i = 0; i < out_shape.size(); ++i) {
    eff[i] = (padded[i] == out_shape[i]) ? strides[i] : 0;
  }
  return eff;
}

// Walks `out_shape` in row-major order, calling fn(out_index, a_off, b_off).
template <typename F>
void broadcast_walk(const Shape& out_shape, const std::vector<int64_t>& astr,
                    const std::vector<int64_t>& bstr, F&& fn) {
  const int64_t n = shape_numel(out_shape);
  const int64_t r = static_cast<int64_t>(out_shape.size());
  if (r == 0) {
    if (n > 0) fn(0, 0, 0);
    return;
  }
  std::vector<int64_t> idx(r, 0);
  int64_t aoff = 0, boff = 0;
  for (int64_t i = 0; i < n; ++i) {
    fn(i, aoff, boff);
    for (int64_t d = r - 1; d >= 0; --d) {
      ++idx[d];
      aoff += astr[d];
      boff += bstr[d];
      if (idx[d] < out_shape[d]) break;
      aoff -= astr[d] * out_shape[d];
      boff -= bstr[d] * out_shape[d];
      idx[d] = 0;
    }
  }
}

template <typename F>
Tensor broadcast_binary(const Tensor& a, const Tensor& b, F&& f) {
  if (a.same_shape(b)) {
    Tensor out(a.shape());
    const int64_t n = a.numel();
    for (int64_t i = 0; i < n; ++i) out[i] = f(a[i], b[i]);
    return out;
  }
  const Shape os = broadcast_shapes(a.shape(), b.shape());
  Tensor out(os);
  const auto astr = effective_strides(a.shape(), os);
  const auto bstr = effective_strides(b.shape(), os);
  broadcast_walk(os, astr, bstr, [&](int64_t i, int64_t ao, int64_t bo) {
    out[i] = f(a[ao], b[bo]);
  });
  return out;
}

// Sums `g` down to `target` (the inverse of broadcasting in backward).
Tensor reduce_to_shape(const Tensor& g, const Shape& target) {
  if (g.shape() == target) return g;
  Tensor out(target);
  const auto tstr = effective_strides(target, g.shape());
  const auto gstr = row_major_strides(g.shape());
  broadcast_walk(g.shape(), tstr, gstr, [&](int64_t i, int64_t toff, int64_t) {
    out[toff] += g[i];
  });
  return out;
}

void accumulate(Tensor& dst, const Tensor& src) {
  const int64_t n = dst.numel();
  for (int64_t i = 0; i < n; ++i) dst[i] += src[i];
}

Shape batch_part(const Shape& s) { return Shape(s.begin(), s.end() - 2); }

struct MatmulPlan {
  Shape out_shape;
  Shape batch;
  std::vector<int64_t> astr, bstr, cstr;  // per-batch-dim element strides
  int64_t m, k, n;
};

MatmulPlan plan_matmul(const Shape& ashape, const Shape& bshape) {
  SEMBED_CHECK(ashape.size() >= 2 && bshape.size() >= 2, ShapeError,
               "matmul needs rank >= 2, got ", shape_to_string(ashape), " x ",
               shape_to_string(bshape));
  MatmulPlan p;
  p.m = ashape[ashape.size() - 2];
  p.k = ashape[ashape.size() - 1];
  const int64_t k2 = bshape[bshape.size() - 2];
  p.n = bshape[bshape.size() - 1];
  SEMBED_CHECK(p.k == k2, ShapeError, "matmul inner dims differ: ",
               shape_to_string(ashape), " x ", shape_to_string(bshape));
  p.batch = broadcast_shapes(batch_part(ashape), batch_part(bshape));
  p.out_shape = p.batch;
  p.out_shape.push_back(p.m);
  p.out_shape.push_back(p.n);

  auto mat_strides = [&](const Shape& shape, int64_t rows, int64_t cols) {
    std::vector<int64_t> eff = effective_strides(batch_part(shape), p.batch);
    for (auto& s : eff) s *= rows * cols;
    return eff;
  };
  p.astr = mat_strides(ashape, p.m, p.k);
  p.bstr = mat_strides(bshape, p.k, p.n);
  p.cstr = effective_strides(p.batch, p.batch);
  for (auto& s : p.cstr) s *= p.m * p.n;
  return p;
}

template <typename F>
void matmul_walk(const MatmulPlan& p, F&& fn) {
  const int64_t cells = shape_numel(p.batch);
  const int64_t r = static_cast<int64_t>(p.batch.size());
  std::vector<int64_t> idx(r, 0);
  int64_t ao = 0, bo = 0, co = 0;
  for (int64_t c = 0; c < cells; ++c) {
    fn(ao, bo, co);
    for (int64_t d = r - 1; d >= 0; --d) {
      ++idx[d];
      ao += p.astr[d];
      bo += p.bstr[d];
      co += p.cstr[d];
      if (idx[d] < p.batch[d]) break;
      ao -= p.astr[d] * p.batch[d];
      bo -= p.bstr[d] * p.batch[d];
      co -= p.cstr[d] * p.batch[d];
      idx[d] = 0;
    }
  }
}

std::vector<int64_t> inverse_perm(const std::vector<int64_t>& perm) {
  std::vector<int64_t> inv(perm.size());
  for (size_t i = 0; i < perm.size(); ++i) inv[static_cast<size_t>(perm[i])] = static_cast<int64_t>(i);
  return inv;
}

Tensor permute_tensor(const Tensor& x, const std::vector<int64_t>& perm) {
  const auto& xs = x.shape();
  Shape os(xs.size());
  for (size_t i = 0; i < perm.size(); ++i) os[i] = xs[static_cast<size_t>(perm[i])];
  Tensor out(os);
  const auto out_strides = row_major_strides(os);
  const auto inv = inverse_perm(perm);
  // out offset stride of input dim d is out_strides[inv[d]].
  std::vector<int64_t> ostr(xs.size());
  for (size_t d = 0; d < xs.size(); ++d) ostr[d] = out_strides[static_cast<size_t>(inv[d])];
  const auto istr = row_major_strides(xs);
  broadcast_walk(xs, ostr, istr, [&](int64_t, int64_t ooff, int64_t ioff) {
    out[ooff] = x[ioff];
  });
  return out;
}

double gelu_fwd(double x) { return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2)); }

double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x * M_SQRT1_2));
  const double pdf = std::exp(-0.5 * x * x) * 0.3989422804014327;  // 1/sqrt(2*pi)
  return cdf + x * pdf;
}

int64_t last_dim(const Shape& s) { return s.empty() ? 1 : s.back(); }

// Forward evaluation of a recorded node. `recompute_ctx` refreshes derived
// context (log-sum-exp, inv-std); random context (dropout masks) is always
// reused so replay is bit-identical.
Tensor eval_node(const Tape& tape, TapeNode& node, bool recompute_ctx) {
  auto in = [&](size_t i) -> const Tensor& {
    return tape.node(node.inputs[i]).value;
  };
  switch (node.op) {
    case Op::kLeaf:
      return node.value;
    case Op::kMatmul: {
      const Tensor& a = in(0);
      const Tensor& b = in(1);
      MatmulPlan p = plan_matmul(a.shape(), b.shape());
      Tensor out(p.out_shape);
      matmul_walk(p, [&](int64_t ao, int64_t bo, int64_t co) {
        CMatMap ma(a.data() + ao, p.m, p.k);
        CMatMap mb(b.data() + bo, p.k, p.n);
        MatMap mc(out.data() + co, p.m, p.n);
        mc.noalias() = ma * mb;
      });
      return out;
    }
    case Op::kAdd:
      return broadcast_binary(in(0), in(1), [](double x, double y) { return x + y; });
    case Op::kMul:
      return broadcast_binary(in(0), in(1), [](double x, double y) { return x * y; });
    case Op::kScale: {
      Tensor out = in(0);
      const double c = node.scalar0;
      for (int64_t i = 0; i < out.numel(); ++i) out[i] *= c;
      return out;
    }
    case Op::kTranspose:
      return permute_tensor(in(0), node.idata);
    case Op::kReshape: {
      Tensor out = in(0);
      return Tensor(Shape(node.idata.begin(), node.idata.end()), std::move(out.vec()));
    }
    case Op::kConcat: {
      const int64_t axis = node.scalar0 >= 0 ? static_cast<int64_t>(node.scalar0) : 0;
      const Tensor& first = in(0);
      Shape os = first.shape();
      int64_t total = 0;
      for (size_t i = 0; i < node.inputs.size(); ++i) total += in(i).shape()[static_cast<size_t>(axis)];
      os[static_cast<size_t>(axis)] = total;
      Tensor out(os);
      const int64_t outer = shape_numel(Shape(os.begin(), os.begin() + axis));
      const int64_t inner = shape_numel(Shape(os.begin() + axis + 1, os.end()));
      int64_t used = 0;
      for (size_t i = 0; i < node.inputs.size(); ++i) {
        const Tensor& x = in(i);
        const int64_t ext = x.shape()[static_cast<size_t>(axis)];
        for (int64_t o = 0; o < outer; ++o) {
          std::memcpy(out.data() + (o * total + used) * inner,
                      x.data() + o * ext * inner,
                      static_cast<size_t>(ext * inner) * sizeof(double));
        }
        used += ext;
      }
      return out;
    }
    case Op::kSlice: {
      const Tensor& x = in(0);
      const int64_t axis = node.idata[0], start = node.idata[1], len = node.idata[2];
      const auto& xs = x.shape();
      Shape os = xs;
      os[static_cast<size_t>(axis)] = len;
      Tensor out(os);
      const int64_t outer = shape_numel(Shape(xs.begin(), xs.begin() + axis));
      const int64_t inner = shape_numel(Shape(xs.begin() + axis + 1, xs.end()));
      const int64_t ext = xs[static_cast<size_t>(axis)];
      for (int64_t o = 0; o < outer; ++o) {
        std::memcpy(out.data() + o * len * inner,
                    x.data() + (o * ext + start) * inner,
                    static_cast<size_t>(len * inner) * sizeof(double));
      }
      return out;
    }
    case Op::kEmbedding: {
      const Tensor& table = in(0);
      const int64_t d = table.shape()[1];
      const int64_t rank = node.idata[0];
      Shape os(node.idata.begin() + 1, node.idata.begin() + 1 + rank);
      os.push_back(d);
      Tensor out(os);
      const int64_t rows = out.numel() / d;
      const int64_t* ids = node.idata.data() + 1 + rank;
      for (int64_t r = 0; r < rows; ++r) {
        std::memcpy(out.data() + r * d, table.data() + ids[r] * d,
                    static_cast<size_t>(d) * sizeof(double));
      }
      return out;
    }
    case Op::kSoftmax: {
      const Tensor& x = in(0);
      const int64_t n = last_dim(x.shape());
      const int64_t rows = x.numel() / n;
      Tensor out(x.shape());
      for (int64_t r = 0; r < rows; ++r) {
        const double* xr = x.data() + r * n;
        double* yr = out.data() + r * n;
        double m = xr[0];
        for (int64_t j = 1; j < n; ++j) m = std::max(m, xr[j]);
        double s = 0.0;
        for (int64_t j = 0; j < n; ++j) {
          yr[j] = std::exp(xr[j] - m);
          s += yr[j];
        }
        const double invs = 1.0 / s;
        for (int64_t j = 0; j < n; ++j) yr[j] *= invs;
      }
      return out;
    }
    case Op::kLayerNorm: {
      const Tensor& x = in(0);
      const double eps = node.scalar0;
      const int64_t n = last_dim(x.shape());
      const int64_t rows = x.numel() / n;
      Tensor out(x.shape());
      if (recompute_ctx) node.ctx = Tensor({rows});
      for (int64_t r = 0; r < rows; ++r) {
        const double* xr = x.data() + r * n;
        double* yr = out.data() + r * n;
        double mu = 0.0;
        for (int64_t j = 0; j < n; ++j) mu += xr[j];
        mu /= static_cast<double>(n);
        double var = 0.0;
        for (int64_t j = 0; j < n; ++j) {
          const double dz = xr[j] - mu;
          var += dz * dz;
        }
        var /= static_cast<double>(n);
        const double inv = 1.0 / std::sqrt(var + eps);
        if (recompute_ctx) node.ctx[r] = inv;
        for (int64_t j = 0; j < n; ++j) yr[j] = (xr[j] - mu) * inv;
      }
      return out;
    }
    case Op::kGelu: {
      Tensor out = in(0);
      for (int64_t i = 0; i < out.numel(); ++i) out[i] = gelu_fwd(out[i]);
      return out;
    }
    case Op::kRelu: {
      Tensor out = in(0);
      for (int64_t i = 0; i < out.numel(); ++i) out[i] = out[i] > 0.0 ? out[i] : 0.0;
      return out;
    }
    case Op::kDropout:
      // ctx is the pre-scaled keep mask, drawn once at record time.
      return broadcast_binary(in(0), node.ctx, [](double x, double m) { return x * m; });
    case Op::kCrossEntropy: {
      const Tensor& x = in(0);
      const int64_t n = x.shape()[1];
      const int64_t rows = x.shape()[0];
      Tensor out({rows});
      if (recompute_ctx) node.ctx = Tensor({rows});
      for (int64_t r = 0; r < rows; ++r) {
        const double* xr = x.data() + r * n;
        double m = xr[0];
        for (int64_t j = 1; j < n; ++j) m = std::max(m, xr[j]);
        double s = 0.0;
        for (int64_t j = 0; j < n; ++j) s += std::exp(xr[j] - m);
        const double lse = m + std::log(s);
        if (recompute_ctx) node.ctx[r] = lse;
        out[r] = lse - xr[node.idata[static_cast<size_t>(r)]];
      }
      return out;
    }
    case Op::kSum: {
      const Tensor& x = in(0);
      if (node.idata[0] == 0) {  // all
        double s = 0.0;
        for (int64_t i = 0; i < x.numel(); ++i) s += x[i];
        return Tensor({1}, {s});
      }
      // last axis, kept
      const int64_t n = last_dim(x.shape());
      const int64_t rows = x.numel() / n;
      Shape os = x.shape();
      if (os.empty()) os.push_back(1);
      os.back() = 1;
      Tensor out(os);
      for (int64_t r = 0; r < rows; ++r) {
        double s = 0.0;
        const double* xr = x.data() + r * n;
        for (int64_t j = 0; j < n; ++j) s += xr[j];
        out[r] = s;
      }
      return out;
    }
    case Op::kMean: {
      const Tensor& x = in(0);
      double s = 0.0;
      for (int64_t i = 0; i < x.numel(); ++i) s += x[i];
      return Tensor({1}, {s / static_cast<double>(x.numel())});
    }
    case Op::kSqrt: {
      Tensor out = in(0);
      for (int64_t i = 0; i < out.numel(); ++i) out[i] = std::sqrt(out[i]);
      return out;
    }
    case Op::kExp: {
      Tensor out = in(0);
      for (int64_t i = 0; i < out.numel(); ++i) out[i] = std::exp(out[i]);
      return out;
    }
    case Op::kLog: {
      Tensor out = in(0);
      for (int64_t i = 0; i < out.numel(); ++i) out[i] = std::log(out[i]);
      return out;
    }
  }
  throw ContractError("eval_node: unknown op");
}

}  // namespace

const char* op_name(Op op) {
  switch (op) {
    case Op::kLeaf: return "leaf";
    case Op::kMatmul: return "matmul";
    case Op::kAdd: return "add";
    case Op::kMul: return "mul";
    case Op::kScale: return "scale";
    case Op::kTranspose: return "transpose";
    case Op::kReshape: return "reshape";
    case Op::kConcat: return "concat";
    case Op::kSlice: return "slice";
    case Op::kEmbedding: return "embedding-lookup";
    case Op::kSoftmax: return "softmax";
    case Op::kLayerNorm: return "layer-normalization";
    case Op::kGelu: return "gelu";
    case Op::kRelu: return "relu";
    case Op::kDropout: return "dropout";
    case Op::kCrossEntropy: return "cross-entropy-with-logits";
    case Op::kSum: return "sum";
    case Op::kMean: return "mean";
    case Op::kSqrt: return "sqrt";
    case Op::kExp: return "exp";
    case Op::kLog: return "log";
  }
  return "?";
}

Var Tape::constant(Tensor t) {
  SEMBED_CHECK(!t.requires_grad, ContractError,
               "constant() given a tensor with requires_grad; use leaf() with a named Param");
  TapeNode n;
  n.op = Op::kLeaf;
  n.value = std::move(t);
  n.needs_grad = false;
  return push(std::move(n));
}

Var Tape::leaf(const ParamPtr& p) {
  SEMBED_CHECK(p != nullptr, ContractError, "leaf: null param");
  auto it = param_nodes_.find(p.get());
  if (it != param_nodes_.end()) return Var{it->second, this};
  for (const auto& q : params_) {
    SEMBED_CHECK(q->name != p->name, ContractError,
                 "duplicate parameter name on tape: ", p->name);
  }
  TapeNode n;
  n.op = Op::kLeaf;
  n.value = p->value;
  n.param = p.get();
  n.needs_grad = p->trainable;
  Var v = push(std::move(n));
  params_.push_back(p);
  param_nodes_[p.get()] = v.id;
  return v;
}

Var Tape::push(TapeNode node) {
  if (node.op != Op::kLeaf) {
    for (int32_t i : node.inputs) {
      if (nodes_[static_cast<size_t>(i)].needs_grad) {
        node.needs_grad = true;
        break;
      }
    }
  }
  if (check_finite) {
    SEMBED_CHECK(node.value.all_finite(), DomainError,
                 op_name(node.op), ": non-finite value in output");
  }
  nodes_.push_back(std::move(node));
  return Var{static_cast<int32_t>(nodes_.size() - 1), this};
}

const Tensor& Tape::value(Var v) const {
  SEMBED_CHECK(v.tape == this && v.id >= 0 &&
                   static_cast<size_t>(v.id) < nodes_.size(),
               ContractError, "Var does not belong to this tape");
  return nodes_[static_cast<size_t>(v.id)].value;
}

void Tape::replay() {
  for (auto& n : nodes_) {
    if (n.op == Op::kLeaf) continue;
    n.value = eval_node(*this, n, /*recompute_ctx=*/n.op != Op::kDropout);
  }
}

GradientMap Tape::backward(Var loss) {
  SEMBED_CHECK(loss.tape == this, ContractError, "loss Var from another tape");
  SEMBED_CHECK(value(loss).numel() == 1, ContractError,
               "backward requires a scalar loss, got shape ",
               shape_to_string(value(loss).shape()));

  std::vector<Tensor> adj(nodes_.size());
  std::vector<bool> has_adj(nodes_.size(), false);
  auto seed = [&](int32_t id, Tensor t) {
    if (!has_adj[static_cast<size_t>(id)]) {
      adj[static_cast<size_t>(id)] = std::move(t);
      has_adj[static_cast<size_t>(id)] = true;
    } else {
      accumulate(adj[static_cast<size_t>(id)], t);
    }
  };

  seed(loss.id, Tensor::full(value(loss).shape(), 1.0));

  for (int32_t i = loss.id; i >= 0; --i) {
    TapeNode& n = nodes_[static_cast<size_t>(i)];
    if (!n.needs_grad || !has_adj[static_cast<size_t>(i)] || n.op == Op::kLeaf) continue;
    const Tensor& g = adj[static_cast<size_t>(i)];
    auto in_val = [&](size_t j) -> const Tensor& {
      return nodes_[static_cast<size_t>(n.inputs[j])].value;
    };
    auto in_needs = [&](size_t j) {
      return nodes_[static_cast<size_t>(n.inputs[j])].needs_grad;
    };

    switch (n.op) {
      case Op::kMatmul: {
        const Tensor& a = in_val(0);
        const Tensor& b = in_val(1);
        MatmulPlan p = plan_matmul(a.shape(), b.shape());
        if (in_needs(0)) {
          Tensor da(a.shape());
          matmul_walk(p, [&](int64_t ao, int64_t bo, int64_t co) {
            CMatMap mg(g.data() + co, p.m, p.n);
            CMatMap mb(b.data() + bo, p.k, p.n);
            MatMap mda(da.data() + ao, p.m, p.k);
            mda.noalias() += mg * mb.transpose();
          });
          seed(n.inputs[0], std::move(da));
        }
        if (in_needs(1)) {
          Tensor db(b.shape());
          matmul_walk(p, [&](int64_t ao, int64_t bo, int64_t co) {
            CMatMap mg(g.data() + co, p.m, p.n);
            CMatMap ma(a.data() + ao, p.m, p.k);
            MatMap mdb(db.data() + bo, p.k, p.n);
            mdb.noalias() += ma.transpose() * mg;
          });
          seed(n.inputs[1], std::move(db));
        }
        break;
      }
      case Op::kAdd: {
        if (in_needs(0)) seed(n.inputs[0], reduce_to_shape(g, in_val(0).shape()));
        if (in_needs(1)) seed(n.inputs[1], reduce_to_shape(g, in_val(1).shape()));
        break;
      }
      case Op::kMul: {
        if (in_needs(0)) {
          Tensor t = broadcast_binary(g, in_val(1), [](double x, double y) { return x * y; });
          seed(n.inputs[0], reduce_to_shape(t, in_val(0).shape()));
        }
        if (in_needs(1)) {
          Tensor t = broadcast_binary(g, in_val(0), [](double x, double y) { return x * y; });
          seed(n.inputs[1], reduce_to_shape(t, in_val(1).shape()));
        }
        break;
      }
      case Op::kScale: {
        Tensor t = g;
        for (int64_t j = 0; j < t.numel(); ++j) t[j] *= n.scalar0;
        seed(n.inputs[0], std::move(t));
        break;
      }
      case Op::kTranspose: {
        seed(n.inputs[0], permute_tensor(g, inverse_perm(n.idata)));
        break;
      }
      case Op::kReshape: {
        Tensor t = g;
        seed(n.inputs[0], Tensor(in_val(0).shape(), std::move(t.vec())));
        break;
      }
      case Op::kConcat: {
        const int64_t axis = static_cast<int64_t>(n.scalar0);
        const auto& os = n.value.shape();
        const int64_t total = os[static_cast<size_t>(axis)];
        const int64_t outer = shape_numel(Shape(os.begin(), os.begin() + axis));
        const int64_t inner = shape_numel(Shape(os.begin() + axis + 1, os.end()));
        int64_t used = 0;
        for (size_t j = 0; j < n.inputs.size(); ++j) {
          const int64_t ext = in_val(j).shape()[static_cast<size_t>(axis)];
          if (in_needs(j)) {
            Tensor t(in_val(j).shape());
            for (int64_t o = 0; o < outer; ++o) {
              std::memcpy(t.data() + o * ext * inner,
                          g.data() + (o * total + used) * inner,
                          static_cast<size_t>(ext * inner) * sizeof(double));
            }
            seed(n.inputs[j], std::move(t));
          }
          used += ext;
        }
        break;
      }
      case Op::kSlice: {
        const int64_t axis = n.idata[0], start = n.idata[1], len = n.idata[2];
        const auto& xs = in_val(0).shape();
        Tensor t(xs);
        const int64_t outer = shape_numel(Shape(xs.begin(), xs.begin() + axis));
        const int64_t inner = shape_numel(Shape(xs.begin() + axis + 1, xs.end()));
        const int64_t ext = xs[static_cast<size_t>(axis)];
        for (int64_t o = 0; o < outer; ++o) {
          std::memcpy(t.data() + (o * ext + start) * inner,
                      g.data() + o * len * inner,
                      static_cast<size_t>(len * inner) * sizeof(double));
        }
        seed(n.inputs[0], std::move(t));
        break;
      }
      case Op::kEmbedding: {
        const Tensor& table = in_val(0);
        const int64_t d = table.shape()[1];
        Tensor t(table.shape());
        const int64_t rank = n.idata[0];
        const int64_t rows = n.value.numel() / d;
        const int64_t* ids = n.idata.data() + 1 + rank;
        for (int64_t r = 0; r < rows; ++r) {
          double* dst = t.data() + ids[r] * d;
          const double* src = g.data() + r * d;
          for (int64_t j = 0; j < d; ++j) dst[j] += src[j];
        }
        seed(n.inputs[0], std::move(t));
        break;
      }
      case Op::kSoftmax: {
        const Tensor& y = n.value;
        const int64_t m = last_dim(y.shape());
        const int64_t rows = y.numel() / m;
        Tensor t(y.shape());
        for (int64_t r = 0; r < rows; ++r) {
          const double* yr = y.data() + r * m;
          const double* gr = g.data() + r * m;
          double dot = 0.0;
          for (int64_t j = 0; j < m; ++j) dot += gr[j] * yr[j];
          double* tr = t.data() + r * m;
          for (int64_t j = 0; j < m; ++j) tr[j] = yr[j] * (gr[j] - dot);
        }
        seed(n.inputs[0], std::move(t));
        break;
      }
      case Op::kLayerNorm: {
        const Tensor& y = n.value;
        const int64_t m = last_dim(y.shape());
        const int64_t rows = y.numel() / m;
        Tensor t(y.shape());
        for (int64_t r = 0; r < rows; ++r) {
          const double* yr = y.data() + r * m;
          const double* gr = g.data() + r * m;
          const double inv = n.ctx[r];
          double gmean = 0.0, gymean = 0.0;
          for (int64_t j = 0; j < m; ++j) {
            gmean += gr[j];
            gymean += gr[j] * yr[j];
          }
          gmean /= static_cast<double>(m);
          gymean /= static_cast<double>(m);
          double* tr = t.data() + r * m;
          for (int64_t j = 0; j < m; ++j) {
            tr[j] = inv * (gr[j] - gmean - yr[j] * gymean);
          }
        }
        seed(n.inputs[0], std::move(t));
        break;
      }
      case Op::kGelu: {
        const Tensor& x = in_val(0);
        Tensor t(x.shape());
        for (int64_t j = 0; j < t.numel(); ++j) t[j] = g[j] * gelu_grad(x[j]);
        seed(n.inputs[0], std::move(t));
        break;
      }
      case Op::kRelu: {
        const Tensor& x = in_val(0);
        Tensor t(x.shape());
        for (int64_t j = 0; j < t.numel(); ++j) t[j] = x[j] > 0.0 ? g[j] : 0.0;
        seed(n.inputs[0], std::move(t));
        break;
      }
      case Op::kDropout: {
        Tensor t = broadcast_binary(g, n.ctx, [](double x, double m2) { return x * m2; });
        seed(n.inputs[0], std::move(t));
        break;
      }
      case Op::kCrossEntropy: {
        const Tensor& x = in_val(0);
        const int64_t m = x.shape()[1];
        const int64_t rows = x.shape()[0];
        Tensor t(x.shape());
        for (int64_t r = 0; r < rows; ++r) {
          const double lse = n.ctx[r];
          const double* xr = x.data() + r * m;
          double* tr = t.data() + r * m;
          const double gr = g[r];
          for (int64_t j = 0; j < m; ++j) tr[j] = gr * std::exp(xr[j] - lse);
          tr[n.idata[static_cast<size_t>(r)]] -= gr;
        }
        seed(n.inputs[0], std::move(t));
        break;
      }
      case Op::kSum: {
        const Tensor& x = in_val(0);
        Tensor t(x.shape());
        if (n.idata[0] == 0) {
          const double gv = g[0];
          for (int64_t j = 0; j < t.numel(); ++j) t[j] = gv;
        } else {
          const int64_t m = last_dim(x.shape());
          const int64_t rows = x.numel() / m;
          for (int64_t r = 0; r < rows; ++r) {
            const double gv = g[r];
            double* tr = t.data() + r * m;
            for (int64_t j = 0; j < m; ++j) tr[j] = gv;
          }
        }
        seed(n.inputs[0], std::move(t));
        break;
      }
      case Op::kMean: {
        const Tensor& x = in_val(0);
        Tensor t(x.shape());
        const double gv = g[0] / static_cast<double>(x.numel());
        for (int64_t j = 0; j < t.numel(); ++j) t[j] = gv;
        seed(n.inputs[0], std::move(t));
        break;
      }
      case Op::kSqrt: {
        const Tensor& y = n.value;
        Tensor t(y.shape());
        for (int64_t j = 0; j < t.numel(); ++j) t[j] = g[j] * 0.5 / y[j];
        seed(n.inputs[0], std::move(t));
        break;
      }
      case Op::kExp: {
        const Tensor& y = n.value;
        Tensor t(y.shape());
        for (int64_t j = 0; j < t.numel(); ++j) t[j] = g[j] * y[j];
        seed(n.inputs[0], std::move(t));
        break;
      }
      case Op::kLog: {
        const Tensor& x = in_val(0);
        Tensor t(x.shape());
        for (int64_t j = 0; j < t.numel(); ++j) t[j] = g[j] / x[j];
        seed(n.inputs[0], std::move(t));
        break;
      }
      case Op::kLeaf:
        break;
    }
  }

  GradientMap grads;
  for (const auto& p : params_) {
    if (!p->trainable) continue;
    const int32_t id = param_nodes_.at(p.get());
    if (has_adj[static_cast<size_t>(id)]) {
      grads[p->name] = std::move(adj[static_cast<size_t>(id)]);
    } else {
      grads[p->name] = Tensor(p->value.shape());
    }
  }
  return grads;
}

namespace {

Tape* common_tape(std::initializer_list<Var> vars) {
  Tape* t = nullptr;
  for (const Var& v : vars) {
    SEMBED_CHECK(v.valid(), ContractError, "invalid Var");
    if (t == nullptr) t = v.tape;
    SEMBED_CHECK(v.tape == t, ContractError, "Vars from different tapes");
  }
  return t;
}

Var record(Tape* tape, TapeNode node) {
  node.value = eval_node(*tape, node, /*recompute_ctx=*/node.op != Op::kDropout);
  return tape->push(std::move(node));
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape* t = common_tape({a, b});
  plan_matmul(a.shape(), b.shape());  // shape validation before recording
  TapeNode n;
  n.op = Op::kMatmul;
  n.inputs = {a.id, b.id};
  return record(t, std::move(n));
}

Var add(Var a, Var b) {
  Tape* t = common_tape({a, b});
  broadcast_shapes(a.shape(), b.shape());
  TapeNode n;
  n.op = Op::kAdd;
  n.inputs = {a.id, b.id};
  return record(t, std::move(n));
}

Var mul(Var a, Var b) {
  Tape* t = common_tape({a, b});
  broadcast_shapes(a.shape(), b.shape());
  TapeNode n;
  n.op = Op::kMul;
  n.inputs = {a.id, b.id};
  return record(t, std::move(n));
}

Var scale(Var x, double c) {
  Tape* t = common_tape({x});
  TapeNode n;
  n.op = Op::kScale;
  n.inputs = {x.id};
  n.scalar0 = c;
  return record(t, std::move(n));
}

Var transpose(Var x) {
  const int64_t r = static_cast<int64_t>(x.shape().size());
  SEMBED_CHECK(r >= 2, ShapeError, "transpose needs rank >= 2");
  std::vector<int64_t> perm(static_cast<size_t>(r));
  for (int64_t i = 0; i < r; ++i) perm[static_cast<size_t>(i)] = i;
  std::swap(perm[static_cast<size_t>(r - 2)], perm[static_cast<size_t>(r - 1)]);
  return transpose(x, std::move(perm));
}

Var transpose(Var x, std::vector<int64_t> perm) {
  Tape* t = common_tape({x});
  const size_t r = x.shape().size();
  SEMBED_CHECK(perm.size() == r, ShapeError, "perm rank mismatch");
  std::vector<bool> seen(r, false);
  for (int64_t p : perm) {
    SEMBED_CHECK(p >= 0 && static_cast<size_t>(p) < r && !seen[static_cast<size_t>(p)],
                 ShapeError, "perm is not a permutation");
    seen[static_cast<size_t>(p)] = true;
  }
  TapeNode n;
  n.op = Op::kTranspose;
  n.inputs = {x.id};
  n.idata = std::move(perm);
  return record(t, std::move(n));
}

Var reshape(Var x, Shape shape) {
  Tape* t = common_tape({x});
  SEMBED_CHECK(shape_numel(shape) == x.value().numel(), ShapeError,
               "reshape ", shape_to_string(x.shape()), " -> ",
               shape_to_string(shape), " changes element count");
  TapeNode n;
  n.op = Op::kReshape;
  n.inputs = {x.id};
  n.idata.assign(shape.begin(), shape.end());
  return record(t, std::move(n));
}

Var concat(const std::vector<Var>& xs, int64_t axis) {
  SEMBED_CHECK(!xs.empty(), ContractError, "concat of nothing");
  Tape* t = xs[0].tape;
  const Shape& first = xs[0].shape();
  const int64_t r = static_cast<int64_t>(first.size());
  if (axis < 0) axis += r;
  SEMBED_CHECK(axis >= 0 && axis < r, ShapeError, "concat axis out of range");
  TapeNode n;
  n.op = Op::kConcat;
  n.scalar0 = static_cast<double>(axis);
  for (const Var& v : xs) {
    common_tape({xs[0], v});
    SEMBED_CHECK(static_cast<int64_t>(v.shape().size()) == r, ShapeError,
                 "concat rank mismatch");
    for (int64_t d = 0; d < r; ++d) {
      SEMBED_CHECK(d == axis || v.shape()[static_cast<size_t>(d)] == first[static_cast<size_t>(d)],
                   ShapeError, "concat off-axis dim mismatch");
    }
    n.inputs.push_back(v.id);
  }
  return record(t, std::move(n));
}

Var slice(Var x, int64_t axis, int64_t start, int64_t len) {
  Tape* t = common_tape({x});
  const int64_t r = static_cast<int64_t>(x.shape().size());
  if (axis < 0) axis += r;
  SEMBED_CHECK(axis >= 0 && axis < r, ShapeError, "slice axis out of range");
  const int64_t ext = x.shape()[static_cast<size_t>(axis)];
  SEMBED_CHECK(start >= 0 && len >= 1 && start + len <= ext, ShapeError,
               "slice [", start, ", ", start + len, ") out of range for dim ", ext);
  TapeNode n;
  n.op = Op::kSlice;
  n.inputs = {x.id};
  n.idata = {axis, start, len};
  return record(t, std::move(n));
}

Var embedding_lookup(Var table, const std::vector<int64_t>& ids, const Shape& ids_shape) {
  Tape* t = common_tape({table});
  SEMBED_CHECK(table.shape().size() == 2, ShapeError, "embedding table must be rank 2");
  SEMBED_CHECK(shape_numel(ids_shape) == static_cast<int64_t>(ids.size()), ShapeError,
               "ids_shape does not match id count");
  const int64_t N = table.shape()[0];
  for (int64_t id : ids) {
    SEMBED_CHECK(id >= 0 && id < N, DomainError, "embedding id ", id,
                 " out of range [0, ", N, ")");
  }
  TapeNode n;
  n.op = Op::kEmbedding;
  n.inputs = {table.id};
  n.idata.reserve(1 + ids_shape.size() + ids.size());
  n.idata.push_back(static_cast<int64_t>(ids_shape.size()));
  n.idata.insert(n.idata.end(), ids_shape.begin(), ids_shape.end());
  n.idata.insert(n.idata.end(), ids.begin(), ids.end());
  return record(t, std::move(n));
}

Var softmax(Var x) {
  Tape* t = common_tape({x});
  SEMBED_CHECK(!x.shape().empty() && x.shape().back() >= 1, ShapeError,
               "softmax needs a non-empty last axis");
  TapeNode n;
  n.op = Op::kSoftmax;
  n.inputs = {x.id};
  return record(t, std::move(n));
}

Var layer_norm(Var x, double eps) {
  Tape* t = common_tape({x});
  SEMBED_CHECK(!x.shape().empty() && x.shape().back() >= 1, ShapeError,
               "layer_norm needs a non-empty last axis");
  SEMBED_CHECK(eps > 0.0, ContractError, "layer_norm eps must be positive");
  TapeNode n;
  n.op = Op::kLayerNorm;
  n.inputs = {x.id};
  n.scalar0 = eps;
  return record(t, std::move(n));
}

Var gelu(Var x) {
  Tape* t = common_tape({x});
  TapeNode n;
  n.op = Op::kGelu;
  n.inputs = {x.id};
  return record(t, std::move(n));
}

Var relu(Var x) {
  Tape* t = common_tape({x});
  TapeNode n;
  n.op = Op::kRelu;
  n.inputs = {x.id};
  return record(t, std::move(n));
}

Var dropout(Var x, double p, Rng& rng, bool train) {
  Tape* t = common_tape({x});
  SEMBED_CHECK(p >= 0.0 && p < 1.0, ContractError, "dropout p must be in [0, 1)");
  if (!train || p == 0.0) return x;
  TapeNode n;
  n.op = Op::kDropout;
  n.inputs = {x.id};
  n.scalar0 = p;
  Tensor mask(x.shape());
  const double keep = 1.0 - p;
  const double inv_keep = 1.0 / keep;
  for (int64_t i = 0; i < mask.numel(); ++i) {
    mask[i] = rng.uniform() < keep ? inv_keep : 0.0;
  }
  n.ctx = std::move(mask);
  return record(t, std::move(n));
}

Var cross_entropy_with_logits(Var logits, const std::vector<int64_t>& targets) {
  Tape* t = common_tape({logits});
  SEMBED_CHECK(logits.shape().size() == 2, ShapeError,
               "cross_entropy_with_logits expects [rows, classes]");
  const int64_t rows = logits.shape()[0];
  const int64_t classes = logits.shape()[1];
  SEMBED_CHECK(static_cast<int64_t>(targets.size()) == rows, ShapeError,
               "target count ", targets.size(), " != rows ", rows);
  for (int64_t tgt : targets) {
    SEMBED_CHECK(tgt >= 0 && tgt < classes, DomainError, "target id ", tgt,
                 " out of range [0, ", classes, ")");
  }
  TapeNode n;
  n.op = Op::kCrossEntropy;
  n.inputs = {logits.id};
  n.idata.assign(targets.begin(), targets.end());
  return record(t, std::move(n));
}

Var sum_all(Var x) {
  Tape* t = common_tape({x});
  TapeNode n;
  n.op = Op::kSum;
  n.inputs = {x.id};
  n.idata = {0};
  return record(t, std::move(n));
}

Var sum_last(Var x) {
  Tape* t = common_tape({x});
  SEMBED_CHECK(!x.shape().empty(), ShapeError, "sum_last needs rank >= 1");
  TapeNode n;
  n.op = Op::kSum;
  n.inputs = {x.id};
  n.idata = {1};
  return record(t, std::move(n));
}

Var mean_all(Var x) {
  Tape* t = common_tape({x});
  SEMBED_CHECK(x.value().numel() > 0, ContractError, "mean of empty tensor");
  TapeNode n;
  n.op = Op::kMean;
  n.inputs = {x.id};
  return record(t, std::move(n));
}

Var sqrt(Var x) {
  Tape* t = common_tape({x});
  for (int64_t i = 0; i < x.value().numel(); ++i) {
    SEMBED_CHECK(x.value()[i] >= 0.0, DomainError, "sqrt of negative value");
  }
  TapeNode n;
  n.op = Op::kSqrt;
  n.inputs = {x.id};
  return record(t, std::move(n));
}

Var exp(Var x) {
  Tape* t = common_tape({x});
  TapeNode n;
  n.op = Op::kExp;
  n.inputs = {x.id};
  return record(t, std::move(n));
}

Var log(Var x) {
  Tape* t = common_tape({x});
  for (int64_t i = 0; i < x.value().numel(); ++i) {
    SEMBED_CHECK(x.value()[i] > 0.0, DomainError, "log of non-positive value");
  }
  TapeNode n;
  n.op = Op::kLog;
  n.inputs = {x.id};
  return record(t, std::move(n));
}

}  // namespace sembed
