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

#include <cmath>
#include <functional>

#include <doctest.h>

#include "sembed/error.h"
#include "sembed/gradcheck.h"
#include "sembed/rng.h"

namespace sembed {
namespace {

ParamPtr random_param(const std::string& name, Shape shape, Rng& rng,
                      double scl = 1.0) {
  Tensor t(shape);
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = scl * rng.normal();
  return make_param(name, std::move(t));
}

// Strictly positive values, for sqrt/log domains.
ParamPtr positive_param(const std::string& name, Shape shape, Rng& rng) {
  Tensor t(shape);
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = 0.5 + rng.uniform();
  return make_param(name, std::move(t));
}

// Checks tape gradients of a freshly-built scalar graph against central
// finite differences.
void check_graph(const std::vector<ParamPtr>& params,
                 const std::function<Var(Tape&)>& build,
                 double tol = 1e-6) {
  Tape tape;
  Var loss = build(tape);
  REQUIRE(loss.value().numel() == 1);
  GradientMap analytic = tape.backward(loss);
  GradientMap numeric = finite_difference_gradient(
      [&]() {
        Tape t2;
        return build(t2).value()[0];
      },
      params);
  CHECK(max_rel_error(analytic, numeric) < tol);
}

TEST_CASE("matmul forward and gradient") {
  Rng rng(1);
  auto a = random_param("a", {3, 4}, rng);
  auto b = random_param("b", {4, 2}, rng);

  Tape tape;
  Var prod = matmul(tape.leaf(a), tape.leaf(b));
  REQUIRE(prod.shape() == Shape{3, 2});
  // Oracle: direct triple loop.
  for (int64_t i = 0; i < 3; ++i) {
    for (int64_t j = 0; j < 2; ++j) {
      double want = 0.0;
      for (int64_t k = 0; k < 4; ++k) {
        want += a->value.at({i, k}) * b->value.at({k, j});
      }
      CHECK(prod.value().at({i, j}) == doctest::Approx(want).epsilon(1e-12));
    }
  }

  check_graph({a, b}, [&](Tape& t) {
    return sum_all(matmul(t.leaf(a), t.leaf(b)));
  });
}

TEST_CASE("batched matmul broadcasts leading dims") {
  Rng rng(2);
  auto a = random_param("a", {2, 3, 4}, rng);
  auto b = random_param("b", {4, 5}, rng);
  Tape tape;
  Var prod = matmul(tape.leaf(a), tape.leaf(b));
  REQUIRE(prod.shape() == Shape{2, 3, 5});
  check_graph({a, b}, [&](Tape& t) {
    return sum_all(matmul(t.leaf(a), t.leaf(b)));
  });
}

TEST_CASE("matmul shape mismatch throws") {
  Rng rng(3);
  auto a = random_param("a", {2, 3}, rng);
  auto b = random_param("b", {4, 2}, rng);
  Tape tape;
  CHECK_THROWS_AS(matmul(tape.leaf(a), tape.leaf(b)), ShapeError);
}

TEST_CASE("add and mul broadcast and differentiate") {
  Rng rng(4);
  auto a = random_param("a", {2, 3}, rng);
  auto b = random_param("b", {3}, rng);
  auto c = random_param("c", {2, 1}, rng);
  check_graph({a, b, c}, [&](Tape& t) {
    Var x = add(t.leaf(a), t.leaf(b));
    Var y = mul(x, t.leaf(c));
    return sum_all(y);
  });
}

TEST_CASE("scale, transpose, reshape, slice, concat gradients") {
  Rng rng(5);
  auto a = random_param("a", {2, 3, 4}, rng);
  auto b = random_param("b", {2, 2, 4}, rng);
  check_graph({a, b}, [&](Tape& t) {
    Var x = scale(t.leaf(a), -1.7);
    Var y = transpose(x, {1, 0, 2});            // [3, 2, 4]
    Var z = reshape(y, {6, 4});                 // [6, 4]
    Var s = slice(z, 0, 1, 4);                  // [4, 4]
    Var w = reshape(t.leaf(b), {4, 4});
    Var cat = concat({s, w}, 1);                // [4, 8]
    return sum_all(mul(cat, cat));
  });
}

TEST_CASE("default transpose swaps last two axes") {
  Rng rng(6);
  auto a = random_param("a", {2, 3}, rng);
  Tape tape;
  Var t = transpose(tape.leaf(a));
  REQUIRE(t.shape() == Shape{3, 2});
  for (int64_t i = 0; i < 2; ++i) {
    for (int64_t j = 0; j < 3; ++j) {
      CHECK(t.value().at({j, i}) == a->value.at({i, j}));
    }
  }
}

TEST_CASE("embedding lookup forward and gradient accumulate over repeats") {
  Rng rng(7);
  auto table = random_param("emb", {5, 3}, rng);
  std::vector<int64_t> ids = {1, 4, 1, 0};

  Tape tape;
  Var out = embedding_lookup(tape.leaf(table), ids, {2, 2});
  REQUIRE(out.shape() == Shape{2, 2, 3});
  CHECK(out.value().at({0, 0, 1}) == table->value.at({1, 1}));
  CHECK(out.value().at({1, 1, 2}) == table->value.at({0, 2}));

  check_graph({table}, [&](Tape& t) {
    Var o = embedding_lookup(t.leaf(table), ids, {2, 2});
    return sum_all(mul(o, o));
  });

  // Row 1 is used twice; its gradient is the sum of both uses.
  Tape t2;
  Var o = embedding_lookup(t2.leaf(table), ids, {4});
  GradientMap g = t2.backward(sum_all(o));
  CHECK(g.at("emb").at({1, 0}) == doctest::Approx(2.0));
  CHECK(g.at("emb").at({4, 0}) == doctest::Approx(1.0));
  CHECK(g.at("emb").at({2, 0}) == doctest::Approx(0.0));
}

TEST_CASE("embedding id out of range throws") {
  Rng rng(8);
  auto table = random_param("emb", {3, 2}, rng);
  Tape tape;
  CHECK_THROWS_AS(embedding_lookup(tape.leaf(table), {3}, {1}), DomainError);
  CHECK_THROWS_AS(embedding_lookup(tape.leaf(table), {-1}, {1}), DomainError);
}

TEST_CASE("softmax rows sum to one and differentiate") {
  Rng rng(9);
  auto a = random_param("a", {3, 5}, rng, 2.0);
  Tape tape;
  Var s = softmax(tape.leaf(a));
  for (int64_t r = 0; r < 3; ++r) {
    double total = 0.0;
    for (int64_t c = 0; c < 5; ++c) total += s.value().at({r, c});
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
  auto w = random_param("w", {3, 5}, rng);
  check_graph({a, w}, [&](Tape& t) {
    return sum_all(mul(softmax(t.leaf(a)), t.leaf(w)));
  });
}

TEST_CASE("softmax is shift invariant") {
  Rng rng(10);
  Tensor x({1, 4}, {1.0, 2.0, 3.0, 4.0});
  Tensor y({1, 4}, {1001.0, 1002.0, 1003.0, 1004.0});
  Tape tape;
  Var sx = softmax(tape.constant(x));
  Var sy = softmax(tape.constant(y));
  for (int64_t i = 0; i < 4; ++i) {
    CHECK(sx.value()[i] == doctest::Approx(sy.value()[i]).epsilon(1e-12));
  }
}

TEST_CASE("layer_norm normalizes rows and differentiates") {
  Rng rng(11);
  auto a = random_param("a", {4, 6}, rng, 3.0);
  Tape tape;
  Var n = layer_norm(tape.leaf(a));
  for (int64_t r = 0; r < 4; ++r) {
    double mean = 0.0, var = 0.0;
    for (int64_t c = 0; c < 6; ++c) mean += n.value().at({r, c});
    mean /= 6;
    for (int64_t c = 0; c < 6; ++c) {
      var += (n.value().at({r, c}) - mean) * (n.value().at({r, c}) - mean);
    }
    var /= 6;
    CHECK(mean == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(var == doctest::Approx(1.0).epsilon(1e-4));  // eps shifts it slightly
  }
  auto w = random_param("w", {4, 6}, rng);
  check_graph({a, w}, [&](Tape& t) {
    return sum_all(mul(layer_norm(t.leaf(a)), t.leaf(w)));
  }, 1e-5);
}

TEST_CASE("gelu and relu forward values and gradients") {
  Tape tape;
  Tensor x({5}, {-2.0, -0.5, 0.0, 0.5, 2.0});
  Var g = gelu(tape.constant(x));
  // Oracle: 0.5 * x * (1 + erf(x / sqrt(2))).
  for (int64_t i = 0; i < 5; ++i) {
    double want = 0.5 * x[i] * (1.0 + std::erf(x[i] / std::sqrt(2.0)));
    CHECK(g.value()[i] == doctest::Approx(want).epsilon(1e-12));
  }
  Var r = relu(tape.constant(x));
  CHECK(r.value()[0] == 0.0);
  CHECK(r.value()[2] == 0.0);
  CHECK(r.value()[4] == 2.0);

  Rng rng(12);
  auto a = random_param("a", {3, 4}, rng);
  check_graph({a}, [&](Tape& t) { return sum_all(gelu(t.leaf(a))); });
  // relu is kinked at 0; random values stay away from it almost surely.
  check_graph({a}, [&](Tape& t) { return sum_all(relu(t.leaf(a))); });
}

TEST_CASE("cross entropy matches log-sum-exp oracle and differentiates") {
  Rng rng(13);
  auto a = random_param("a", {3, 6}, rng, 2.0);
  std::vector<int64_t> targets = {2, 0, 5};

  Tape tape;
  Var ce = cross_entropy_with_logits(tape.leaf(a), targets);
  REQUIRE(ce.shape() == Shape{3});
  for (int64_t r = 0; r < 3; ++r) {
    double mx = -1e300;
    for (int64_t c = 0; c < 6; ++c) mx = std::max(mx, a->value.at({r, c}));
    double lse = 0.0;
    for (int64_t c = 0; c < 6; ++c) lse += std::exp(a->value.at({r, c}) - mx);
    double want = mx + std::log(lse) - a->value.at({r, targets[r]});
    CHECK(ce.value()[r] == doctest::Approx(want).epsilon(1e-12));
  }

  check_graph({a}, [&](Tape& t) {
    return mean_all(cross_entropy_with_logits(t.leaf(a), targets));
  });

  CHECK_THROWS_AS(cross_entropy_with_logits(tape.leaf(a), {0, 1}), ShapeError);
  CHECK_THROWS_AS(cross_entropy_with_logits(tape.leaf(a), {0, 1, 6}),
                  DomainError);
}

TEST_CASE("cross entropy survives extreme logits") {
  Tape tape;
  Tensor big({1, 2}, {1000.0, -1000.0});
  Var ce = cross_entropy_with_logits(tape.constant(big), {0});
  CHECK(ce.value()[0] == doctest::Approx(0.0));
}

TEST_CASE("sum, mean, sqrt, exp, log gradients") {
  Rng rng(14);
  auto a = positive_param("a", {3, 4}, rng);
  check_graph({a}, [&](Tape& t) { return sum_all(t.leaf(a)); });
  check_graph({a}, [&](Tape& t) { return mean_all(t.leaf(a)); });
  check_graph({a}, [&](Tape& t) { return sum_all(sqrt(t.leaf(a))); });
  check_graph({a}, [&](Tape& t) { return sum_all(exp(t.leaf(a))); });
  check_graph({a}, [&](Tape& t) { return sum_all(log(t.leaf(a))); });
  check_graph({a}, [&](Tape& t) {
    Var sl = sum_last(t.leaf(a));  // [3, 1]
    return sum_all(mul(sl, sl));
  });
}

TEST_CASE("sum_last keeps the reduced dim") {
  Rng rng(15);
  auto a = random_param("a", {2, 3, 4}, rng);
  Tape tape;
  Var s = sum_last(tape.leaf(a));
  REQUIRE(s.shape() == Shape{2, 3, 1});
  double want = 0.0;
  for (int64_t k = 0; k < 4; ++k) want += a->value.at({1, 2, k});
  CHECK(s.value().at({1, 2, 0}) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("log and sqrt reject out-of-domain input") {
  Tape tape;
  CHECK_THROWS_AS(log(tape.constant(Tensor({1}, {0.0}))), DomainError);
  CHECK_THROWS_AS(log(tape.constant(Tensor({1}, {-1.0}))), DomainError);
  CHECK_THROWS_AS(sqrt(tape.constant(Tensor({1}, {-0.1}))), DomainError);
}

TEST_CASE("dropout train/eval semantics") {
  Rng rng(16);
  auto a = make_param("a", Tensor::full({1000}, 1.0));

  Tape eval_tape;
  Rng r1(1);
  Var e = dropout(eval_tape.leaf(a), 0.5, r1, /*train=*/false);
  CHECK(e.value().bit_equal(a->value));

  Tape train_tape;
  Rng r2(1);
  Var tr = dropout(train_tape.leaf(a), 0.5, r2, /*train=*/true);
  int64_t zeros = 0;
  double sum = 0.0;
  for (int64_t i = 0; i < 1000; ++i) {
    double v = tr.value()[i];
    CHECK((v == 0.0 || v == doctest::Approx(2.0)));  // kept values scale 1/(1-p)
    if (v == 0.0) ++zeros;
    sum += v;
  }
  CHECK(zeros > 400);
  CHECK(zeros < 600);
  CHECK(sum / 1000.0 == doctest::Approx(1.0).epsilon(0.1));

  // Gradient is the same mask: d(sum)/da = mask / (1-p).
  GradientMap g = train_tape.backward(sum_all(tr));
  for (int64_t i = 0; i < 1000; ++i) {
    CHECK(g.at("a")[i] == tr.value()[i]);  // since a == 1 everywhere
  }
}

TEST_CASE("replay reproduces values bit-identically including dropout") {
  Rng rng(17);
  auto a = random_param("a", {4, 4}, rng);
  Tape tape;
  Rng drop_rng(99);
  Var x = dropout(gelu(matmul(tape.leaf(a), tape.leaf(a))), 0.3, drop_rng,
                  true);
  Var loss = sum_all(x);
  Tensor before_x = x.value();
  Tensor before_loss = loss.value();
  tape.replay();
  CHECK(x.value().bit_equal(before_x));
  CHECK(loss.value().bit_equal(before_loss));
}

TEST_CASE("shared leaf accumulates gradients across uses") {
  auto a = make_param("a", Tensor({2}, {3.0, 4.0}));
  Tape tape;
  Var x = tape.leaf(a);
  Var y = tape.leaf(a);  // same node
  CHECK(x.id == y.id);
  GradientMap g = tape.backward(sum_all(mul(x, y)));  // d(sum a^2)/da = 2a
  CHECK(g.at("a")[0] == doctest::Approx(6.0));
  CHECK(g.at("a")[1] == doctest::Approx(8.0));
}

TEST_CASE("unused registered params get zero gradients") {
  auto a = make_param("a", Tensor({2}, {1.0, 2.0}));
  auto b = make_param("b", Tensor({2}, {1.0, 2.0}));
  Tape tape;
  Var x = tape.leaf(a);
  tape.leaf(b);  // registered, not used in the loss
  GradientMap g = tape.backward(sum_all(x));
  REQUIRE(g.count("b") == 1);
  CHECK(g.at("b")[0] == 0.0);
  CHECK(g.at("b")[1] == 0.0);
}

TEST_CASE("backward requires a scalar loss") {
  auto a = make_param("a", Tensor({2}, {1.0, 2.0}));
  Tape tape;
  Var x = tape.leaf(a);
  CHECK_THROWS_AS(tape.backward(x), ContractError);
}

TEST_CASE("non-finite forward values throw by default") {
  Tape tape;
  Var x = tape.constant(Tensor({1}, {1e308}));
  CHECK_THROWS_AS(exp(x), DomainError);
  Tape loose;
  loose.check_finite = false;
  Var y = exp(loose.constant(Tensor({1}, {1e308})));
  CHECK(std::isinf(y.value()[0]));
}

TEST_CASE("compositions: sub and reciprocal_pos") {
  Rng rng(18);
  auto a = positive_param("a", {3}, rng);
  auto b = positive_param("b", {3}, rng);
  Tape tape;
  Var d = sub(tape.leaf(a), tape.leaf(b));
  for (int64_t i = 0; i < 3; ++i) {
    CHECK(d.value()[i] == doctest::Approx(a->value[i] - b->value[i]));
  }
  Var r = reciprocal_pos(tape.leaf(a));
  for (int64_t i = 0; i < 3; ++i) {
    CHECK(r.value()[i] == doctest::Approx(1.0 / a->value[i]).epsilon(1e-12));
  }
  check_graph({a, b}, [&](Tape& t) {
    return sum_all(mul(sub(t.leaf(a), t.leaf(b)), reciprocal_pos(t.leaf(b))));
  });
}

TEST_CASE("deep chain gradcheck exercises every op together") {
  Rng rng(19);
  auto w1 = random_param("w1", {6, 8}, rng, 0.5);
  auto w2 = random_param("w2", {8, 4}, rng, 0.5);
  auto emb = random_param("emb", {10, 6}, rng, 0.5);
  std::vector<int64_t> ids = {1, 3, 5, 7};
  std::vector<int64_t> targets = {0, 3, 1, 2};
  check_graph({w1, w2, emb}, [&](Tape& t) {
    Var x = embedding_lookup(t.leaf(emb), ids, {4});      // [4, 6]
    Var h = gelu(matmul(layer_norm(x), t.leaf(w1)));      // [4, 8]
    Var logits = matmul(h, t.leaf(w2));                   // [4, 4]
    return mean_all(cross_entropy_with_logits(logits, targets));
  }, 1e-5);
}

}  // namespace
}  // namespace sembed
