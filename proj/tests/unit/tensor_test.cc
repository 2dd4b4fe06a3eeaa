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

#include "sembed/tensor.h"

#include <cmath>
#include <limits>

#include <doctest.h>

#include "sembed/error.h"

namespace sembed {
namespace {

TEST_CASE("shape_numel counts elements, rank 0 is 1") {
  CHECK(shape_numel({}) == 1);
  CHECK(shape_numel({3}) == 3);
  CHECK(shape_numel({2, 3, 4}) == 24);
  CHECK(shape_numel({5, 0}) == 0);
}

TEST_CASE("row_major_strides") {
  CHECK(row_major_strides({2, 3, 4}) == std::vector<int64_t>{12, 4, 1});
  CHECK(row_major_strides({7}) == std::vector<int64_t>{1});
  CHECK(row_major_strides({}).empty());
}

TEST_CASE("construction fills zeros and validates data size") {
  Tensor z({2, 2});
  for (int64_t i = 0; i < 4; ++i) CHECK(z[i] == 0.0);
  CHECK_THROWS_AS(Tensor({2, 2}, {1.0, 2.0}), ShapeError);
  Tensor f = Tensor::full({3}, 2.5);
  CHECK(f[0] == 2.5);
  CHECK(f[2] == 2.5);
  CHECK(Tensor::scalar(7.0).numel() == 1);
}

TEST_CASE("at maps multi-indices row-major") {
  Tensor t({2, 3}, {0, 1, 2, 3, 4, 5});
  CHECK(t.at({0, 0}) == 0);
  CHECK(t.at({0, 2}) == 2);
  CHECK(t.at({1, 0}) == 3);
  CHECK(t.at({1, 2}) == 5);
  t.at({1, 1}) = 9.0;
  CHECK(t[4] == 9.0);
}

TEST_CASE("dim supports negative indices") {
  Tensor t({2, 3, 4});
  CHECK(t.dim(0) == 2);
  CHECK(t.dim(-1) == 4);
  CHECK(t.dim(-3) == 2);
  CHECK_THROWS_AS(t.dim(3), ShapeError);
}

TEST_CASE("all_finite and bit_equal") {
  Tensor a({2}, {1.0, 2.0});
  Tensor b({2}, {1.0, 2.0});
  CHECK(a.all_finite());
  CHECK(a.bit_equal(b));
  b[1] = 2.0 + 1e-16;  // same value at double precision
  CHECK(a.bit_equal(b));
  b[1] = 3.0;
  CHECK_FALSE(a.bit_equal(b));
  Tensor c({1}, {std::numeric_limits<double>::infinity()});
  CHECK_FALSE(c.all_finite());
  Tensor d({1}, {std::nan("")});
  CHECK_FALSE(d.all_finite());
  CHECK_FALSE(a.bit_equal(Tensor({1}, {1.0})));
}

TEST_CASE("broadcast_shapes follows right-aligned rules") {
  CHECK(broadcast_shapes({2, 3}, {2, 3}) == Shape{2, 3});
  CHECK(broadcast_shapes({2, 3}, {3}) == Shape{2, 3});
  CHECK(broadcast_shapes({2, 1}, {1, 5}) == Shape{2, 5});
  CHECK(broadcast_shapes({4, 1, 3}, {2, 1}) == Shape{4, 2, 3});
  CHECK(broadcast_shapes({}, {2}) == Shape{2});
  CHECK_THROWS_AS(broadcast_shapes({2, 3}, {4}), ShapeError);
}

}  // namespace
}  // namespace sembed
