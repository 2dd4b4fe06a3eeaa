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

#ifndef SEMBED_TENSOR_H_
#define SEMBED_TENSOR_H_

#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

namespace sembed {

using Shape = std::vector<int64_t>;

// Number of elements a shape describes (product; 1 for rank 0).
int64_t shape_numel(const Shape& shape);

std::string shape_to_string(const Shape& shape);

// Row-major strides for a shape.
std::vector<int64_t> row_major_strides(const Shape& shape);

// Dense row-major tensor of doubles. Data is always contiguous; the class
// invariant is data.size() == product(shape).
class Tensor {
 public:
  Tensor() = default;

  // Zero-filled tensor of the given shape.
  explicit Tensor(Shape shape);

  Tensor(Shape shape, std::vector<double> data);

  static Tensor scalar(double v) { return Tensor({1}, {v}); }
  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor full(Shape shape, double v);

  const Shape& shape() const { return shape_; }
  int64_t rank() const { return static_cast<int64_t>(shape_.size()); }
  int64_t numel() const { return static_cast<int64_t>(data_.size()); }

  // Dimension i; negative indices count from the back.
  int64_t dim(int64_t i) const;

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& vec() { return data_; }
  const std::vector<double>& vec() const { return data_; }

  double& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
  double operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

  // Multi-index access; bounds are the caller's responsibility.
  double& at(std::initializer_list<int64_t> idx);
  double at(std::initializer_list<int64_t> idx) const;

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  bool all_finite() const;

  // True iff shapes match and every element is bit-identical.
  bool bit_equal(const Tensor& other) const;

  // Marks the tensor as a trainable leaf when handed to a Tape.
  bool requires_grad = false;

 private:
  Shape shape_;
  std::vector<double> data_;
};

// Shape both operands broadcast to under right-aligned numpy rules, or a
// ShapeError if they are incompatible.
Shape broadcast_shapes(const Shape& a, const Shape& b);

}  // namespace sembed

#endif  // SEMBED_TENSOR_H_
