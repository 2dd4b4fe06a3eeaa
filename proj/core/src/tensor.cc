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
#include <cstring>
#include <sstream>

#include "sembed/error.h"

namespace sembed {

int64_t shape_numel(const Shape& shape) {
  int64_t n = 1;
  for (int64_t d : shape) {
    SEMBED_CHECK(d >= 0, ShapeError, "negative dimension in ", shape_to_string(shape));
    n *= d;
  }
  return n;
}

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

std::vector<int64_t> row_major_strides(const Shape& shape) {
  std::vector<int64_t> strides(shape.size(), 1);
  for (int64_t i = static_cast<int64_t>(shape.size()) - 2; i >= 0; --i) {
    strides[i] = strides[i + 1] * shape[i + 1];
  }
  return strides;
}

Tensor::Tensor(Shape shape) : shape_(std::move(shape)) {
  data_.assign(static_cast<size_t>(shape_numel(shape_)), 0.0);
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  SEMBED_CHECK(shape_numel(shape_) == static_cast<int64_t>(data_.size()),
               ShapeError, "data length ", data_.size(),
               " does not match shape ", shape_to_string(shape_));
}

Tensor Tensor::full(Shape shape, double v) {
  Tensor t(std::move(shape));
  for (double& x : t.data_) x = v;
  return t;
}

int64_t Tensor::dim(int64_t i) const {
  const int64_t r = rank();
  if (i < 0) i += r;
  SEMBED_CHECK(i >= 0 && i < r, ShapeError, "dim index ", i,
               " out of range for ", shape_to_string(shape_));
  return shape_[static_cast<size_t>(i)];
}

double& Tensor::at(std::initializer_list<int64_t> idx) {
  const auto strides = row_major_strides(shape_);
  SEMBED_CHECK(idx.size() == shape_.size(), ShapeError,
               "index rank ", idx.size(), " vs tensor rank ", shape_.size());
  int64_t off = 0;
  size_t k = 0;
  for (int64_t i : idx) {
    SEMBED_CHECK(i >= 0 && i < shape_[k], ShapeError, "index ", i,
                 " out of range for dim ", k, " of extent ", shape_[k]);
    off += i * strides[k++];
  }
  return data_[static_cast<size_t>(off)];
}

double Tensor::at(std::initializer_list<int64_t> idx) const {
  return const_cast<Tensor*>(this)->at(idx);
}

bool Tensor::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

bool Tensor::bit_equal(const Tensor& other) const {
  if (shape_ != other.shape_) return false;
  if (data_.empty()) return other.data_.empty();
  return std::memcmp(data_.data(), other.data_.data(),
                     data_.size() * sizeof(double)) == 0;
}

Shape broadcast_shapes(const Shape& a, const Shape& b) {
  const size_t r = std::max(a.size(), b.size());
  Shape out(r, 1);
  for (size_t i = 0; i < r; ++i) {
    const int64_t da = i < a.size() ? a[a.size() - 1 - i] : 1;
    const int64_t db = i < b.size() ? b[b.size() - 1 - i] : 1;
    SEMBED_CHECK(da == db || da == 1 || db == 1, ShapeError,
                 "cannot broadcast ", shape_to_string(a), " with ",
                 shape_to_string(b));
    out[r - 1 - i] = std::max(da, db);
  }
  return out;
}

}  // namespace sembed
