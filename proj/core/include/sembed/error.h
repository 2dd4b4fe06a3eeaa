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

#ifndef SEMBED_ERROR_H_
#define SEMBED_ERROR_H_

#include <sstream>
#include <stdexcept>
#include <string>

namespace sembed {

// Base of every error this library throws on purpose.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Mismatched or invalid tensor shapes.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Numeric domain violations (log of a non-positive value, NaN gradients, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// API misuse: preconditions that code, not data, must satisfy.
class ContractError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent input data (datasets, configs, checkpoints).
class DataError : public Error {
 public:
  using Error::Error;
};

// Filesystem failures.
class IoError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline void str_append(std::ostringstream&) {}

template <typename T, typename... Rest>
void str_append(std::ostringstream& os, const T& v, const Rest&... rest) {
  os << v;
  str_append(os, rest...);
}

template <typename... Parts>
std::string str(const Parts&... parts) {
  std::ostringstream os;
  str_append(os, parts...);
  return os.str();
}

}  // namespace detail

}  // namespace sembed

#define SEMBED_CHECK(cond, etype, ...)                          \
  do {                                                          \
    if (!(cond)) {                                              \
      throw ::sembed::etype(::sembed::detail::str(__VA_ARGS__)); \
    }                                                           \
  } while (0)

#endif  // SEMBED_ERROR_H_
