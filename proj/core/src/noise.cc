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

#include "sembed/noise.h"

#include <cmath>

#include "sembed/error.h"

namespace sembed {

NoiseKind noise_kind_from_string(const std::string& s) {
  if (s == "delete") return NoiseKind::kDelete;
  if (s == "swap") return NoiseKind::kSwap;
  if (s == "mask") return NoiseKind::kMask;
  if (s == "replace") return NoiseKind::kReplace;
  if (s == "add") return NoiseKind::kAdd;
  throw DataError("unknown noise kind: " + s);
}

const char* to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::kDelete: return "delete";
    case NoiseKind::kSwap: return "swap";
    case NoiseKind::kMask: return "mask";
    case NoiseKind::kReplace: return "replace";
    case NoiseKind::kAdd: return "add";
  }
  return "?";
}

namespace {

// ceil with a small slack so binary rounding (0.6*5 = 3.0000000000000004)
// does not bump the count.
int64_t count_ceil(double x) {
  return static_cast<int64_t>(std::ceil(x - 1e-9));
}

int64_t random_content_token(const Vocabulary& vocab, Rng& rng) {
  SEMBED_CHECK(vocab.content_size() >= 1, ContractError,
               "noise model needs at least one content token in the vocabulary");
  return kNumSpecials + static_cast<int64_t>(
                            rng.uniform_int(static_cast<uint64_t>(vocab.content_size())));
}

}  // namespace

std::vector<int64_t> corrupt(const std::vector<int64_t>& tokens,
                             const NoiseSpec& spec, const Vocabulary& vocab,
                             Rng& rng) {
  SEMBED_CHECK(!tokens.empty(), ContractError, "corrupt: empty token sequence");
  SEMBED_CHECK(spec.ratio >= 0.0 && spec.ratio <= 1.0, ContractError,
               "noise ratio ", spec.ratio, " outside [0, 1]");
  for (int64_t t : tokens) {
    SEMBED_CHECK(t >= kNumSpecials && t < vocab.size(), ContractError,
                 "corrupt expects content token ids, got ", t);
  }
  const int64_t l = static_cast<int64_t>(tokens.size());

  switch (spec.kind) {
    case NoiseKind::kDelete: {
      std::vector<int64_t> out;
      out.reserve(tokens.size());
      for (int64_t t : tokens) {
        if (!rng.bernoulli(spec.ratio)) out.push_back(t);
      }
      if (out.empty()) {
        out.push_back(tokens[static_cast<size_t>(rng.uniform_int(static_cast<uint64_t>(l)))]);
      }
      return out;
    }
    case NoiseKind::kSwap: {
      std::vector<int64_t> out = tokens;
      const int64_t pairs = std::min(count_ceil(spec.ratio * static_cast<double>(l) / 2.0),
                                     l / 2);
      if (pairs > 0) {
        auto pos = rng.sample_without_replacement(static_cast<size_t>(l),
                                                  static_cast<size_t>(2 * pairs));
        for (int64_t p = 0; p < pairs; ++p) {
          std::swap(out[pos[static_cast<size_t>(2 * p)]],
                    out[pos[static_cast<size_t>(2 * p + 1)]]);
        }
      }
      return out;
    }
    case NoiseKind::kMask: {
      std::vector<int64_t> out = tokens;
      for (auto& t : out) {
        if (rng.bernoulli(spec.ratio)) t = kMaskId;
      }
      return out;
    }
    case NoiseKind::kReplace: {
      std::vector<int64_t> out = tokens;
      for (auto& t : out) {
        if (rng.bernoulli(spec.ratio)) t = random_content_token(vocab, rng);
      }
      return out;
    }
    case NoiseKind::kAdd: {
      std::vector<int64_t> out = tokens;
      const int64_t inserts = count_ceil(spec.ratio * static_cast<double>(l));
      for (int64_t i = 0; i < inserts; ++i) {
        const size_t at = static_cast<size_t>(rng.uniform_int(out.size() + 1));
        out.insert(out.begin() + static_cast<std::ptrdiff_t>(at),
                   random_content_token(vocab, rng));
      }
      return out;
    }
  }
  throw ContractError("corrupt: unknown noise kind");
}

}  // namespace sembed
