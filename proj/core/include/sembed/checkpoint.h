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

#ifndef SEMBED_CHECKPOINT_H_
#define SEMBED_CHECKPOINT_H_

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "sembed/autograd.h"

namespace sembed {

// On-disk layout: a textual header, then a raw little-endian payload.
//   sembed-checkpoint v1
//   config <one-line JSON>
//   vocab <n>                 then n content-token lines
//   adam_step <t>             (only with optimizer state)
//   tensor <name> <f64|f32> <offset> <nbytes> <d0> [<d1> ...]
//   moment <m|v> <name> <f64|f32> <offset> <nbytes> <d0> [...]
//   alias <alias-name> <stored-name>
//   payload <total-bytes>
// Shared (tied) tensors appear once as `tensor` plus an `alias` per extra
// logical slot. f64 round-trips bit-identically and is the default.

struct ManifestEntry {
  std::string name;
  std::string dtype;
  Shape shape;
  int64_t offset = 0;
  int64_t nbytes = 0;
};

struct Checkpoint {
  std::string config_json;
  std::vector<std::string> vocab_tokens;  // content tokens in id order
  std::vector<ParamPtr> params;           // unique storage, unique names
  std::vector<std::pair<std::string, std::string>> aliases;  // alias -> stored
  bool has_adam = false;
  int64_t adam_step = 0;
  std::map<std::string, Tensor> adam_m, adam_v;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path,
                     bool f32 = false);

Checkpoint load_checkpoint(const std::string& path);

// Header-only read of the tensor manifest (no payload decode).
std::vector<ManifestEntry> checkpoint_manifest(const std::string& path);

}  // namespace sembed

#endif  // SEMBED_CHECKPOINT_H_
