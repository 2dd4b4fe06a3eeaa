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

#include "sembed/checkpoint.h"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "sembed/error.h"
#include "sembed/io.h"

static_assert(std::endian::native == std::endian::little,
              "checkpoint payload is little-endian");

namespace sembed {

namespace {

constexpr const char* kMagic = "sembed-checkpoint v1";

void check_name(const std::string& name) {
  SEMBED_CHECK(!name.empty(), ContractError, "empty tensor name");
  for (char c : name) {
    SEMBED_CHECK(c != ' ' && c != '\n' && c != '\r', ContractError,
                 "tensor name contains whitespace: ", name);
  }
}

void append_tensor_bytes(std::string* payload, const Tensor& t, bool f32) {
  if (f32) {
    for (int64_t i = 0; i < t.numel(); ++i) {
      const float f = static_cast<float>(t[i]);
      char buf[sizeof(float)];
      std::memcpy(buf, &f, sizeof(float));
      payload->append(buf, sizeof(float));
    }
  } else {
    const size_t bytes = static_cast<size_t>(t.numel()) * sizeof(double);
    const size_t at = payload->size();
    payload->resize(at + bytes);
    std::memcpy(payload->data() + at, t.data(), bytes);
  }
}

Tensor decode_tensor(const std::string& payload, const ManifestEntry& e) {
  Tensor t(e.shape);
  const int64_t n = t.numel();
  SEMBED_CHECK(e.offset >= 0 &&
                   e.offset + e.nbytes <= static_cast<int64_t>(payload.size()),
               DataError, "tensor ", e.name, " points outside the payload");
  if (e.dtype == "f64") {
    SEMBED_CHECK(e.nbytes == n * static_cast<int64_t>(sizeof(double)), DataError,
                 "tensor ", e.name, ": byte count does not match shape");
    std::memcpy(t.data(), payload.data() + e.offset, static_cast<size_t>(e.nbytes));
  } else if (e.dtype == "f32") {
    SEMBED_CHECK(e.nbytes == n * static_cast<int64_t>(sizeof(float)), DataError,
                 "tensor ", e.name, ": byte count does not match shape");
    for (int64_t i = 0; i < n; ++i) {
      float f;
      std::memcpy(&f, payload.data() + e.offset + i * static_cast<int64_t>(sizeof(float)),
                  sizeof(float));
      t[i] = static_cast<double>(f);
    }
  } else {
    throw DataError("unknown dtype " + e.dtype + " for tensor " + e.name);
  }
  return t;
}

struct ParsedHeader {
  std::string config_json;
  std::vector<std::string> vocab_tokens;
  bool has_adam = false;
  int64_t adam_step = 0;
  std::vector<ManifestEntry> tensors;
  std::vector<std::pair<char, ManifestEntry>> moments;  // 'm' or 'v'
  std::vector<std::pair<std::string, std::string>> aliases;
  int64_t payload_bytes = -1;
  size_t payload_start = 0;  // byte offset into the file
};

ManifestEntry parse_manifest_entry(std::istringstream& ss, const std::string& where) {
  ManifestEntry e;
  ss >> e.name >> e.dtype >> e.offset >> e.nbytes;
  SEMBED_CHECK(!ss.fail(), DataError, where, ": malformed manifest line");
  int64_t d;
  while (ss >> d) e.shape.push_back(d);
  SEMBED_CHECK(!e.shape.empty(), DataError, where, ": manifest entry without dims");
  return e;
}

ParsedHeader parse_header(const std::string& blob, const std::string& path) {
  ParsedHeader h;
  size_t pos = 0;
  int64_t pending_vocab = 0;
  bool saw_magic = false, saw_payload = false;
  size_t line_no = 0;

  while (pos <= blob.size()) {
    const size_t eol = blob.find('\n', pos);
    SEMBED_CHECK(eol != std::string::npos, DataError, path,
                 ": truncated header (no payload line)");
    std::string line = blob.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    const std::string where = path + " header line " + std::to_string(line_no);

    if (!saw_magic) {
      SEMBED_CHECK(line == kMagic, DataError, path,
                   ": not a checkpoint or unsupported version (expected \"",
                   kMagic, "\")");
      saw_magic = true;
      continue;
    }
    if (pending_vocab > 0) {
      h.vocab_tokens.push_back(line);
      --pending_vocab;
      continue;
    }

    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "config") {
      const size_t at = line.find(' ');
      SEMBED_CHECK(at != std::string::npos, DataError, where, ": empty config");
      h.config_json = line.substr(at + 1);
    } else if (tag == "vocab") {
      ss >> pending_vocab;
      SEMBED_CHECK(!ss.fail() && pending_vocab >= 0, DataError, where,
                   ": bad vocab count");
      h.vocab_tokens.reserve(static_cast<size_t>(pending_vocab));
    } else if (tag == "adam_step") {
      ss >> h.adam_step;
      SEMBED_CHECK(!ss.fail(), DataError, where, ": bad adam_step");
      h.has_adam = true;
    } else if (tag == "tensor") {
      h.tensors.push_back(parse_manifest_entry(ss, where));
    } else if (tag == "moment") {
      std::string which;
      ss >> which;
      SEMBED_CHECK(which == "m" || which == "v", DataError, where,
                   ": moment must be m or v");
      h.moments.emplace_back(which[0], parse_manifest_entry(ss, where));
    } else if (tag == "alias") {
      std::string a, b;
      ss >> a >> b;
      SEMBED_CHECK(!ss.fail(), DataError, where, ": malformed alias line");
      h.aliases.emplace_back(a, b);
    } else if (tag == "payload") {
      ss >> h.payload_bytes;
      SEMBED_CHECK(!ss.fail() && h.payload_bytes >= 0, DataError, where,
                   ": bad payload size");
      h.payload_start = pos;
      saw_payload = true;
      break;
    } else {
      throw DataError(where + ": unknown header tag \"" + tag + "\"");
    }
  }
  SEMBED_CHECK(saw_payload, DataError, path, ": missing payload line");
  SEMBED_CHECK(pending_vocab == 0, DataError, path, ": truncated vocab block");
  SEMBED_CHECK(blob.size() - h.payload_start ==
                   static_cast<size_t>(h.payload_bytes),
               DataError, path, ": payload size mismatch (declared ",
               h.payload_bytes, ", got ", blob.size() - h.payload_start, ")");
  return h;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path, bool f32) {
  const char* dtype = f32 ? "f32" : "f64";
  std::ostringstream header;
  header << kMagic << '\n';
  header << "config " << ckpt.config_json << '\n';
  SEMBED_CHECK(ckpt.config_json.find('\n') == std::string::npos, ContractError,
               "config JSON must be a single line");
  header << "vocab " << ckpt.vocab_tokens.size() << '\n';
  for (const std::string& tok : ckpt.vocab_tokens) {
    SEMBED_CHECK(!tok.empty() && tok.find('\n') == std::string::npos, ContractError,
                 "vocab token must be a non-empty single line");
    header << tok << '\n';
  }
  if (ckpt.has_adam) header << "adam_step " << ckpt.adam_step << '\n';

  std::string payload;
  std::unordered_set<const Param*> seen_storage;
  std::unordered_set<std::string> seen_names;
  auto emit = [&](const std::string& tag, const std::string& name, const Tensor& t) {
    check_name(name);
    const int64_t offset = static_cast<int64_t>(payload.size());
    append_tensor_bytes(&payload, t, f32);
    header << tag << ' ' << name << ' ' << dtype << ' ' << offset << ' '
           << static_cast<int64_t>(payload.size()) - offset;
    for (int64_t d : t.shape()) header << ' ' << d;
    header << '\n';
  };

  for (const ParamPtr& p : ckpt.params) {
    SEMBED_CHECK(p != nullptr, ContractError, "null parameter");
    SEMBED_CHECK(seen_storage.insert(p.get()).second, ContractError,
                 "parameter storage listed twice: ", p->name);
    SEMBED_CHECK(seen_names.insert(p->name).second, ContractError,
                 "duplicate parameter name: ", p->name);
    emit("tensor", p->name, p->value);
  }
  for (const auto& [alias, stored] : ckpt.aliases) {
    check_name(alias);
    SEMBED_CHECK(seen_names.count(stored) == 1, ContractError,
                 "alias target not stored: ", stored);
    SEMBED_CHECK(seen_names.insert(alias).second, ContractError,
                 "alias name collides: ", alias);
    header << "alias " << alias << ' ' << stored << '\n';
  }
  if (ckpt.has_adam) {
    for (const auto& [name, t] : ckpt.adam_m) emit("moment m", name, t);
    for (const auto& [name, t] : ckpt.adam_v) emit("moment v", name, t);
  }

  header << "payload " << payload.size() << '\n';
  write_text_atomic(path, header.str() + payload);
}

Checkpoint load_checkpoint(const std::string& path) {
  const std::string blob = read_text_file(path);
  const ParsedHeader h = parse_header(blob, path);
  const std::string payload = blob.substr(h.payload_start);

  Checkpoint out;
  out.config_json = h.config_json;
  out.vocab_tokens = h.vocab_tokens;
  out.has_adam = h.has_adam;
  out.adam_step = h.adam_step;

  std::unordered_set<std::string> names;
  for (const ManifestEntry& e : h.tensors) {
    SEMBED_CHECK(names.insert(e.name).second, DataError, path,
                 ": duplicate tensor ", e.name);
    out.params.push_back(make_param(e.name, decode_tensor(payload, e)));
  }
  for (const auto& [alias, stored] : h.aliases) {
    SEMBED_CHECK(names.count(stored) == 1, DataError, path,
                 ": alias target missing: ", stored);
    SEMBED_CHECK(names.insert(alias).second, DataError, path,
                 ": alias name collides: ", alias);
    out.aliases.emplace_back(alias, stored);
  }
  for (const auto& [which, e] : h.moments) {
    auto& dst = which == 'm' ? out.adam_m : out.adam_v;
    SEMBED_CHECK(dst.emplace(e.name, decode_tensor(payload, e)).second, DataError,
                 path, ": duplicate moment for ", e.name);
  }
  return out;
}

std::vector<ManifestEntry> checkpoint_manifest(const std::string& path) {
  const std::string blob = read_text_file(path);
  return parse_header(blob, path).tensors;
}

}  // namespace sembed
