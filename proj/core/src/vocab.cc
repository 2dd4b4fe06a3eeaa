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

#include "sembed/vocab.h"

#include <algorithm>
#include <fstream>

#include "sembed/error.h"

namespace sembed {

namespace {

const char* const kSpecialTokens[kNumSpecials] = {"[PAD]", "[CLS]", "[SEP]",
                                                  "[MASK]", "[UNK]"};

bool is_unicode_space(uint32_t cp) {
  switch (cp) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D:
    case 0x20: case 0x85: case 0xA0: case 0x1680:
    case 0x2028: case 0x2029: case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

// Decodes the UTF-8 code point at s[i]; advances i past it. Malformed bytes
// are consumed one at a time and returned verbatim (treated as content).
uint32_t decode_utf8(const std::string& s, size_t& i) {
  const auto byte = [&](size_t k) { return static_cast<unsigned char>(s[k]); };
  const unsigned char b0 = byte(i);
  size_t len = 1;
  uint32_t cp = b0;
  if (b0 >= 0xF0) {
    len = 4;
    cp = b0 & 0x07u;
  } else if (b0 >= 0xE0) {
    len = 3;
    cp = b0 & 0x0Fu;
  } else if (b0 >= 0xC0) {
    len = 2;
    cp = b0 & 0x1Fu;
  }
  if (len == 1 || i + len > s.size()) {
    ++i;
    return b0;
  }
  for (size_t k = 1; k < len; ++k) {
    const unsigned char bk = byte(i + k);
    if ((bk & 0xC0u) != 0x80u) {
      ++i;
      return b0;
    }
    cp = (cp << 6) | (bk & 0x3Fu);
  }
  i += len;
  return cp;
}

}  // namespace

std::vector<std::string> split_words(const std::string& text) {
  std::vector<std::string> words;
  std::string cur;
  size_t i = 0;
  while (i < text.size()) {
    const size_t start = i;
    const uint32_t cp = decode_utf8(text, i);
    if (is_unicode_space(cp)) {
      if (!cur.empty()) {
        words.push_back(std::move(cur));
        cur.clear();
      }
      continue;
    }
    for (size_t k = start; k < i; ++k) {
      char c = text[k];
      if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
      cur.push_back(c);
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  return words;
}

Vocabulary::Vocabulary() {
  for (int64_t i = 0; i < kNumSpecials; ++i) {
    tokens_.emplace_back(kSpecialTokens[i]);
    index_[tokens_.back()] = i;
  }
}

void Vocabulary::append_content(const std::string& token) {
  SEMBED_CHECK(!token.empty(), DataError, "empty vocabulary token");
  SEMBED_CHECK(index_.find(token) == index_.end(), DataError,
               "duplicate vocabulary token: ", token);
  index_[token] = static_cast<int64_t>(tokens_.size());
  tokens_.push_back(token);
}

Vocabulary Vocabulary::build(const std::vector<std::string>& sentences,
                             int64_t min_freq) {
  SEMBED_CHECK(min_freq >= 1, ContractError, "min_freq must be >= 1");
  std::unordered_map<std::string, int64_t> freq;
  for (const auto& s : sentences) {
    for (auto& w : split_words(s)) ++freq[w];
  }
  std::vector<std::pair<std::string, int64_t>> items(freq.begin(), freq.end());
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Vocabulary v;
  for (const auto& [tok, f] : items) {
    if (f >= min_freq) v.append_content(tok);
  }
  return v;
}

Vocabulary Vocabulary::from_tokens(const std::vector<std::string>& content_tokens) {
  Vocabulary v;
  for (const auto& t : content_tokens) v.append_content(t);
  return v;
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  SEMBED_CHECK(in.good(), IoError, "cannot open vocabulary file: ", path);
  Vocabulary v;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    v.append_content(line);
  }
  return v;
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  SEMBED_CHECK(out.good(), IoError, "cannot write vocabulary file: ", path);
  for (int64_t i = kNumSpecials; i < size(); ++i) {
    out << tokens_[static_cast<size_t>(i)] << '\n';
  }
  SEMBED_CHECK(out.good(), IoError, "write failed: ", path);
}

int64_t Vocabulary::id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnkId : it->second;
}

const std::string& Vocabulary::token(int64_t id) const {
  SEMBED_CHECK(id >= 0 && id < size(), ContractError, "token id ", id,
               " out of range [0, ", size(), ")");
  return tokens_[static_cast<size_t>(id)];
}

std::vector<int64_t> tokenize(const std::string& text, const Vocabulary& vocab) {
  std::vector<int64_t> ids;
  for (const auto& w : split_words(text)) ids.push_back(vocab.id(w));
  if (ids.empty()) ids.push_back(kUnkId);
  return ids;
}

std::vector<int64_t> tokenize_words(const std::vector<std::string>& words,
                                    const Vocabulary& vocab) {
  std::vector<int64_t> ids;
  ids.reserve(words.size());
  for (const auto& w : words) ids.push_back(vocab.id(w));
  if (ids.empty()) ids.push_back(kUnkId);
  return ids;
}

}  // namespace sembed
