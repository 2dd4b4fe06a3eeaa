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

#ifndef SEMBED_VOCAB_H_
#define SEMBED_VOCAB_H_

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace sembed {

// Special token ids are fixed; everything else starts at kNumSpecials.
inline constexpr int64_t kPadId = 0;
inline constexpr int64_t kClsId = 1;
inline constexpr int64_t kSepId = 2;
inline constexpr int64_t kMaskId = 3;
inline constexpr int64_t kUnkId = 4;
inline constexpr int64_t kNumSpecials = 5;

// Lowercases (ASCII) and splits on Unicode whitespace. Whitespace-only
// input yields no words.
std::vector<std::string> split_words(const std::string& text);

class Vocabulary {
 public:
  Vocabulary();

  // Content tokens ordered by (frequency desc, token asc); ids assigned
  // after the specials. Tokens below min_freq are dropped (they map to UNK
  // at tokenize time).
  static Vocabulary build(const std::vector<std::string>& sentences,
                          int64_t min_freq = 1);

  // Builds from an explicit content-token list (ids follow list order).
  static Vocabulary from_tokens(const std::vector<std::string>& content_tokens);

  // One content token per line; line number = id - kNumSpecials.
  static Vocabulary load(const std::string& path);
  void save(const std::string& path) const;

  int64_t size() const { return static_cast<int64_t>(tokens_.size()); }
  int64_t content_size() const { return size() - kNumSpecials; }

  // OOV maps to kUnkId.
  int64_t id(const std::string& token) const;
  const std::string& token(int64_t id) const;
  bool is_special(int64_t id) const { return id >= 0 && id < kNumSpecials; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int64_t> index_;
  void append_content(const std::string& token);
};

// Lowercase, split on Unicode whitespace, map OOV to UNK. Never empty:
// input with no words yields a single UNK.
std::vector<int64_t> tokenize(const std::string& text, const Vocabulary& vocab);

std::vector<int64_t> tokenize_words(const std::vector<std::string>& words,
                                    const Vocabulary& vocab);

}  // namespace sembed

#endif  // SEMBED_VOCAB_H_
