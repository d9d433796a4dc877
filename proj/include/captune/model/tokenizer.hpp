// Copyright 2026 The captune Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace captune::model {

inline constexpr std::size_t kDefaultMaxTokens = 77;
inline constexpr std::size_t kUnknownId = 0;
inline constexpr std::string_view kUnknownToken = "<unk>";

/// Token ids plus a mask; mask[i] == 0 marks a padded position that the
/// encoder ignores.
struct TokenSequence {
  std::vector<std::size_t> ids;
  std::vector<std::uint8_t> mask;

  std::size_t active_count() const;
  /// Throws DataError when empty, too long, or holding out-of-vocab ids.
  void validate(std::size_t vocab_size, std::size_t max_tokens) const;
};

/// Whitespace vocabulary with a reserved unknown id (0). Tokens are sorted so
/// the id assignment is independent of corpus order.
class Vocabulary {
 public:
  Vocabulary();
  static Vocabulary build(std::span<const std::string> texts);
  static Vocabulary from_tokens(std::vector<std::string> tokens);

  std::size_t size() const noexcept { return tokens_.size(); }
  std::size_t id_of(std::string_view token) const;
  const std::string& token(std::size_t id) const;
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

  TokenSequence tokenize(std::string_view text,
                         std::size_t max_tokens = kDefaultMaxTokens) const;
  std::string detokenize(const TokenSequence& seq) const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

std::vector<std::string> split_whitespace(std::string_view text);

}  // namespace captune::model
