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

#include "captune/model/tokenizer.hpp"

#include <algorithm>
#include <set>

#include "captune/error.hpp"

namespace captune::model {

std::vector<std::string> split_whitespace(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  auto is_space = [](char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
           c == '\v';
  };
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    const std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > start) out.emplace_back(text.substr(start, i - start));
  }
  return out;
}

std::size_t TokenSequence::active_count() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 1));
}

void TokenSequence::validate(std::size_t vocab_size,
                             std::size_t max_tokens) const {
  if (ids.size() != mask.size()) {
    throw DataError("token sequence: " + std::to_string(ids.size()) +
                    " ids but " + std::to_string(mask.size()) + " mask entries");
  }
  if (ids.size() > max_tokens) {
    throw DataError("token sequence longer than max_tokens (" +
                    std::to_string(ids.size()) + " > " +
                    std::to_string(max_tokens) + ")");
  }
  if (active_count() == 0) throw DataError("token sequence has no active tokens");
  for (std::size_t id : ids) {
    if (id >= vocab_size) {
      throw DataError("token id " + std::to_string(id) +
                      " outside vocabulary of size " +
                      std::to_string(vocab_size));
    }
  }
}

Vocabulary::Vocabulary() : tokens_{std::string(kUnknownToken)} {
  index_.emplace(tokens_[0], kUnknownId);
}

Vocabulary Vocabulary::build(std::span<const std::string> texts) {
  std::set<std::string> unique;
  for (const auto& t : texts) {
    for (auto& tok : split_whitespace(t)) unique.insert(std::move(tok));
  }
  unique.erase(std::string(kUnknownToken));
  return from_tokens(std::vector<std::string>(unique.begin(), unique.end()));
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  Vocabulary v;
  for (auto& tok : tokens) {
    if (tok == kUnknownToken) continue;
    if (v.index_.contains(tok)) {
      throw IntegrityError("vocabulary: duplicate token '" + tok + "'");
    }
    v.index_.emplace(tok, v.tokens_.size());
    v.tokens_.push_back(std::move(tok));
  }
  return v;
}

std::size_t Vocabulary::id_of(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnknownId : it->second;
}

const std::string& Vocabulary::token(std::size_t id) const {
  if (id >= tokens_.size()) {
    throw DataError("token id " + std::to_string(id) + " out of range");
  }
  return tokens_[id];
}

TokenSequence Vocabulary::tokenize(std::string_view text,
                                   std::size_t max_tokens) const {
  TokenSequence seq;
  for (const auto& tok : split_whitespace(text)) {
    if (seq.ids.size() == max_tokens) break;
    seq.ids.push_back(id_of(tok));
    seq.mask.push_back(1);
  }
  if (seq.ids.empty()) throw DataError("cannot tokenize an empty caption");
  return seq;
}

std::string Vocabulary::detokenize(const TokenSequence& seq) const {
  std::string out;
  for (std::size_t i = 0; i < seq.ids.size(); ++i) {
    if (i < seq.mask.size() && seq.mask[i] == 0) continue;
    if (!out.empty()) out += ' ';
    out += token(seq.ids[i]);
  }
  return out;
}

}  // namespace captune::model
