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

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "captune/data/dataset.hpp"

namespace captune::data {

class Translator {
 public:
  virtual ~Translator() = default;
  virtual std::string id() const = 0;
  virtual bool supports(std::string_view source, std::string_view target) const = 0;
  virtual std::string translate(std::string_view text, std::string_view source,
                                std::string_view target) const = 0;
  /// Batch form; the default translates one text at a time.
  virtual std::vector<std::string> translate_all(std::span<const std::string> texts,
                                                 std::string_view source,
                                                 std::string_view target) const;
};

/// Returns texts unchanged; only language tags move.
class IdentityTranslator final : public Translator {
 public:
  std::string id() const override { return "identity"; }
  bool supports(std::string_view, std::string_view) const override { return true; }
  std::string translate(std::string_view text, std::string_view,
                        std::string_view) const override {
    return std::string(text);
  }
};

/// Deterministic stand-in for machine translation: a seeded substitution of
/// the letters a-z per language, applied between "en" and each supported
/// language in either direction. Bijective, so translating back restores the
/// input exactly.
class PseudoTranslator final : public Translator {
 public:
  explicit PseudoTranslator(std::uint64_t seed,
                            std::vector<std::string> languages = {"pt"});

  std::string id() const override;
  bool supports(std::string_view source, std::string_view target) const override;
  std::string translate(std::string_view text, std::string_view source,
                        std::string_view target) const override;

 private:
  using Cipher = std::array<char, 26>;
  struct Pair {
    Cipher forward;
    Cipher inverse;
  };
  std::uint64_t seed_;
  std::map<std::string, Pair, std::less<>> ciphers_;
};

/// Runs an external program: `command SOURCE TARGET < in > out`, one text per
/// line. Only constructed when external commands are explicitly enabled.
class CommandTranslator final : public Translator {
 public:
  explicit CommandTranslator(std::string command) : command_(std::move(command)) {}
  std::string id() const override { return "command:" + command_; }
  bool supports(std::string_view, std::string_view) const override { return true; }
  std::string translate(std::string_view text, std::string_view source,
                        std::string_view target) const override;
  std::vector<std::string> translate_all(std::span<const std::string> texts,
                                         std::string_view source,
                                         std::string_view target) const override;

 private:
  std::string command_;
};

enum class TranslateMode { kReplace, kDuplicate };

struct TranslateOptions {
  std::string target_lang = "pt";
  /// Only captions in this language are translated; empty = any language
  /// other than the target.
  std::string source_lang;
  TranslateMode mode = TranslateMode::kReplace;
  /// Restricts translation to these splits; empty = all splits.
  std::set<Split> splits;
};

/// Throws ConfigError when the translator cannot handle a source/target pair
/// present in the selection.
Dataset translate(const Dataset& ds, const Translator& translator,
                  const TranslateOptions& options);

}  // namespace captune::data
