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

#include "captune/data/translate.hpp"

#include <numeric>

#include "captune/error.hpp"
#include "captune/numcore/rng.hpp"
#include "captune/util/process.hpp"

namespace captune::data {

namespace {

constexpr std::string_view kPivot = "en";

std::string substitute(std::string_view text, const std::array<char, 26>& table) {
  std::string out(text);
  for (char& c : out) {
    if (c >= 'a' && c <= 'z') c = table[static_cast<std::size_t>(c - 'a')];
  }
  return out;
}

}  // namespace

std::vector<std::string> Translator::translate_all(std::span<const std::string> texts,
                                                   std::string_view source,
                                                   std::string_view target) const {
  std::vector<std::string> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(translate(t, source, target));
  return out;
}

PseudoTranslator::PseudoTranslator(std::uint64_t seed, std::vector<std::string> languages)
    : seed_(seed) {
  for (const auto& lang : languages) {
    if (lang == kPivot) throw ConfigError("pseudo-translator pivot language is 'en'");
    numcore::Rng rng(numcore::mix_seed(seed, "pseudo-translate:" + lang));
    std::array<int, 26> perm{};
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = perm.size(); i > 1; --i) {
      std::swap(perm[i - 1], perm[rng.uniform_index(i)]);
    }
    Pair p{};
    for (std::size_t i = 0; i < 26; ++i) {
      p.forward[i] = static_cast<char>('a' + perm[i]);
      p.inverse[static_cast<std::size_t>(perm[i])] = static_cast<char>('a' + i);
    }
    ciphers_.emplace(lang, p);
  }
}

std::string PseudoTranslator::id() const {
  std::string langs;
  for (const auto& [lang, _] : ciphers_) langs += (langs.empty() ? "" : ",") + lang;
  return "pseudo(seed=" + std::to_string(seed_) + ";" + langs + ")";
}

bool PseudoTranslator::supports(std::string_view source, std::string_view target) const {
  if (source == target) return true;
  if (source == kPivot) return ciphers_.find(target) != ciphers_.end();
  if (target == kPivot) return ciphers_.find(source) != ciphers_.end();
  return ciphers_.find(source) != ciphers_.end() && ciphers_.find(target) != ciphers_.end();
}

std::string PseudoTranslator::translate(std::string_view text, std::string_view source,
                                        std::string_view target) const {
  if (!supports(source, target)) {
    throw ConfigError("pseudo-translator cannot translate '" + std::string(source) +
                      "' to '" + std::string(target) + "'");
  }
  if (source == target) return std::string(text);
  std::string pivot = source == kPivot
                          ? std::string(text)
                          : substitute(text, ciphers_.find(source)->second.inverse);
  if (target == kPivot) return pivot;
  return substitute(pivot, ciphers_.find(target)->second.forward);
}

std::string CommandTranslator::translate(std::string_view text, std::string_view source,
                                         std::string_view target) const {
  const std::string one(text);
  return translate_all(std::span<const std::string>(&one, 1), source, target).front();
}

std::vector<std::string> CommandTranslator::translate_all(std::span<const std::string> texts,
                                                          std::string_view source,
                                                          std::string_view target) const {
  std::string input;
  for (const auto& t : texts) {
    if (t.find('\n') != std::string::npos) {
      throw DataError("caption contains a newline and cannot be sent to '" + command_ + "'");
    }
    input += t;
    input += '\n';
  }
  const std::vector<std::string> lines = util::run_line_filter(
      command_ + " " + util::shell_quote(source) + " " + util::shell_quote(target), input);
  if (lines.size() != texts.size()) {
    throw DataError("translator command '" + command_ + "' returned " +
                    std::to_string(lines.size()) + " lines for " +
                    std::to_string(texts.size()) + " inputs");
  }
  return lines;
}

Dataset translate(const Dataset& ds, const Translator& translator,
                  const TranslateOptions& options) {
  if (options.target_lang.empty()) throw ConfigError("translation target language is empty");
  auto selected = [&](const Record& r, const Caption& c) {
    if (!options.splits.empty() && !options.splits.contains(r.split)) return false;
    if (c.lang == options.target_lang) return false;
    return options.source_lang.empty() || c.lang == options.source_lang;
  };

  // Group texts per source language so batch translators see one call each.
  std::map<std::string, std::vector<std::string>> pending;
  for (const auto& r : ds.records()) {
    for (const auto& c : r.captions) {
      if (selected(r, c)) pending[c.lang].push_back(c.text);
    }
  }
  std::map<std::string, std::vector<std::string>> translated;
  std::size_t count = 0;
  for (auto& [lang, texts] : pending) {
    if (!translator.supports(lang, options.target_lang)) {
      throw ConfigError("translator " + translator.id() + " does not support '" + lang +
                        "' -> '" + options.target_lang + "'");
    }
    translated[lang] = translator.translate_all(texts, lang, options.target_lang);
    count += texts.size();
  }

  std::map<std::string, std::size_t> cursor;
  std::vector<Record> records;
  records.reserve(ds.size());
  for (const auto& r : ds.records()) {
    Record out = r;
    std::vector<Caption> extra;
    for (std::size_t i = 0; i < r.captions.size(); ++i) {
      const Caption& c = r.captions[i];
      if (!selected(r, c)) continue;
      Caption t{translated[c.lang][cursor[c.lang]++], c.source, options.target_lang};
      if (t.text.empty()) {
        throw DataError("empty translation for a caption of record '" + r.id + "'");
      }
      if (options.mode == TranslateMode::kReplace) {
        out.captions[i] = std::move(t);
      } else {
        extra.push_back(std::move(t));
      }
    }
    out.captions.insert(out.captions.end(), extra.begin(), extra.end());
    records.push_back(std::move(out));
  }

  Dataset result = ds.with_records(std::move(records));
  std::string splits;
  for (Split s : options.splits) splits += (splits.empty() ? "" : ",") + std::string(split_name(s));
  result.record_transform(
      {"translate",
       {{"translator", translator.id()},
        {"target_lang", options.target_lang},
        {"source_lang", options.source_lang.empty() ? "*" : options.source_lang},
        {"mode", options.mode == TranslateMode::kReplace ? "replace" : "duplicate"},
        {"splits", splits.empty() ? "*" : splits},
        {"translated", std::to_string(count)}}});
  return result;
}

}  // namespace captune::data
