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

#include "captune/data/augment.hpp"

#include <exception>
#include <sstream>

#include "captune/error.hpp"
#include "captune/numcore/rng.hpp"
#include "captune/util/process.hpp"
#include "json.hpp"

namespace captune::data {

TemplateCaptionProvider::TemplateCaptionProvider(ToyWorld world, std::uint64_t seed,
                                                 double hallucination_rate)
    : world_(std::move(world)), seed_(seed), hallucination_rate_(hallucination_rate) {
  if (!(hallucination_rate >= 0.0 && hallucination_rate <= 1.0)) {
    throw ConfigError("hallucination rate must be in [0, 1]");
  }
}

const std::vector<std::string>& TemplateCaptionProvider::prefixes() {
  static const std::vector<std::string> kPrefixes{
      "a photo of a {m} {n}",       "there is a {m} {n}",        "a {m} {n} in the picture",
      "this is a {m} {n}",          "a picture showing a {m} {n}", "an image of a {m} {n}",
      "a view of a {m} {n}",        "a {m} {n}",                 "the {m} {n} is visible",
      "a shot of a {m} {n}"};
  return kPrefixes;
}

std::string TemplateCaptionProvider::id() const {
  std::ostringstream ss;
  ss << "toy-template(seed=" << seed_ << ";hallucination=" << hallucination_rate_ << ")";
  return ss.str();
}

std::vector<std::string> TemplateCaptionProvider::generate(const Record& record,
                                                           std::size_t k) const {
  const auto [cluster, modifier] = world_.decode(record.image);
  const auto& pre = prefixes();
  std::vector<std::string> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    numcore::Rng rng(numcore::mix_seed(seed_, "caption:" + record.id, i));
    std::size_t m = modifier;
    if (rng.uniform() < hallucination_rate_) m = rng.uniform_index(world_.spec.n_modifiers);
    out.push_back(world_.describe(pre[i % pre.size()], cluster, m));
  }
  return out;
}

std::vector<std::string> CommandCaptionProvider::generate(const Record& record,
                                                          std::size_t k) const {
  nlohmann::json j{{"id", record.id}, {"image_feature", record.image}};
  auto lines = util::run_line_filter(command_ + " " + std::to_string(k), j.dump() + "\n");
  if (lines.size() != k) {
    throw DataError("caption command returned " + std::to_string(lines.size()) +
                    " captions, expected " + std::to_string(k));
  }
  for (const auto& l : lines) {
    if (l.empty()) throw DataError("caption command returned an empty caption");
  }
  return lines;
}

AugmentResult augment_captions(const Dataset& ds, const CaptionProvider& provider,
                               std::size_t k, const std::set<Split>& splits) {
  AugmentResult result;
  std::vector<Record> records;
  records.reserve(ds.size());
  std::size_t added = 0;
  for (const auto& r : ds.records()) {
    Record out = r;
    if (k > 0 && (splits.empty() || splits.contains(r.split))) {
      try {
        auto texts = provider.generate(r, k);
        if (texts.size() != k) {
          throw DataError("provider returned " + std::to_string(texts.size()) +
                          " captions, expected " + std::to_string(k));
        }
        for (auto& t : texts) {
          if (t.empty()) throw DataError("provider returned an empty caption");
        }
        for (auto& t : texts) {
          out.captions.push_back({std::move(t), CaptionSource::kSynthetic, provider.language()});
        }
        added += k;
      } catch (const std::exception& e) {
        ++result.failures;
        result.errors.push_back(r.id + ": " + e.what());
        out = r;
      }
    }
    records.push_back(std::move(out));
  }
  std::string split_list;
  for (Split s : splits) split_list += (split_list.empty() ? "" : ",") + std::string(split_name(s));
  result.dataset = ds.with_records(std::move(records));
  result.dataset.record_transform({"augment_captions",
                                   {{"provider", provider.id()},
                                    {"k", std::to_string(k)},
                                    {"splits", split_list.empty() ? "*" : split_list},
                                    {"added", std::to_string(added)},
                                    {"failures", std::to_string(result.failures)}}});
  return result;
}

}  // namespace captune::data
