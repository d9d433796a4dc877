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

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "captune/data/dataset.hpp"
#include "captune/data/toy_corpus.hpp"

namespace captune::data {

/// Produces synthetic captions for a record's image.
class CaptionProvider {
 public:
  virtual ~CaptionProvider() = default;
  virtual std::string id() const = 0;
  /// Language tag of the generated captions.
  virtual std::string language() const { return "en"; }
  /// Exactly `k` captions; throws on failure.
  virtual std::vector<std::string> generate(const Record& record, std::size_t k) const = 0;
};

/// Captioner for the toy world: reads the image by nearest prototype and
/// phrases it with one of several prefixes, cycling through them. With
/// probability `hallucination_rate` a caption names a random modifier.
class TemplateCaptionProvider final : public CaptionProvider {
 public:
  TemplateCaptionProvider(ToyWorld world, std::uint64_t seed,
                          double hallucination_rate = 0.1);

  std::string id() const override;
  std::vector<std::string> generate(const Record& record, std::size_t k) const override;

  static const std::vector<std::string>& prefixes();

 private:
  ToyWorld world_;
  std::uint64_t seed_;
  double hallucination_rate_;
};

/// Runs `command K` with one JSON record per line on stdin
/// ({"id", "image_feature"}) and expects K lines of captions per record.
class CommandCaptionProvider final : public CaptionProvider {
 public:
  explicit CommandCaptionProvider(std::string command) : command_(std::move(command)) {}
  std::string id() const override { return "command:" + command_; }
  std::vector<std::string> generate(const Record& record, std::size_t k) const override;

 private:
  std::string command_;
};

struct AugmentResult {
  Dataset dataset;
  std::size_t failures = 0;
  std::vector<std::string> errors;  // one line per failed record
};

/// Appends `k` synthetic captions to each record in `splits` (all splits when
/// empty). A failing record keeps its captions and is counted.
AugmentResult augment_captions(const Dataset& ds, const CaptionProvider& provider,
                               std::size_t k, const std::set<Split>& splits = {});

}  // namespace captune::data
