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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "captune/lora/lora.hpp"
#include "captune/model/encoder.hpp"
#include "captune/model/params.hpp"
#include "captune/model/tokenizer.hpp"

namespace captune::model {

/// Everything needed to embed raw captions and image features.
struct Model {
  Vocabulary vocab;
  DualEncoderParams params;
  std::optional<lora::AdapterSet> adapters;

  const lora::AdapterSet* adapter_ptr() const noexcept {
    return adapters ? &*adapters : nullptr;
  }

  TokenSequence tokenize(std::string_view text) const {
    return vocab.tokenize(text, params.config.max_tokens);
  }
  /// Unit-norm rows, one per text.
  Tensor embed_texts(std::span<const std::string> texts) const;
  /// Unit-norm rows, one per image feature vector.
  Tensor embed_images(std::span<const std::vector<double>> images) const;
};

/// Fresh model over `vocab`; config.vocab_size is overwritten with its size.
Model make_model(Vocabulary vocab, EncoderConfig config, std::uint64_t seed);

}  // namespace captune::model
