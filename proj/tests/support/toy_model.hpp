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

#include <optional>
#include <string>
#include <vector>

#include "captune/data/dataset.hpp"
#include "captune/lora/lora.hpp"
#include "captune/model/model.hpp"

namespace captune::testing {

inline model::EncoderConfig small_encoder(std::size_t d_image) {
  model::EncoderConfig c;
  c.max_tokens = 12;
  c.d_model = 16;
  c.n_layers = 2;
  c.mlp_ratio = 2;
  c.d_embed = 8;
  c.d_image = d_image;
  return c;
}

/// Vocabulary over every caption of the train split.
inline model::Vocabulary train_vocabulary(const data::Dataset& ds) {
  std::vector<std::string> texts;
  for (std::size_t i : ds.indices(data::Split::kTrain)) {
    for (const auto& c : ds[i].captions) texts.push_back(c.text);
  }
  return model::Vocabulary::build(texts);
}

inline model::Model model_for(const data::Dataset& ds, const model::EncoderConfig& cfg,
                              std::uint64_t seed,
                              std::optional<lora::LoraConfig> lora_cfg = std::nullopt) {
  model::Model m = model::make_model(train_vocabulary(ds), cfg, seed);
  if (lora_cfg) m.adapters = lora::make_adapter_set(m.params, *lora_cfg, seed + 1);
  return m;
}

}  // namespace captune::testing
