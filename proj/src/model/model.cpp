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

#include "captune/model/model.hpp"

#include <algorithm>

#include "captune/error.hpp"

namespace captune::model {

Tensor Model::embed_texts(std::span<const std::string> texts) const {
  std::vector<TokenSequence> seqs;
  seqs.reserve(texts.size());
  for (const auto& t : texts) seqs.push_back(tokenize(t));
  return encode_texts(seqs, params, adapter_ptr());
}

Tensor Model::embed_images(std::span<const std::vector<double>> images) const {
  const std::size_t d = params.config.d_image;
  Tensor stacked = Tensor::zeros(images.size(), d);
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images[i].size() != d) {
      throw ShapeError("image feature " + std::to_string(i) + " has dimension " +
                       std::to_string(images[i].size()) + ", expected " +
                       std::to_string(d));
    }
    std::copy(images[i].begin(), images[i].end(), stacked.row(i).begin());
  }
  if (images.empty()) return stacked;
  return encode_images(stacked, params);
}

Model make_model(Vocabulary vocab, EncoderConfig config, std::uint64_t seed) {
  config.vocab_size = vocab.size();
  Model m;
  m.params = DualEncoderParams::init(config, seed);
  m.vocab = std::move(vocab);
  return m;
}

}  // namespace captune::model
