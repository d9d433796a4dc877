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
#include <string>
#include <string_view>
#include <vector>

#include "captune/model/tokenizer.hpp"
#include "captune/numcore/tensor.hpp"

namespace captune::model {

using numcore::Tensor;

/// Temperature bounds: tau is the divisor of the similarity logits.
inline constexpr double kMinTemperature = 0.01;
inline constexpr double kMaxTemperature = 100.0;

struct EncoderConfig {
  std::size_t vocab_size = 32;
  std::size_t max_tokens = kDefaultMaxTokens;
  std::size_t d_model = 32;
  std::size_t n_layers = 2;
  std::size_t mlp_ratio = 4;
  std::size_t d_embed = 16;
  std::size_t d_image = 32;
  double init_std = 0.02;
  double init_temperature = 0.07;

  void validate() const;
  friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

/// Weights are stored out x in, so a projection of row activations X is
/// X * W^T. Both LoRA targets (query, value) follow that layout.
struct TransformerBlock {
  Tensor query;
  Tensor key;
  Tensor value;
  Tensor output;
  Tensor mlp_in;   // (mlp_ratio * d_model) x d_model
  Tensor mlp_out;  // d_model x (mlp_ratio * d_model)
};

struct DualEncoderParams {
  EncoderConfig config;
  Tensor token_embedding;     // vocab x d_model
  Tensor position_embedding;  // max_tokens x d_model
  std::vector<TransformerBlock> blocks;
  Tensor text_projection;   // d_model x d_embed
  Tensor image_projection;  // d_image x d_embed, frozen under LiT
  Tensor log_temperature;   // 1x1, tau = exp(log_temperature)

  static DualEncoderParams init(const EncoderConfig& config, std::uint64_t seed);

  double temperature() const;
  /// Pulls tau back into [kMinTemperature, kMaxTemperature].
  void clamp_temperature();

  /// Visits every tensor with its canonical name in a fixed order.
  template <class F>
  void for_each(F&& visit) {
    for_each_impl(*this, visit);
  }
  template <class F>
  void for_each(F&& visit) const {
    for_each_impl(*this, visit);
  }

  std::size_t total_scalars() const;
  Tensor* find(std::string_view name);
  const Tensor* find(std::string_view name) const;

 private:
  template <class Self, class F>
  static void for_each_impl(Self& self, F& visit) {
    visit(std::string("token_embedding"), self.token_embedding);
    visit(std::string("position_embedding"), self.position_embedding);
    for (std::size_t i = 0; i < self.blocks.size(); ++i) {
      const std::string p = "blocks." + std::to_string(i) + ".";
      visit(p + "query", self.blocks[i].query);
      visit(p + "key", self.blocks[i].key);
      visit(p + "value", self.blocks[i].value);
      visit(p + "output", self.blocks[i].output);
      visit(p + "mlp_in", self.blocks[i].mlp_in);
      visit(p + "mlp_out", self.blocks[i].mlp_out);
    }
    visit(std::string("text_projection"), self.text_projection);
    visit(std::string("image_projection"), self.image_projection);
    visit(std::string("log_temperature"), self.log_temperature);
  }
};

inline constexpr std::string_view kTextProjection = "text_projection";
inline constexpr std::string_view kImageProjection = "image_projection";
inline constexpr std::string_view kLogTemperature = "log_temperature";

std::string block_param_name(std::size_t layer, std::string_view which);

enum class TrainMode { kFull, kLit, kLitLora };

std::string_view train_mode_name(TrainMode mode) noexcept;
/// Accepts "full", "lit", "lit_lora" and "lit-lora".
TrainMode parse_train_mode(std::string_view text);

}  // namespace captune::model
