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

#include "captune/model/params.hpp"

#include <algorithm>
#include <cmath>

#include "captune/error.hpp"
#include "captune/numcore/rng.hpp"

namespace captune::model {

namespace {

Tensor gaussian(std::size_t rows, std::size_t cols, double stddev,
                numcore::Rng& rng) {
  Tensor t = Tensor::zeros(rows, cols);
  for (double& v : t.data()) v = rng.normal(0.0, stddev);
  return t;
}

}  // namespace

void EncoderConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw ConfigError(std::string("encoder config: ") + name + " must be positive");
  };
  positive(vocab_size, "vocab_size");
  positive(max_tokens, "max_tokens");
  positive(d_model, "d_model");
  positive(n_layers, "n_layers");
  positive(mlp_ratio, "mlp_ratio");
  positive(d_embed, "d_embed");
  positive(d_image, "d_image");
  if (!(init_std > 0.0)) throw ConfigError("encoder config: init_std must be positive");
  if (!(init_temperature >= kMinTemperature && init_temperature <= kMaxTemperature)) {
    throw ConfigError("encoder config: init_temperature outside [0.01, 100]");
  }
}

std::string block_param_name(std::size_t layer, std::string_view which) {
  return "blocks." + std::to_string(layer) + "." + std::string(which);
}

DualEncoderParams DualEncoderParams::init(const EncoderConfig& config,
                                          std::uint64_t seed) {
  config.validate();
  numcore::Rng rng(seed);
  const double s = config.init_std;
  const std::size_t d = config.d_model;
  const std::size_t hidden = config.mlp_ratio * d;

  DualEncoderParams p;
  p.config = config;
  p.token_embedding = gaussian(config.vocab_size, d, s, rng);
  p.position_embedding = gaussian(config.max_tokens, d, s, rng);
  p.blocks.reserve(config.n_layers);
  for (std::size_t i = 0; i < config.n_layers; ++i) {
    TransformerBlock b;
    b.query = gaussian(d, d, s, rng);
    b.key = gaussian(d, d, s, rng);
    b.value = gaussian(d, d, s, rng);
    b.output = gaussian(d, d, s, rng);
    b.mlp_in = gaussian(hidden, d, s, rng);
    b.mlp_out = gaussian(d, hidden, s, rng);
    p.blocks.push_back(std::move(b));
  }
  p.text_projection = gaussian(d, config.d_embed, s, rng);
  p.image_projection = gaussian(config.d_image, config.d_embed, s, rng);
  p.log_temperature = Tensor::scalar(std::log(config.init_temperature));
  return p;
}

double DualEncoderParams::temperature() const {
  return std::exp(log_temperature[0]);
}

void DualEncoderParams::clamp_temperature() {
  double& lt = log_temperature[0];
  lt = std::clamp(lt, std::log(kMinTemperature), std::log(kMaxTemperature));
}

std::size_t DualEncoderParams::total_scalars() const {
  std::size_t n = 0;
  for_each([&](const std::string&, const Tensor& t) { n += t.size(); });
  return n;
}

Tensor* DualEncoderParams::find(std::string_view name) {
  Tensor* found = nullptr;
  for_each([&](const std::string& n, Tensor& t) {
    if (n == name) found = &t;
  });
  return found;
}

const Tensor* DualEncoderParams::find(std::string_view name) const {
  const Tensor* found = nullptr;
  for_each([&](const std::string& n, const Tensor& t) {
    if (n == name) found = &t;
  });
  return found;
}

std::string_view train_mode_name(TrainMode mode) noexcept {
  switch (mode) {
    case TrainMode::kFull: return "full";
    case TrainMode::kLit: return "lit";
    case TrainMode::kLitLora: return "lit_lora";
  }
  return "full";
}

TrainMode parse_train_mode(std::string_view text) {
  if (text == "full") return TrainMode::kFull;
  if (text == "lit") return TrainMode::kLit;
  if (text == "lit_lora" || text == "lit-lora") return TrainMode::kLitLora;
  throw ConfigError("unknown training mode '" + std::string(text) +
                    "' (expected full, lit or lit-lora)");
}

}  // namespace captune::model
