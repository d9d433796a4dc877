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

#include "captune/loss/loss.hpp"

#include <cmath>

#include "captune/error.hpp"

namespace captune::loss {

namespace {

using numcore::shape_string;

void check_pair(const Tensor& x, const Tensor& y) {
  if (x.rank() != 2 || y.rank() != 2) {
    throw ShapeError("similarity inputs must be matrices, got " +
                     shape_string(x.shape()) + " and " + shape_string(y.shape()));
  }
  if (x.rows() != y.rows() || x.cols() != y.cols()) {
    throw ShapeError("batch mismatch between " + shape_string(x.shape()) +
                     " and " + shape_string(y.shape()));
  }
}

NodeId directional_term(Tape& tape, NodeId logits) {
  return tape.scale(tape.diag_sum(tape.log_softmax_rows(logits)), -1.0);
}

}  // namespace

std::string_view direction_name(Direction d) noexcept {
  switch (d) {
    case Direction::kImageToText: return "i2t";
    case Direction::kTextToImage: return "t2i";
    case Direction::kSymmetric: return "symmetric";
  }
  return "symmetric";
}

Direction parse_direction(std::string_view text) {
  if (text == "i2t") return Direction::kImageToText;
  if (text == "t2i") return Direction::kTextToImage;
  if (text == "symmetric") return Direction::kSymmetric;
  throw ConfigError("unknown loss direction '" + std::string(text) + "'");
}

std::string_view reduction_name(Reduction r) noexcept {
  return r == Reduction::kSum ? "sum" : "mean";
}

Reduction parse_reduction(std::string_view text) {
  if (text == "sum") return Reduction::kSum;
  if (text == "mean") return Reduction::kMean;
  throw ConfigError("unknown loss reduction '" + std::string(text) + "'");
}

Tensor similarity_matrix(const Tensor& x, const Tensor& y) {
  check_pair(x, y);
  return numcore::matmul_nt(x, y);
}

NodeId info_nce(Tape& tape, NodeId x, NodeId y, NodeId log_tau,
                const LossConfig& config) {
  check_pair(tape.value(x), tape.value(y));
  const std::size_t batch = tape.value(x).rows();
  NodeId inv_tau = tape.exp(tape.scale(log_tau, -1.0));
  NodeId logits = tape.mul_scalar(tape.linear(x, y), inv_tau);

  NodeId total;
  switch (config.direction) {
    case Direction::kImageToText:
      total = directional_term(tape, logits);
      break;
    case Direction::kTextToImage:
      total = directional_term(tape, tape.transpose(logits));
      break;
    case Direction::kSymmetric:
      total = tape.scale(tape.add(directional_term(tape, logits),
                                  directional_term(tape, tape.transpose(logits))),
                         0.5);
      break;
  }
  if (config.reduction == Reduction::kMean) {
    total = tape.scale(total, 1.0 / static_cast<double>(batch));
  }
  return total;
}

double info_nce(const Tensor& x, const Tensor& y, double tau,
                const LossConfig& config) {
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw ParameterError("info_nce: temperature must be positive, got " +
                         std::to_string(tau));
  }
  Tape tape;
  NodeId loss = info_nce(tape, tape.constant_ref(x), tape.constant_ref(y),
                         tape.constant(Tensor::scalar(std::log(tau))), config);
  return tape.value(loss)[0];
}

Tensor stack_images(std::span<const Example> batch, const LossConfig& config,
                    numcore::Rng* jitter_rng) {
  if (batch.empty()) throw ContractError("empty batch");
  const std::size_t d = batch.front().image.size();
  Tensor images = Tensor::zeros(batch.size(), d);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Tensor& img = batch[i].image;
    if (img.size() != d) {
      throw ShapeError("image " + std::to_string(i) + " has dimension " +
                       std::to_string(img.size()) + ", expected " + std::to_string(d));
    }
    std::copy(img.data().begin(), img.data().end(), images.row(i).begin());
  }
  if (config.image_jitter_std > 0.0 && jitter_rng != nullptr) {
    for (double& v : images.data()) v += jitter_rng->normal(0.0, config.image_jitter_std);
  }
  return images;
}

std::vector<Example> sample_examples(std::span<const MultiCaptionExample> batch,
                                     numcore::Rng& rng) {
  std::vector<Example> out;
  out.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& rec = batch[i];
    if (rec.captions.empty()) {
      throw DataError("record " + std::to_string(i) + " has no captions");
    }
    const std::size_t pick = rec.captions.size() == 1
                                 ? 0
                                 : static_cast<std::size_t>(
                                       rng.uniform_index(rec.captions.size()));
    out.push_back(Example{rec.image, rec.captions[pick]});
  }
  return out;
}

double clip_loss(std::span<const Example> batch,
                 const model::DualEncoderParams& params,
                 const lora::AdapterSet* adapters, const LossConfig& config,
                 numcore::Rng* jitter_rng) {
  Tape tape;
  model::Binder bind = model::Binder::frozen(tape);
  const Tensor images = stack_images(batch, config, jitter_rng);
  std::vector<model::TokenSequence> texts;
  texts.reserve(batch.size());
  for (const auto& ex : batch) texts.push_back(ex.text);
  const model::PackedText packed = model::pack_sequences(texts, params.config);

  NodeId img = model::encode_image_batch(bind, params, tape.constant_ref(images));
  NodeId txt = model::encode_text_batch(bind, params, adapters, packed);
  NodeId loss = info_nce(tape, img, txt,
                         bind(model::kLogTemperature, params.log_temperature), config);
  return tape.value(loss)[0];
}

double text_aug_loss(std::span<const MultiCaptionExample> batch,
                     const model::DualEncoderParams& params,
                     const lora::AdapterSet* adapters, numcore::Rng& rng,
                     const LossConfig& config) {
  const std::vector<Example> sampled = sample_examples(batch, rng);
  return clip_loss(sampled, params, adapters, config, &rng);
}

LossEvaluation clip_loss_with_gradients(std::span<const Example> batch,
                                        const model::DualEncoderParams& params,
                                        const lora::AdapterSet* adapters,
                                        const LossConfig& config,
                                        model::TrainMode mode,
                                        numcore::Rng* jitter_rng,
                                        const model::ForwardOptions& options) {
  model::check_mode(mode, adapters);
  Tape tape;
  model::Binder bind(tape, [&](std::string_view name) {
    return model::is_trainable(name, mode, adapters);
  });
  const Tensor images = stack_images(batch, config, jitter_rng);
  std::vector<model::TokenSequence> texts;
  texts.reserve(batch.size());
  for (const auto& ex : batch) texts.push_back(ex.text);
  const model::PackedText packed = model::pack_sequences(texts, params.config);

  NodeId img = model::encode_image_batch(bind, params, tape.constant_ref(images));
  NodeId txt = model::encode_text_batch(bind, params, adapters, packed, options);
  NodeId loss = info_nce(tape, img, txt,
                         bind(model::kLogTemperature, params.log_temperature), config);
  LossEvaluation out;
  out.loss = tape.value(loss)[0];
  out.grads = tape.backward(loss);
  return out;
}

}  // namespace captune::loss
