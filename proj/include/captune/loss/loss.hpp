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

#include <span>
#include <string_view>
#include <vector>

#include "captune/lora/lora.hpp"
#include "captune/model/encoder.hpp"
#include "captune/numcore/rng.hpp"
#include "captune/numcore/tape.hpp"

namespace captune::loss {

using numcore::NodeId;
using numcore::Tape;
using numcore::Tensor;

/// Which side plays the query role. i2t ranks texts for each image (rows of
/// sim(images, texts)); t2i the reverse; symmetric averages both.
enum class Direction { kImageToText, kTextToImage, kSymmetric };
enum class Reduction { kSum, kMean };

std::string_view direction_name(Direction d) noexcept;
Direction parse_direction(std::string_view text);
std::string_view reduction_name(Reduction r) noexcept;
Reduction parse_reduction(std::string_view text);

struct LossConfig {
  Direction direction = Direction::kSymmetric;
  Reduction reduction = Reduction::kSum;
  /// Standard deviation of the Gaussian jitter applied to image features.
  double image_jitter_std = 0.0;
};

/// M[i][j] = X_i . Y_j for two equally sized batches of row vectors.
Tensor similarity_matrix(const Tensor& x, const Tensor& y);

/// -sum_i log softmax(M[i, :] / tau)[i] for the configured direction and
/// reduction, with tau applied inside the exponential of both numerator and
/// denominator. Throws ParameterError for tau <= 0.
double info_nce(const Tensor& x, const Tensor& y, double tau,
                const LossConfig& config);

/// Tape form; `log_tau` is a 1x1 node holding ln(tau).
NodeId info_nce(Tape& tape, NodeId x, NodeId y, NodeId log_tau,
                const LossConfig& config);

/// One image with one caption.
struct Example {
  Tensor image;  // rank 1, d_image
  model::TokenSequence text;
};

/// One image with every caption available for it.
struct MultiCaptionExample {
  Tensor image;
  std::vector<model::TokenSequence> captions;
};

/// Stacks image rows and applies the configured jitter when a stream is given.
Tensor stack_images(std::span<const Example> batch, const LossConfig& config,
                    numcore::Rng* jitter_rng);

/// Draws one caption per record uniformly. Throws DataError for a record
/// without captions.
std::vector<Example> sample_examples(std::span<const MultiCaptionExample> batch,
                                     numcore::Rng& rng);

double clip_loss(std::span<const Example> batch,
                 const model::DualEncoderParams& params,
                 const lora::AdapterSet* adapters, const LossConfig& config,
                 numcore::Rng* jitter_rng = nullptr);

double text_aug_loss(std::span<const MultiCaptionExample> batch,
                     const model::DualEncoderParams& params,
                     const lora::AdapterSet* adapters, numcore::Rng& rng,
                     const LossConfig& config);

struct LossEvaluation {
  double loss = 0.0;
  numcore::Gradients grads;
};

/// Records the full forward pass on one tape and differentiates the loss with
/// respect to every parameter trainable under `mode`.
LossEvaluation clip_loss_with_gradients(std::span<const Example> batch,
                                        const model::DualEncoderParams& params,
                                        const lora::AdapterSet* adapters,
                                        const LossConfig& config,
                                        model::TrainMode mode,
                                        numcore::Rng* jitter_rng = nullptr,
                                        const model::ForwardOptions& options = {});

}  // namespace captune::loss
