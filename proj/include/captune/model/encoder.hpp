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

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "captune/lora/lora.hpp"
#include "captune/model/params.hpp"
#include "captune/model/tokenizer.hpp"
#include "captune/numcore/rng.hpp"
#include "captune/numcore/tape.hpp"

namespace captune::model {

using numcore::NodeId;
using numcore::Tape;

struct ImageFeature {
  std::string id;
  Tensor values;  // rank 1, d_image
};

/// Registers model tensors on a tape as differentiable parameters or as
/// constants according to a trainability predicate.
class Binder {
 public:
  using Predicate = std::function<bool(std::string_view)>;

  Binder(Tape& tape, Predicate trainable)
      : tape_(&tape), trainable_(std::move(trainable)) {}

  /// Binder under which nothing is trainable.
  static Binder frozen(Tape& tape) {
    return Binder(tape, [](std::string_view) { return false; });
  }

  NodeId operator()(std::string_view name, const Tensor& value);
  Tape& tape() const noexcept { return *tape_; }

 private:
  Tape* tape_;
  Predicate trainable_;
};

/// Names trainable under `mode`: full = everything; lit = everything but the
/// image projection; lit_lora = adapter factors, saved modules and
/// log_temperature.
bool is_trainable(std::string_view name, TrainMode mode,
                  const lora::AdapterSet* adapters);
/// Throws ConfigError when the mode and adapter presence disagree.
void check_mode(TrainMode mode, const lora::AdapterSet* adapters);

/// Active tokens of a batch of sequences, flattened into one row stack.
struct PackedText {
  std::vector<std::size_t> ids;
  std::vector<std::size_t> positions;
  std::vector<std::size_t> lengths;
};

PackedText pack_sequences(std::span<const TokenSequence> seqs,
                          const EncoderConfig& config);

struct ForwardOptions {
  /// LoRA dropout stream; dropout is disabled when null.
  numcore::Rng* dropout_rng = nullptr;
};

/// Token + position embedding of the packed batch: (sum of lengths) x d_model.
NodeId embed_text(Binder& bind, const DualEncoderParams& params,
                  const PackedText& text);
/// One pre-norm transformer block (single-head self-attention within each
/// sequence, GELU MLP), with LoRA on query/value when adapters are present.
NodeId text_block(Binder& bind, const DualEncoderParams& params,
                  const lora::AdapterSet* adapters, std::size_t layer,
                  NodeId x, std::span<const std::size_t> lengths,
                  const ForwardOptions& options = {});
/// Mean-pool per sequence, project, L2-normalize: batch x d_embed.
NodeId text_head(Binder& bind, const DualEncoderParams& params, NodeId x,
                 std::span<const std::size_t> lengths);
NodeId encode_text_batch(Binder& bind, const DualEncoderParams& params,
                         const lora::AdapterSet* adapters,
                         const PackedText& text,
                         const ForwardOptions& options = {});
/// Rows of `images` (batch x d_image) through the image projection, then
/// L2-normalized.
NodeId encode_image_batch(Binder& bind, const DualEncoderParams& params,
                          NodeId images);

/// Unit-norm text embedding (rank 1, d_embed).
Tensor encode_text(const TokenSequence& seq, const DualEncoderParams& params,
                   const lora::AdapterSet* adapters = nullptr);
/// Unit-norm image embedding (rank 1, d_embed).
Tensor encode_image(const ImageFeature& image, const DualEncoderParams& params);

/// Batched inference helpers; rows are unit vectors in input order.
Tensor encode_texts(std::span<const TokenSequence> seqs,
                    const DualEncoderParams& params,
                    const lora::AdapterSet* adapters = nullptr);
Tensor encode_images(const Tensor& images, const DualEncoderParams& params);

struct ParameterCount {
  std::size_t total = 0;
  std::size_t trainable = 0;
  double fraction = 0.0;
};

ParameterCount count_parameters(const DualEncoderParams& params,
                                const lora::AdapterSet* adapters,
                                TrainMode mode);

}  // namespace captune::model
