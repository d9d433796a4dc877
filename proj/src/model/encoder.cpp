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

#include "captune/model/encoder.hpp"

#include <cmath>

#include "captune/error.hpp"

namespace captune::model {

namespace {

using numcore::shape_string;

// Inference batches are encoded in chunks to bound tape size.
constexpr std::size_t kInferenceChunk = 256;

NodeId lora_delta(Binder& bind, const lora::Adapter& a, NodeId xn,
                  const ForwardOptions& options) {
  Tape& tape = bind.tape();
  NodeId input = xn;
  if (a.dropout > 0.0 && options.dropout_rng != nullptr) {
    const Tensor& xv = tape.value(xn);
    Tensor mask(xv.shape());
    const double keep = 1.0 - a.dropout;
    for (double& m : mask.data()) {
      m = options.dropout_rng->uniform() < keep ? 1.0 / keep : 0.0;
    }
    input = tape.hadamard(xn, tape.constant(std::move(mask)));
  }
  const std::string base = a.target.name();
  NodeId down = bind(base + ".down", a.down);
  NodeId up = bind(base + ".up", a.up);
  return tape.scale(tape.linear(tape.linear(input, down), up), a.scaling());
}

NodeId projected(Binder& bind, const lora::AdapterSet* adapters, std::size_t layer,
                 std::string_view which, const Tensor& weight, NodeId xn,
                 const ForwardOptions& options) {
  Tape& tape = bind.tape();
  NodeId out = tape.linear(xn, bind(block_param_name(layer, which), weight));
  if (adapters == nullptr) return out;
  lora::Projection p;
  if (which == "query") {
    p = lora::Projection::kQuery;
  } else if (which == "value") {
    p = lora::Projection::kValue;
  } else {
    return out;
  }
  const lora::Adapter* a = adapters->find({layer, p});
  if (a == nullptr) return out;
  if (a->d_out() != weight.rows() || a->d_in() != weight.cols()) {
    throw ConfigError("LoRA adapter " + a->target.name() +
                      " does not fit " + shape_string(weight.shape()));
  }
  return tape.add(out, lora_delta(bind, *a, xn, options));
}

}  // namespace

NodeId Binder::operator()(std::string_view name, const Tensor& value) {
  if (trainable_(name)) return tape_->parameter(name, value);
  return tape_->constant_ref(value);
}

bool is_trainable(std::string_view name, TrainMode mode,
                  const lora::AdapterSet* adapters) {
  switch (mode) {
    case TrainMode::kFull:
      return true;
    case TrainMode::kLit:
      return name != kImageProjection;
    case TrainMode::kLitLora: {
      if (name.starts_with("lora.")) return true;
      if (name == kLogTemperature) return true;
      if (adapters != nullptr) {
        for (const auto& s : adapters->saved_modules()) {
          if (name == s) return true;
        }
      }
      return false;
    }
  }
  return false;
}

void check_mode(TrainMode mode, const lora::AdapterSet* adapters) {
  const bool has_adapters = adapters != nullptr && !adapters->empty();
  if (mode == TrainMode::kLitLora && !has_adapters) {
    throw ConfigError("lit_lora mode requires LoRA adapters");
  }
  if (mode != TrainMode::kLitLora && has_adapters) {
    throw ConfigError(std::string(train_mode_name(mode)) +
                      " mode does not train LoRA adapters; use lit_lora");
  }
}

PackedText pack_sequences(std::span<const TokenSequence> seqs,
                          const EncoderConfig& config) {
  PackedText packed;
  packed.lengths.reserve(seqs.size());
  for (const auto& s : seqs) {
    s.validate(config.vocab_size, config.max_tokens);
    std::size_t len = 0;
    for (std::size_t i = 0; i < s.ids.size(); ++i) {
      if (s.mask[i] == 0) continue;
      packed.ids.push_back(s.ids[i]);
      packed.positions.push_back(len);
      ++len;
    }
    packed.lengths.push_back(len);
  }
  return packed;
}

NodeId embed_text(Binder& bind, const DualEncoderParams& params,
                  const PackedText& text) {
  Tape& tape = bind.tape();
  NodeId tok = tape.gather_rows(bind("token_embedding", params.token_embedding),
                                text.ids);
  NodeId pos = tape.gather_rows(
      bind("position_embedding", params.position_embedding), text.positions);
  return tape.add(tok, pos);
}

NodeId text_block(Binder& bind, const DualEncoderParams& params,
                  const lora::AdapterSet* adapters, std::size_t layer,
                  NodeId x, std::span<const std::size_t> lengths,
                  const ForwardOptions& options) {
  Tape& tape = bind.tape();
  const TransformerBlock& b = params.blocks.at(layer);
  const double attn_scale =
      1.0 / std::sqrt(static_cast<double>(params.config.d_model));

  NodeId xn = tape.layer_norm(x);
  NodeId q = projected(bind, adapters, layer, "query", b.query, xn, options);
  NodeId k = projected(bind, adapters, layer, "key", b.key, xn, options);
  NodeId v = projected(bind, adapters, layer, "value", b.value, xn, options);

  NodeId attended;
  if (lengths.size() == 1) {
    NodeId probs = tape.row_softmax(tape.scale(tape.linear(q, k), attn_scale));
    attended = tape.matmul(probs, v);
  } else {
    std::vector<NodeId> parts;
    parts.reserve(lengths.size());
    std::size_t begin = 0;
    for (std::size_t len : lengths) {
      NodeId qs = tape.slice_rows(q, begin, len);
      NodeId ks = tape.slice_rows(k, begin, len);
      NodeId vs = tape.slice_rows(v, begin, len);
      NodeId probs = tape.row_softmax(tape.scale(tape.linear(qs, ks), attn_scale));
      parts.push_back(tape.matmul(probs, vs));
      begin += len;
    }
    attended = tape.concat_rows(parts);
  }
  NodeId x1 = tape.add(
      x, tape.linear(attended, bind(block_param_name(layer, "output"), b.output)));

  NodeId h = tape.gelu(tape.linear(tape.layer_norm(x1),
                                   bind(block_param_name(layer, "mlp_in"), b.mlp_in)));
  return tape.add(x1, tape.linear(h, bind(block_param_name(layer, "mlp_out"), b.mlp_out)));
}

NodeId text_head(Binder& bind, const DualEncoderParams& params, NodeId x,
                 std::span<const std::size_t> lengths) {
  Tape& tape = bind.tape();
  NodeId pooled =
      tape.segment_mean(x, std::vector<std::size_t>(lengths.begin(), lengths.end()));
  NodeId proj = tape.matmul(pooled, bind(kTextProjection, params.text_projection));
  return tape.l2_normalize_rows(proj);
}

NodeId encode_text_batch(Binder& bind, const DualEncoderParams& params,
                         const lora::AdapterSet* adapters,
                         const PackedText& text, const ForwardOptions& options) {
  NodeId x = embed_text(bind, params, text);
  for (std::size_t layer = 0; layer < params.blocks.size(); ++layer) {
    x = text_block(bind, params, adapters, layer, x, text.lengths, options);
  }
  return text_head(bind, params, x, text.lengths);
}

NodeId encode_image_batch(Binder& bind, const DualEncoderParams& params,
                          NodeId images) {
  Tape& tape = bind.tape();
  const Tensor& iv = tape.value(images);
  if (iv.cols() != params.config.d_image) {
    throw ShapeError("image features have dimension " +
                     std::to_string(iv.cols()) + " but the image projection expects " +
                     std::to_string(params.config.d_image));
  }
  NodeId proj = tape.matmul(images, bind(kImageProjection, params.image_projection));
  return tape.l2_normalize_rows(proj);
}

Tensor encode_text(const TokenSequence& seq, const DualEncoderParams& params,
                   const lora::AdapterSet* adapters) {
  Tensor rows = encode_texts(std::span<const TokenSequence>(&seq, 1), params, adapters);
  return rows.reshaped({rows.cols()});
}

Tensor encode_image(const ImageFeature& image, const DualEncoderParams& params) {
  if (image.values.rank() != 1) {
    throw ShapeError("image feature must be a vector, got " +
                     shape_string(image.values.shape()));
  }
  Tensor rows = encode_images(image.values.reshaped({1, image.values.size()}), params);
  return rows.reshaped({rows.cols()});
}

Tensor encode_texts(std::span<const TokenSequence> seqs,
                    const DualEncoderParams& params,
                    const lora::AdapterSet* adapters) {
  if (adapters != nullptr) adapters->validate_against(params);
  Tensor out = Tensor::zeros(seqs.size(), params.config.d_embed);
  for (std::size_t begin = 0; begin < seqs.size(); begin += kInferenceChunk) {
    const std::size_t count = std::min(kInferenceChunk, seqs.size() - begin);
    const PackedText packed = pack_sequences(seqs.subspan(begin, count), params.config);
    Tape tape;
    Binder bind = Binder::frozen(tape);
    const Tensor& emb = tape.value(encode_text_batch(bind, params, adapters, packed));
    std::copy(emb.data().begin(), emb.data().end(),
              out.data().begin() + begin * out.cols());
  }
  return out;
}

Tensor encode_images(const Tensor& images, const DualEncoderParams& params) {
  if (images.rank() != 2) {
    throw ShapeError("encode_images expects a batch x d_image matrix, got " +
                     shape_string(images.shape()));
  }
  Tape tape;
  Binder bind = Binder::frozen(tape);
  return tape.value(encode_image_batch(bind, params, tape.constant_ref(images)));
}

ParameterCount count_parameters(const DualEncoderParams& params,
                                const lora::AdapterSet* adapters,
                                TrainMode mode) {
  check_mode(mode, adapters);
  ParameterCount c;
  auto visit = [&](const std::string& name, const Tensor& t) {
    c.total += t.size();
    if (is_trainable(name, mode, adapters)) c.trainable += t.size();
  };
  params.for_each(visit);
  if (adapters != nullptr) adapters->for_each(visit);
  c.fraction = c.total == 0 ? 0.0
                            : static_cast<double>(c.trainable) /
                                  static_cast<double>(c.total);
  return c;
}

}  // namespace captune::model
