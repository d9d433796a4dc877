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

#include "captune/lora/lora.hpp"

#include <algorithm>

#include "captune/error.hpp"
#include "captune/numcore/rng.hpp"

namespace captune::lora {

namespace {

using numcore::shape_string;

constexpr double kDownInitStd = 0.02;

const Tensor& base_weight(const model::DualEncoderParams& params,
                          const Target& t) {
  if (t.layer >= params.blocks.size()) {
    throw ConfigError("LoRA target " + t.name() + " refers to layer " +
                      std::to_string(t.layer) + " but the encoder has " +
                      std::to_string(params.blocks.size()));
  }
  const auto& b = params.blocks[t.layer];
  return t.projection == Projection::kQuery ? b.query : b.value;
}

void check_apply_shapes(const Adapter& a, const Tensor& w0) {
  if (w0.rank() != 2 || w0.rows() != a.d_out() || w0.cols() != a.d_in()) {
    throw ShapeError("LoRA adapter " + shape_string(a.up.shape()) + " x " +
                     shape_string(a.down.shape()) +
                     " does not fit base weight " + shape_string(w0.shape()));
  }
  if (a.down.rows() != a.rank || a.up.cols() != a.rank) {
    throw ShapeError("LoRA factors disagree with rank " + std::to_string(a.rank));
  }
}

}  // namespace

std::string Target::name() const {
  return "lora." + std::to_string(layer) +
         (projection == Projection::kQuery ? ".q" : ".v");
}

std::string Target::base_name() const {
  return model::block_param_name(
      layer, projection == Projection::kQuery ? "query" : "value");
}

Adapter init_adapter(std::size_t d1, std::size_t d2, std::size_t rank,
                     double alpha, std::uint64_t seed, Target target) {
  if (rank == 0 || rank >= std::min(d1, d2)) {
    throw RankError("LoRA rank " + std::to_string(rank) +
                    " must satisfy 0 < r < min(d1, d2) = " +
                    std::to_string(std::min(d1, d2)));
  }
  if (!(alpha > 0.0)) throw ParameterError("LoRA alpha must be positive");
  numcore::Rng rng(seed);
  Adapter a;
  a.down = Tensor::zeros(rank, d2);
  for (double& v : a.down.data()) v = rng.normal(0.0, kDownInitStd);
  a.up = Tensor::zeros(d1, rank);
  a.rank = rank;
  a.alpha = alpha;
  a.target = target;
  return a;
}

Tensor apply(const Adapter& adapter, const Tensor& w0, const Tensor& x) {
  check_apply_shapes(adapter, w0);
  if (x.rank() != 1 || x.size() != adapter.d_in()) {
    throw ShapeError("LoRA apply: input " + shape_string(x.shape()) +
                     " does not match d2 = " + std::to_string(adapter.d_in()));
  }
  const Tensor col = x.reshaped({x.size(), 1});
  Tensor base = numcore::matmul(w0, col);
  const Tensor low = numcore::matmul(adapter.up, numcore::matmul(adapter.down, col));
  const double s = adapter.scaling();
  for (std::size_t i = 0; i < base.size(); ++i) base[i] += s * low[i];
  return base.reshaped({base.size()});
}

Tensor merge(const Adapter& adapter, const Tensor& w0) {
  check_apply_shapes(adapter, w0);
  Tensor merged = w0;
  const Tensor delta = numcore::matmul(adapter.up, adapter.down);
  const double s = adapter.scaling();
  for (std::size_t i = 0; i < merged.size(); ++i) merged[i] += s * delta[i];
  return merged;
}

void AdapterSet::add(Adapter adapter) {
  const Target t = adapter.target;
  if (adapters_.contains(t)) {
    throw ConfigError("duplicate LoRA adapter for " + t.name());
  }
  adapters_.emplace(t, std::move(adapter));
}

const Adapter* AdapterSet::find(const Target& t) const {
  auto it = adapters_.find(t);
  return it == adapters_.end() ? nullptr : &it->second;
}

Adapter* AdapterSet::find(const Target& t) {
  auto it = adapters_.find(t);
  return it == adapters_.end() ? nullptr : &it->second;
}

void AdapterSet::validate_against(const model::DualEncoderParams& params) const {
  for (const auto& [t, a] : adapters_) {
    const Tensor& w0 = base_weight(params, t);
    if (w0.rows() != a.d_out() || w0.cols() != a.d_in() ||
        a.down.rows() != a.rank || a.up.cols() != a.rank) {
      throw ConfigError("LoRA adapter " + t.name() + " (down " +
                        shape_string(a.down.shape()) + ", up " +
                        shape_string(a.up.shape()) +
                        ") does not fit base weight " +
                        shape_string(w0.shape()));
    }
  }
  for (const auto& name : saved_) {
    if (params.find(name) == nullptr) {
      throw ConfigError("LoRA saved module '" + name + "' does not exist");
    }
  }
}

AdapterSet make_adapter_set(const model::DualEncoderParams& params,
                            const LoraConfig& config, std::uint64_t seed) {
  AdapterSet set;
  for (std::size_t layer = 0; layer < params.blocks.size(); ++layer) {
    for (Projection p : config.targets) {
      const Target t{layer, p};
      const Tensor& w0 = base_weight(params, t);
      Adapter a = init_adapter(w0.rows(), w0.cols(), config.rank, config.alpha,
                               numcore::mix_seed(seed, t.name()), t);
      a.dropout = config.dropout;
      set.add(std::move(a));
    }
  }
  return set;
}

std::size_t adapter_parameter_count(const AdapterSet& set) {
  std::size_t n = 0;
  for (const auto& [t, a] : set.adapters()) {
    n += a.rank * (a.d_out() + a.d_in());
  }
  return n;
}

std::size_t trainable_count(const AdapterSet& set,
                            const model::DualEncoderParams& params) {
  std::size_t n = adapter_parameter_count(set);
  for (const auto& name : set.saved_modules()) {
    const Tensor* t = params.find(name);
    if (t == nullptr) {
      throw ConfigError("LoRA saved module '" + name + "' does not exist");
    }
    if (name != model::kLogTemperature) n += t->size();
  }
  return n + params.log_temperature.size();
}

model::DualEncoderParams merge_into(const model::DualEncoderParams& params,
                                    const AdapterSet& set) {
  set.validate_against(params);
  model::DualEncoderParams merged = params;
  for (const auto& [t, a] : set.adapters()) {
    auto& b = merged.blocks[t.layer];
    Tensor& w = t.projection == Projection::kQuery ? b.query : b.value;
    w = merge(a, w);
  }
  return merged;
}

}  // namespace captune::lora
