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

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "captune/numcore/tape.hpp"

namespace captune::checkpoint {

using numcore::Gradients;
using numcore::NodeId;
using numcore::Tape;
using numcore::Tensor;

/// A layer records its forward computation on `tape`, starting from `input`.
/// It must be deterministic: recomputation replays it on a fresh tape and
/// relies on getting bitwise identical values.
using Layer = std::function<NodeId(Tape& tape, NodeId input)>;

struct CheckpointPlan {
  std::size_t n_layers = 0;
  std::size_t segment_size = 0;
  /// First layer index of every segment, ascending, starting at 0.
  std::vector<std::size_t> boundaries;

  std::size_t segment_count() const noexcept { return boundaries.size(); }
  std::size_t segment_begin(std::size_t k) const { return boundaries.at(k); }
  std::size_t segment_end(std::size_t k) const {
    return k + 1 < boundaries.size() ? boundaries[k + 1] : n_layers;
  }
};

/// Activation accounting at layer granularity: one unit per stored layer
/// input tensor.
struct ActivationLedger {
  std::size_t stored = 0;
  std::size_t peak = 0;
  std::size_t recomputes = 0;

  void store(std::size_t n = 1);
  void release(std::size_t n = 1);
  void reset() { *this = ActivationLedger{}; }
};

/// Segments [0, n) into runs of `segment_size` layers (default ceil(sqrt(n))).
/// Throws ParameterError for n == 0 or a non-positive segment size.
CheckpointPlan plan(std::size_t n_layers, std::optional<long long> segment_size = {});

/// Layer inputs kept by a checkpointed forward pass.
struct CheckpointState {
  std::vector<Tensor> boundary_inputs;  // one per segment
  Tensor output;
};

/// Runs every layer, keeping only each segment's input.
CheckpointState forward_checkpointed(const Tensor& input,
                                     std::span<const Layer> layers,
                                     const CheckpointPlan& plan,
                                     ActivationLedger& ledger);

struct LayerGradients {
  Gradients params;
  Tensor input;  // d(output . seed) / d(input)
};

/// Walks segments in reverse, recomputes their inner layer inputs from the
/// stored boundary, and back-propagates one layer at a time.
LayerGradients backward_checkpointed(const CheckpointState& state,
                                     std::span<const Layer> layers,
                                     const CheckpointPlan& plan,
                                     const Tensor& output_grad,
                                     ActivationLedger& ledger);

/// Non-checkpointed reference: records all layers on one tape, storing every
/// layer input.
struct PlainResult {
  Tensor output;
  LayerGradients grads;
};
PlainResult forward_backward_plain(const Tensor& input,
                                   std::span<const Layer> layers,
                                   const Tensor& output_grad,
                                   ActivationLedger& ledger);

}  // namespace captune::checkpoint
