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

#include "captune/checkpoint/grad_checkpoint.hpp"

#include <algorithm>
#include <string>

#include "captune/error.hpp"

namespace captune::checkpoint {

namespace {

std::size_t ceil_sqrt(std::size_t n) {
  std::size_t s = 0;
  while (s * s < n) ++s;
  return s;
}

void check_layers(std::span<const Layer> layers, const CheckpointPlan& p) {
  if (layers.size() != p.n_layers) {
    throw ConfigError("checkpoint plan covers " + std::to_string(p.n_layers) +
                      " layers but " + std::to_string(layers.size()) +
                      " were given");
  }
}

Tensor run_layer(const Layer& layer, const Tensor& x) {
  Tape tape;
  return tape.value(layer(tape, tape.constant_ref(x)));
}

// Vector-Jacobian product of one layer at `x`.
LayerGradients layer_vjp(const Layer& layer, const Tensor& x, const Tensor& seed) {
  Tape tape;
  NodeId in = tape.input(x);
  NodeId out = layer(tape, in);
  Gradients g = tape.backward_from(out, seed);
  LayerGradients r;
  r.input = g.input(in);
  g.inputs.clear();
  r.params = std::move(g);
  return r;
}

}  // namespace

void ActivationLedger::store(std::size_t n) {
  stored += n;
  peak = std::max(peak, stored);
}

void ActivationLedger::release(std::size_t n) {
  if (n > stored) throw InternalError("activation ledger released more than stored");
  stored -= n;
}

CheckpointPlan plan(std::size_t n_layers, std::optional<long long> segment_size) {
  if (n_layers == 0) throw ParameterError("checkpoint plan needs at least one layer");
  if (segment_size && *segment_size <= 0) {
    throw ParameterError("segment size must be positive, got " +
                         std::to_string(*segment_size));
  }
  CheckpointPlan p;
  p.n_layers = n_layers;
  p.segment_size = segment_size ? static_cast<std::size_t>(*segment_size)
                                : ceil_sqrt(n_layers);
  for (std::size_t b = 0; b < n_layers; b += p.segment_size) p.boundaries.push_back(b);
  return p;
}

CheckpointState forward_checkpointed(const Tensor& input,
                                     std::span<const Layer> layers,
                                     const CheckpointPlan& plan,
                                     ActivationLedger& ledger) {
  check_layers(layers, plan);
  CheckpointState state;
  state.boundary_inputs.reserve(plan.segment_count());
  Tensor x = input;
  std::size_t next_boundary = 0;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (next_boundary < plan.segment_count() && plan.boundaries[next_boundary] == l) {
      state.boundary_inputs.push_back(x);
      ledger.store();
      ++next_boundary;
    }
    x = run_layer(layers[l], x);
  }
  state.output = std::move(x);
  return state;
}

LayerGradients backward_checkpointed(const CheckpointState& state,
                                     std::span<const Layer> layers,
                                     const CheckpointPlan& plan,
                                     const Tensor& output_grad,
                                     ActivationLedger& ledger) {
  check_layers(layers, plan);
  if (state.boundary_inputs.size() != plan.segment_count()) {
    throw InternalError("checkpoint state holds " +
                        std::to_string(state.boundary_inputs.size()) +
                        " boundary activations, plan has " +
                        std::to_string(plan.segment_count()) + " segments");
  }
  LayerGradients total;
  Tensor seed = output_grad;
  for (std::size_t k = plan.segment_count(); k-- > 0;) {
    const std::size_t begin = plan.segment_begin(k);
    const std::size_t end = plan.segment_end(k);

    // Inputs of layers begin+1 .. end-1 are recomputed from the boundary.
    std::vector<Tensor> inputs;
    inputs.reserve(end - begin);
    inputs.push_back(state.boundary_inputs[k]);
    for (std::size_t l = begin; l + 1 < end; ++l) {
      inputs.push_back(run_layer(layers[l], inputs.back()));
      ledger.store();
      ++ledger.recomputes;
    }
    for (std::size_t l = end; l-- > begin;) {
      LayerGradients g = layer_vjp(layers[l], inputs[l - begin], seed);
      total.params.accumulate(g.params);
      seed = std::move(g.input);
    }
    ledger.release(end - begin);  // recomputed inputs plus the boundary
  }
  total.input = std::move(seed);
  return total;
}

PlainResult forward_backward_plain(const Tensor& input,
                                   std::span<const Layer> layers,
                                   const Tensor& output_grad,
                                   ActivationLedger& ledger) {
  Tape tape;
  NodeId in = tape.input(input);
  NodeId x = in;
  for (const Layer& layer : layers) {
    ledger.store();
    x = layer(tape, x);
  }
  PlainResult r;
  r.output = tape.value(x);
  Gradients g = tape.backward_from(x, output_grad);
  r.grads.input = g.input(in);
  g.inputs.clear();
  r.grads.params = std::move(g);
  ledger.release(layers.size());
  return r;
}

}  // namespace captune::checkpoint
