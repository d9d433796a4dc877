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
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "captune/numcore/tensor.hpp"

namespace captune::numcore {

struct NodeId {
  std::uint32_t index = UINT32_MAX;
  bool valid() const noexcept { return index != UINT32_MAX; }
  friend bool operator==(NodeId, NodeId) = default;
};

/// The closed set of primitives the model is built from.
enum class Op : std::uint8_t {
  kLeaf,
  kMatMul,
  kLinear,  // x * W^T, with W stored out x in
  kTranspose,
  kAdd,
  kScale,
  kMulScalar,  // tensor times a 1x1 node
  kHadamard,
  kExp,
  kLog,
  kRowSoftmax,
  kLogSoftmaxRows,
  kLayerNorm,
  kGelu,
  kSegmentMean,
  kL2NormalizeRows,
  kGatherRows,
  kConcatRows,
  kSliceRows,
  kDiagSum,
  kSum,
};

std::string_view op_name(Op op) noexcept;

/// Gradients produced by a backward pass. Only registered parameters and
/// explicit input leaves receive entries; everything else is discarded.
struct Gradients {
  std::map<std::string, Tensor> params;
  std::map<std::uint32_t, Tensor> inputs;

  bool has_param(std::string_view name) const {
    return params.find(std::string(name)) != params.end();
  }
  const Tensor& param(std::string_view name) const;
  const Tensor& input(NodeId id) const;

  /// Adds every entry of `other` into this set (summing shared names).
  void accumulate(const Gradients& other);
};

/// Single-writer record of primitive operations in topological order.
///
/// Leaves come in three kinds: constants (never differentiated), parameters
/// (named, deduplicated by name, gradients reported by name) and inputs
/// (unnamed leaves whose gradients are reported by node id; used to stitch
/// checkpointed segments together). Parameter and `constant_ref` leaves borrow
/// the caller's tensor, which must outlive the tape.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  NodeId constant(Tensor value);
  NodeId constant_ref(const Tensor& value);
  NodeId parameter(std::string_view name, const Tensor& value);
  NodeId input(Tensor value);

  NodeId matmul(NodeId a, NodeId b);
  NodeId linear(NodeId x, NodeId weight);
  NodeId transpose(NodeId a);
  NodeId add(NodeId a, NodeId b);
  NodeId scale(NodeId a, double s);
  NodeId mul_scalar(NodeId a, NodeId s);
  NodeId hadamard(NodeId a, NodeId b);
  NodeId exp(NodeId a);
  NodeId log(NodeId a);
  NodeId row_softmax(NodeId a);
  NodeId log_softmax_rows(NodeId a);
  NodeId layer_norm(NodeId a);
  NodeId gelu(NodeId a);
  /// Mean of consecutive row blocks; `lengths` must sum to the row count.
  NodeId segment_mean(NodeId a, std::vector<std::size_t> lengths);
  NodeId l2_normalize_rows(NodeId a);
  NodeId gather_rows(NodeId table, std::vector<std::size_t> ids);
  NodeId concat_rows(std::span<const NodeId> parts);
  NodeId slice_rows(NodeId a, std::size_t begin, std::size_t count);
  NodeId diag_sum(NodeId a);
  NodeId sum(NodeId a);

  const Tensor& value(NodeId id) const;
  bool requires_grad(NodeId id) const;
  std::size_t size() const noexcept { return nodes_.size(); }
  Op op(NodeId id) const;
  std::span<const std::uint32_t> inputs_of(NodeId id) const;

  /// Reverse pass from a 1x1 loss node. Throws ContractError otherwise.
  Gradients backward(NodeId loss) const;
  /// Reverse pass seeded with an arbitrary output gradient.
  Gradients backward_from(NodeId output, const Tensor& seed) const;

  /// Re-evaluates every non-leaf node from its recorded inputs and returns
  /// the largest absolute deviation from the stored value (0 when the tape
  /// replays exactly).
  double replay_deviation() const;

 private:
  enum class LeafKind : std::uint8_t { kNone, kConstant, kParameter, kInput };

  struct Node {
    Op op = Op::kLeaf;
    LeafKind leaf = LeafKind::kNone;
    bool requires_grad = false;
    std::vector<std::uint32_t> in;
    std::vector<std::size_t> indices;  // gather ids, segment lengths, slice
    double attr = 0.0;
    Tensor owned;
    const Tensor* borrowed = nullptr;
    std::string name;
  };

  NodeId push(Node node);
  NodeId record(Op op, std::vector<std::uint32_t> in,
                std::vector<std::size_t> indices = {}, double attr = 0.0);
  const Node& node(NodeId id) const;
  const Tensor& value_of(std::uint32_t index) const;
  Tensor evaluate(const Node& n) const;
  void propagate(const Node& n, const Tensor& grad_out,
                 std::vector<Tensor>& grads) const;
  Gradients run_backward(NodeId output, const Tensor& seed) const;

  std::vector<Node> nodes_;
  std::unordered_map<std::string, std::uint32_t> parameter_index_;
};

}  // namespace captune::numcore
