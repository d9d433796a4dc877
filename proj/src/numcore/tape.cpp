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

#include "captune/numcore/tape.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "captune/error.hpp"

namespace captune::numcore {

namespace {

void accumulate_into(Tensor& slot, const Tensor& g) {
  if (slot.empty()) {
    slot = g;
    return;
  }
  auto s = slot.data();
  auto d = g.data();
  for (std::size_t i = 0; i < s.size(); ++i) s[i] += d[i];
}

Tensor as_matrix(const Tensor& t) {
  if (t.rank() == 2) return t;
  return t.reshaped({t.rows(), t.cols()});
}

}  // namespace

std::string_view op_name(Op op) noexcept {
  switch (op) {
    case Op::kLeaf: return "leaf";
    case Op::kMatMul: return "matmul";
    case Op::kLinear: return "linear";
    case Op::kTranspose: return "transpose";
    case Op::kAdd: return "add";
    case Op::kScale: return "scale";
    case Op::kMulScalar: return "mul_scalar";
    case Op::kHadamard: return "hadamard";
    case Op::kExp: return "exp";
    case Op::kLog: return "log";
    case Op::kRowSoftmax: return "row_softmax";
    case Op::kLogSoftmaxRows: return "log_softmax_rows";
    case Op::kLayerNorm: return "layer_norm";
    case Op::kGelu: return "gelu";
    case Op::kSegmentMean: return "segment_mean";
    case Op::kL2NormalizeRows: return "l2_normalize_rows";
    case Op::kGatherRows: return "gather_rows";
    case Op::kConcatRows: return "concat_rows";
    case Op::kSliceRows: return "slice_rows";
    case Op::kDiagSum: return "diag_sum";
    case Op::kSum: return "sum";
  }
  return "unknown";
}

const Tensor& Gradients::param(std::string_view name) const {
  auto it = params.find(std::string(name));
  if (it == params.end()) {
    throw ContractError("no gradient recorded for parameter '" +
                        std::string(name) + "'");
  }
  return it->second;
}

const Tensor& Gradients::input(NodeId id) const {
  auto it = inputs.find(id.index);
  if (it == inputs.end()) {
    throw ContractError("no gradient recorded for input node " +
                        std::to_string(id.index));
  }
  return it->second;
}

void Gradients::accumulate(const Gradients& other) {
  for (const auto& [name, g] : other.params) accumulate_into(params[name], g);
  for (const auto& [idx, g] : other.inputs) accumulate_into(inputs[idx], g);
}

// ---------------------------------------------------------------------------
// Recording

NodeId Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return NodeId{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

NodeId Tape::constant(Tensor value) {
  Node n;
  n.leaf = LeafKind::kConstant;
  n.owned = as_matrix(value);
  return push(std::move(n));
}

NodeId Tape::constant_ref(const Tensor& value) {
  if (value.rank() != 2) return constant(value);
  Node n;
  n.leaf = LeafKind::kConstant;
  n.borrowed = &value;
  return push(std::move(n));
}

NodeId Tape::parameter(std::string_view name, const Tensor& value) {
  const std::string key(name);
  if (auto it = parameter_index_.find(key); it != parameter_index_.end()) {
    const Node& existing = nodes_[it->second];
    if (existing.borrowed != nullptr && existing.borrowed != &value) {
      throw ContractError("parameter '" + key +
                          "' registered twice with different tensors");
    }
    return NodeId{it->second};
  }
  Node n;
  n.leaf = LeafKind::kParameter;
  n.requires_grad = true;
  n.name = key;
  if (value.rank() == 2) {
    n.borrowed = &value;
  } else {
    n.owned = as_matrix(value);
  }
  NodeId id = push(std::move(n));
  parameter_index_.emplace(key, id.index);
  return id;
}

NodeId Tape::input(Tensor value) {
  Node n;
  n.leaf = LeafKind::kInput;
  n.requires_grad = true;
  n.owned = as_matrix(value);
  return push(std::move(n));
}

NodeId Tape::record(Op op, std::vector<std::uint32_t> in,
                    std::vector<std::size_t> indices, double attr) {
  Node n;
  n.op = op;
  n.in = std::move(in);
  n.indices = std::move(indices);
  n.attr = attr;
  for (std::uint32_t i : n.in) {
    if (i >= nodes_.size()) throw ContractError("tape: dangling node id");
    n.requires_grad = n.requires_grad || nodes_[i].requires_grad;
  }
  n.owned = evaluate(n);
  return push(std::move(n));
}

NodeId Tape::matmul(NodeId a, NodeId b) {
  return record(Op::kMatMul, {a.index, b.index});
}
NodeId Tape::linear(NodeId x, NodeId weight) {
  return record(Op::kLinear, {x.index, weight.index});
}
NodeId Tape::transpose(NodeId a) { return record(Op::kTranspose, {a.index}); }
NodeId Tape::add(NodeId a, NodeId b) {
  return record(Op::kAdd, {a.index, b.index});
}
NodeId Tape::scale(NodeId a, double s) {
  return record(Op::kScale, {a.index}, {}, s);
}
NodeId Tape::mul_scalar(NodeId a, NodeId s) {
  return record(Op::kMulScalar, {a.index, s.index});
}
NodeId Tape::hadamard(NodeId a, NodeId b) {
  return record(Op::kHadamard, {a.index, b.index});
}
NodeId Tape::exp(NodeId a) { return record(Op::kExp, {a.index}); }
NodeId Tape::log(NodeId a) { return record(Op::kLog, {a.index}); }
NodeId Tape::row_softmax(NodeId a) {
  return record(Op::kRowSoftmax, {a.index});
}
NodeId Tape::log_softmax_rows(NodeId a) {
  return record(Op::kLogSoftmaxRows, {a.index});
}
NodeId Tape::layer_norm(NodeId a) { return record(Op::kLayerNorm, {a.index}); }
NodeId Tape::gelu(NodeId a) { return record(Op::kGelu, {a.index}); }
NodeId Tape::segment_mean(NodeId a, std::vector<std::size_t> lengths) {
  return record(Op::kSegmentMean, {a.index}, std::move(lengths));
}
NodeId Tape::l2_normalize_rows(NodeId a) {
  return record(Op::kL2NormalizeRows, {a.index});
}
NodeId Tape::gather_rows(NodeId table, std::vector<std::size_t> ids) {
  return record(Op::kGatherRows, {table.index}, std::move(ids));
}
NodeId Tape::concat_rows(std::span<const NodeId> parts) {
  if (parts.empty()) throw ContractError("concat_rows: no parts");
  std::vector<std::uint32_t> in;
  in.reserve(parts.size());
  for (NodeId p : parts) in.push_back(p.index);
  return record(Op::kConcatRows, std::move(in));
}
NodeId Tape::slice_rows(NodeId a, std::size_t begin, std::size_t count) {
  return record(Op::kSliceRows, {a.index}, {begin, count});
}
NodeId Tape::diag_sum(NodeId a) { return record(Op::kDiagSum, {a.index}); }
NodeId Tape::sum(NodeId a) { return record(Op::kSum, {a.index}); }

// ---------------------------------------------------------------------------
// Accessors

const Tape::Node& Tape::node(NodeId id) const {
  if (id.index >= nodes_.size()) throw ContractError("tape: unknown node id");
  return nodes_[id.index];
}

const Tensor& Tape::value_of(std::uint32_t index) const {
  const Node& n = nodes_[index];
  return n.borrowed ? *n.borrowed : n.owned;
}

const Tensor& Tape::value(NodeId id) const {
  node(id);
  return value_of(id.index);
}

bool Tape::requires_grad(NodeId id) const { return node(id).requires_grad; }

Op Tape::op(NodeId id) const { return node(id).op; }

std::span<const std::uint32_t> Tape::inputs_of(NodeId id) const {
  return node(id).in;
}

// ---------------------------------------------------------------------------
// Forward evaluation

Tensor Tape::evaluate(const Node& n) const {
  auto in = [&](std::size_t k) -> const Tensor& { return value_of(n.in[k]); };
  switch (n.op) {
    case Op::kLeaf:
      return n.borrowed ? *n.borrowed : n.owned;
    case Op::kMatMul:
      return numcore::matmul(in(0), in(1));
    case Op::kLinear:
      return numcore::matmul_nt(in(0), in(1));
    case Op::kTranspose:
      return numcore::transpose(in(0));
    case Op::kAdd:
      return numcore::add(in(0), in(1));
    case Op::kScale:
      return numcore::scale(in(0), n.attr);
    case Op::kMulScalar: {
      const Tensor& s = in(1);
      if (s.size() != 1) {
        throw ShapeError("mul_scalar: expected a 1x1 scale, got " +
                         shape_string(s.shape()));
      }
      return numcore::scale(in(0), s[0]);
    }
    case Op::kHadamard:
      return numcore::hadamard(in(0), in(1));
    case Op::kExp: {
      Tensor out = in(0);
      for (double& v : out.data()) v = std::exp(v);
      return out;
    }
    case Op::kLog: {
      Tensor out = in(0);
      for (double& v : out.data()) {
        if (!(v > 0.0)) throw NumericError("log of a non-positive value");
        v = std::log(v);
      }
      return out;
    }
    case Op::kRowSoftmax:
      return numcore::row_softmax(in(0));
    case Op::kLogSoftmaxRows:
      return numcore::log_softmax_rows(in(0));
    case Op::kLayerNorm:
      return numcore::layer_norm_rows(in(0));
    case Op::kGelu:
      return numcore::gelu(in(0));
    case Op::kSegmentMean: {
      const Tensor& a = in(0);
      const std::size_t total =
          std::accumulate(n.indices.begin(), n.indices.end(), std::size_t{0});
      if (total != a.rows() || n.indices.empty()) {
        throw ShapeError("segment_mean: lengths sum to " +
                         std::to_string(total) + " but input has " +
                         std::to_string(a.rows()) + " rows");
      }
      Tensor out = Tensor::zeros(n.indices.size(), a.cols());
      std::size_t r = 0;
      for (std::size_t b = 0; b < n.indices.size(); ++b) {
        const std::size_t len = n.indices[b];
        if (len == 0) throw ShapeError("segment_mean: empty segment");
        auto orow = out.row(b);
        for (std::size_t k = 0; k < len; ++k, ++r) {
          auto arow = a.row(r);
          for (std::size_t j = 0; j < orow.size(); ++j) orow[j] += arow[j];
        }
        const double inv = 1.0 / static_cast<double>(len);
        for (double& v : orow) v *= inv;
      }
      return out;
    }
    case Op::kL2NormalizeRows:
      return numcore::l2_normalize_rows(in(0));
    case Op::kGatherRows: {
      const Tensor& table = in(0);
      Tensor out = Tensor::zeros(n.indices.size(), table.cols());
      for (std::size_t i = 0; i < n.indices.size(); ++i) {
        if (n.indices[i] >= table.rows()) {
          throw ShapeError("gather_rows: id " + std::to_string(n.indices[i]) +
                           " out of range for table " +
                           shape_string(table.shape()));
        }
        auto src = table.row(n.indices[i]);
        std::copy(src.begin(), src.end(), out.row(i).begin());
      }
      return out;
    }
    case Op::kConcatRows: {
      const std::size_t cols = in(0).cols();
      std::size_t rows = 0;
      for (std::size_t k = 0; k < n.in.size(); ++k) {
        if (in(k).cols() != cols) {
          throw ShapeError("concat_rows: column mismatch " +
                           shape_string(in(0).shape()) + " vs " +
                           shape_string(in(k).shape()));
        }
        rows += in(k).rows();
      }
      std::vector<double> data;
      data.reserve(rows * cols);
      for (std::size_t k = 0; k < n.in.size(); ++k) {
        auto d = in(k).data();
        data.insert(data.end(), d.begin(), d.end());
      }
      return Tensor({rows, cols}, std::move(data));
    }
    case Op::kSliceRows: {
      const Tensor& a = in(0);
      const std::size_t begin = n.indices[0], count = n.indices[1];
      if (count == 0 || begin + count > a.rows()) {
        throw ShapeError("slice_rows: rows [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") out of range for " +
                         shape_string(a.shape()));
      }
      auto d = a.data().subspan(begin * a.cols(), count * a.cols());
      return Tensor({count, a.cols()}, std::vector<double>(d.begin(), d.end()));
    }
    case Op::kDiagSum: {
      const Tensor& a = in(0);
      if (a.rows() != a.cols()) {
        throw ShapeError("diag_sum: expected a square matrix, got " +
                         shape_string(a.shape()));
      }
      double s = 0.0;
      for (std::size_t i = 0; i < a.rows(); ++i) s += a.at(i, i);
      return Tensor::scalar(s);
    }
    case Op::kSum: {
      double s = 0.0;
      for (double v : in(0).data()) s += v;
      return Tensor::scalar(s);
    }
  }
  throw InternalError("tape: unhandled op");
}

// ---------------------------------------------------------------------------
// Reverse pass

void Tape::propagate(const Node& n, const Tensor& g,
                     std::vector<Tensor>& grads) const {
  auto in = [&](std::size_t k) -> const Tensor& { return value_of(n.in[k]); };
  auto wants = [&](std::size_t k) { return nodes_[n.in[k]].requires_grad; };
  auto push = [&](std::size_t k, const Tensor& contribution) {
    accumulate_into(grads[n.in[k]], contribution);
  };
  const Tensor& out = n.owned;

  switch (n.op) {
    case Op::kLeaf:
      return;
    case Op::kMatMul:
      if (wants(0)) push(0, matmul_nt(g, in(1)));
      if (wants(1)) push(1, matmul_tn(in(0), g));
      return;
    case Op::kLinear:
      if (wants(0)) push(0, numcore::matmul(g, in(1)));
      if (wants(1)) push(1, matmul_tn(g, in(0)));
      return;
    case Op::kTranspose:
      push(0, numcore::transpose(g));
      return;
    case Op::kAdd:
      if (wants(0)) push(0, g);
      if (wants(1)) push(1, g);
      return;
    case Op::kScale:
      push(0, numcore::scale(g, n.attr));
      return;
    case Op::kMulScalar:
      if (wants(0)) push(0, numcore::scale(g, in(1)[0]));
      if (wants(1)) push(1, Tensor::scalar(dot(g.data(), in(0).data())));
      return;
    case Op::kHadamard:
      if (wants(0)) push(0, numcore::hadamard(g, in(1)));
      if (wants(1)) push(1, numcore::hadamard(g, in(0)));
      return;
    case Op::kExp:
      push(0, numcore::hadamard(g, out));
      return;
    case Op::kLog: {
      Tensor d = g;
      auto a = in(0).data();
      auto dd = d.data();
      for (std::size_t i = 0; i < dd.size(); ++i) dd[i] /= a[i];
      push(0, d);
      return;
    }
    case Op::kRowSoftmax: {
      Tensor d = g;
      for (std::size_t r = 0; r < out.rows(); ++r) {
        auto y = out.row(r);
        auto dr = d.row(r);
        const double inner = dot(dr, y);
        for (std::size_t j = 0; j < dr.size(); ++j) dr[j] = y[j] * (dr[j] - inner);
      }
      push(0, d);
      return;
    }
    case Op::kLogSoftmaxRows: {
      Tensor d = g;
      for (std::size_t r = 0; r < out.rows(); ++r) {
        auto y = out.row(r);
        auto dr = d.row(r);
        double total = 0.0;
        for (double v : dr) total += v;
        for (std::size_t j = 0; j < dr.size(); ++j) {
          dr[j] -= std::exp(y[j]) * total;
        }
      }
      push(0, d);
      return;
    }
    case Op::kLayerNorm: {
      const Tensor& x = in(0);
      Tensor d = g;
      const double dim = static_cast<double>(x.cols());
      for (std::size_t r = 0; r < x.rows(); ++r) {
        auto xr = x.row(r);
        auto y = out.row(r);
        auto dr = d.row(r);
        double mean = 0.0;
        for (double v : xr) mean += v;
        mean /= dim;
        double var = 0.0;
        for (double v : xr) var += (v - mean) * (v - mean);
        var /= dim;
        const double rstd = 1.0 / std::sqrt(var + kLayerNormEpsilon);
        double mean_g = 0.0, mean_gy = 0.0;
        for (std::size_t j = 0; j < dr.size(); ++j) {
          mean_g += dr[j];
          mean_gy += dr[j] * y[j];
        }
        mean_g /= dim;
        mean_gy /= dim;
        for (std::size_t j = 0; j < dr.size(); ++j) {
          dr[j] = rstd * (dr[j] - mean_g - y[j] * mean_gy);
        }
      }
      push(0, d);
      return;
    }
    case Op::kGelu: {
      Tensor d = g;
      auto x = in(0).data();
      auto dd = d.data();
      for (std::size_t i = 0; i < dd.size(); ++i) dd[i] *= gelu_derivative(x[i]);
      push(0, d);
      return;
    }
    case Op::kSegmentMean: {
      const Tensor& a = in(0);
      Tensor d = Tensor::zeros(a.rows(), a.cols());
      std::size_t r = 0;
      for (std::size_t b = 0; b < n.indices.size(); ++b) {
        const double inv = 1.0 / static_cast<double>(n.indices[b]);
        auto grow = g.row(b);
        for (std::size_t k = 0; k < n.indices[b]; ++k, ++r) {
          auto drow = d.row(r);
          for (std::size_t j = 0; j < drow.size(); ++j) drow[j] = grow[j] * inv;
        }
      }
      push(0, d);
      return;
    }
    case Op::kL2NormalizeRows: {
      const Tensor& x = in(0);
      Tensor d = g;
      for (std::size_t r = 0; r < x.rows(); ++r) {
        auto y = out.row(r);
        auto dr = d.row(r);
        const double inv_norm = 1.0 / norm2(x.row(r));
        const double proj = dot(y, dr);
        for (std::size_t j = 0; j < dr.size(); ++j) {
          dr[j] = (dr[j] - y[j] * proj) * inv_norm;
        }
      }
      push(0, d);
      return;
    }
    case Op::kGatherRows: {
      const Tensor& table = in(0);
      Tensor d = Tensor::zeros(table.rows(), table.cols());
      for (std::size_t i = 0; i < n.indices.size(); ++i) {
        auto drow = d.row(n.indices[i]);
        auto grow = g.row(i);
        for (std::size_t j = 0; j < drow.size(); ++j) drow[j] += grow[j];
      }
      push(0, d);
      return;
    }
    case Op::kConcatRows: {
      std::size_t offset = 0;
      for (std::size_t k = 0; k < n.in.size(); ++k) {
        const Tensor& part = in(k);
        const std::size_t count = part.size();
        if (wants(k)) {
          auto src = g.data().subspan(offset, count);
          push(k, Tensor(part.shape(), std::vector<double>(src.begin(), src.end())));
        }
        offset += count;
      }
      return;
    }
    case Op::kSliceRows: {
      const Tensor& a = in(0);
      Tensor d = Tensor::zeros(a.rows(), a.cols());
      auto dst = d.data().subspan(n.indices[0] * a.cols(), g.size());
      std::copy(g.data().begin(), g.data().end(), dst.begin());
      push(0, d);
      return;
    }
    case Op::kDiagSum: {
      const Tensor& a = in(0);
      Tensor d = Tensor::zeros(a.rows(), a.cols());
      for (std::size_t i = 0; i < a.rows(); ++i) d.at(i, i) = g[0];
      push(0, d);
      return;
    }
    case Op::kSum: {
      const Tensor& a = in(0);
      Tensor d(a.shape());
      std::fill(d.data().begin(), d.data().end(), g[0]);
      push(0, d);
      return;
    }
  }
}

Gradients Tape::run_backward(NodeId output, const Tensor& seed) const {
  const Node& out = node(output);
  const Tensor& out_value = value_of(output.index);
  if (seed.shape() != out_value.shape()) {
    throw ShapeError("backward seed shape " + shape_string(seed.shape()) +
                     " does not match output " +
                     shape_string(out_value.shape()));
  }
  Gradients result;
  if (!out.requires_grad) return result;

  std::vector<Tensor> grads(output.index + 1);
  grads[output.index] = seed;
  for (std::uint32_t i = output.index + 1; i-- > 0;) {
    const Node& n = nodes_[i];
    if (!n.requires_grad || grads[i].empty()) continue;
    if (n.op == Op::kLeaf) {
      if (n.leaf == LeafKind::kParameter) {
        const Tensor& v = value_of(i);
        result.params.emplace(n.name, grads[i].reshaped(v.shape()));
      } else if (n.leaf == LeafKind::kInput) {
        result.inputs.emplace(i, std::move(grads[i]));
      }
      continue;
    }
    propagate(n, grads[i], grads);
    grads[i] = Tensor();
  }
  return result;
}

Gradients Tape::backward(NodeId loss) const {
  const Tensor& v = value(loss);
  if (v.size() != 1) {
    throw ContractError("backward: loss must be scalar, got shape " +
                        shape_string(v.shape()));
  }
  return run_backward(loss, Tensor(v.shape(), std::vector<double>{1.0}));
}

Gradients Tape::backward_from(NodeId output, const Tensor& seed) const {
  return run_backward(output, as_matrix(seed));
}

double Tape::replay_deviation() const {
  double worst = 0.0;
  for (const Node& n : nodes_) {
    if (n.op == Op::kLeaf) continue;
    worst = std::max(worst, max_abs_diff(evaluate(n), n.owned));
  }
  return worst;
}

}  // namespace captune::numcore
