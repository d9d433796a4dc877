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

#include <cmath>
#include <string>
#include <vector>

#include "captune/checkpoint/grad_checkpoint.hpp"
#include "captune/error.hpp"
#include "captune/numcore/rng.hpp"
#include "doctest.h"

using namespace captune;
using checkpoint::ActivationLedger;
using checkpoint::Layer;
using numcore::Tensor;

namespace {

struct Tower {
  std::vector<Tensor> weights;
  std::vector<Layer> layers;
};

// Residual GELU blocks over a 3 x 5 activation.
Tower random_tower(std::size_t n, std::uint64_t seed) {
  Tower t;
  numcore::Rng rng(seed);
  for (std::size_t l = 0; l < n; ++l) {
    Tensor w = Tensor::zeros(5, 5);
    for (double& v : w.data()) v = rng.normal(0.0, 0.4);
    t.weights.push_back(std::move(w));
  }
  for (std::size_t l = 0; l < n; ++l) {
    const Tensor* w = &t.weights[l];
    const std::string name = "w" + std::to_string(l);
    t.layers.push_back([w, name](numcore::Tape& tape, numcore::NodeId x) {
      const auto h = tape.gelu(tape.linear(tape.layer_norm(x), tape.parameter(name, *w)));
      return tape.add(x, h);
    });
  }
  return t;
}

Tensor random_input(std::uint64_t seed) {
  numcore::Rng rng(seed);
  Tensor x = Tensor::zeros(3, 5);
  for (double& v : x.data()) v = rng.normal();
  return x;
}

bool same(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.data()[i] != b.data()[i]) return false;
  }
  return true;
}

struct Comparison {
  bool outputs_equal = false;
  bool grads_equal = false;
  ActivationLedger checkpointed;
  ActivationLedger plain;
};

Comparison compare(std::size_t n, std::optional<long long> s, std::uint64_t seed) {
  const Tower tower = random_tower(n, seed);
  const Tensor x = random_input(seed + 1);
  const auto p = checkpoint::plan(n, s);
  Comparison c;
  const auto state = checkpoint::forward_checkpointed(x, tower.layers, p, c.checkpointed);
  Tensor seed_grad = Tensor::zeros(3, 5);
  numcore::Rng rng(seed + 2);
  for (double& v : seed_grad.data()) v = rng.normal();
  const auto ck = checkpoint::backward_checkpointed(state, tower.layers, p, seed_grad,
                                                    c.checkpointed);
  const auto base = checkpoint::forward_backward_plain(x, tower.layers, seed_grad, c.plain);
  c.outputs_equal = same(state.output, base.output);
  c.grads_equal = same(ck.input, base.grads.input) &&
                  ck.params.params.size() == base.grads.params.params.size();
  for (const auto& [name, g] : base.grads.params.params) {
    c.grads_equal = c.grads_equal && ck.params.has_param(name) && same(ck.params.param(name), g);
  }
  return c;
}

}  // namespace

TEST_CASE("segment plans") {
  const auto one = checkpoint::plan(1);
  CHECK(one.segment_count() == 1);
  CHECK(one.segment_end(0) == 1);

  const auto nine = checkpoint::plan(9);
  CHECK(nine.segment_size == 3);
  CHECK(nine.boundaries == std::vector<std::size_t>{0, 3, 6});

  const auto ten = checkpoint::plan(10);
  CHECK(ten.segment_size == 4);
  CHECK(ten.segment_count() <= 3);
  for (std::size_t k = 0; k < ten.segment_count(); ++k) {
    CHECK(ten.segment_end(k) - ten.segment_begin(k) <= 4);
  }
  CHECK(ten.segment_end(ten.segment_count() - 1) == 10);

  CHECK(checkpoint::plan(5, 1).segment_count() == 5);
  CHECK(checkpoint::plan(5, 100).segment_count() == 1);
  CHECK_THROWS_AS(checkpoint::plan(0), ParameterError);
  CHECK_THROWS_AS(checkpoint::plan(4, 0), ParameterError);
  CHECK_THROWS_AS(checkpoint::plan(4, -2), ParameterError);
}

TEST_CASE("checkpointed outputs and gradients are bitwise equal to the plain pass") {
  for (std::size_t n : {1u, 2u, 4u, 9u, 10u, 16u}) {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      for (std::optional<long long> s : {std::optional<long long>{}, std::optional<long long>{1},
                                         std::optional<long long>{2}, std::optional<long long>{100}}) {
        const auto c = compare(n, s, 31 * seed + n);
        CHECK(c.outputs_equal);
        CHECK(c.grads_equal);
      }
    }
  }
}

TEST_CASE("ledger stores only segment inputs at n = 9, s = 3") {
  const auto c = compare(9, 3, 5);
  CHECK(c.plain.peak == 9);
  CHECK(c.checkpointed.peak >= 3);
  CHECK(c.checkpointed.peak <= 3 + 3);
  CHECK(c.checkpointed.recomputes > 0);
  CHECK(c.checkpointed.stored == 0);
}

TEST_CASE("peak memory grows like the square root of depth") {
  std::vector<double> ratios;
  for (std::size_t n : {4u, 9u, 16u, 25u, 36u}) {
    const auto c = compare(n, {}, n);
    const auto s = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
    CHECK(c.plain.peak == n);
    CHECK(c.checkpointed.peak <= (n + s - 1) / s + s);
    ratios.push_back(static_cast<double>(c.checkpointed.peak) / std::sqrt(static_cast<double>(n)));
  }
  for (double r : ratios) CHECK(r <= 2.0);
}

TEST_CASE("ledger rejects releasing more than is stored") {
  ActivationLedger l;
  l.store(2);
  l.release(1);
  CHECK(l.stored == 1);
  CHECK(l.peak == 2);
  CHECK_THROWS_AS(l.release(2), InternalError);
}
