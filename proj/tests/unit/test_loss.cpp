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
#include <vector>

#include "captune/error.hpp"
#include "captune/loss/loss.hpp"
#include "doctest.h"
#include "support/toy_problem.hpp"

using namespace captune;
using numcore::Tensor;
using loss::Direction;
using loss::LossConfig;
using loss::Reduction;

namespace {

Tensor random_unit_rows(numcore::Rng& rng, std::size_t n, std::size_t d) {
  Tensor t = Tensor::zeros(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (double& v : t.row(i)) {
      v = rng.normal();
      s += v * v;
    }
    for (double& v : t.row(i)) v /= std::sqrt(s);
  }
  return t;
}

// Literal double loop over -log(exp(s_ii/tau) / sum_j exp(s_ij/tau)).
double naive_term(const Tensor& q, const Tensor& k, double tau) {
  const std::size_t b = q.rows();
  double total = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    double denom = 0.0;
    double num = 0.0;
    for (std::size_t j = 0; j < b; ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < q.cols(); ++c) s += q.at(i, c) * k.at(j, c);
      const double e = std::exp(s / tau);
      denom += e;
      if (i == j) num = e;
    }
    total += -std::log(num / denom);
  }
  return total;
}

double naive_info_nce(const Tensor& x, const Tensor& y, double tau, const LossConfig& c) {
  double v = 0.0;
  switch (c.direction) {
    case Direction::kImageToText: v = naive_term(x, y, tau); break;
    case Direction::kTextToImage: v = naive_term(y, x, tau); break;
    case Direction::kSymmetric: v = 0.5 * (naive_term(x, y, tau) + naive_term(y, x, tau)); break;
  }
  if (c.reduction == Reduction::kMean) v /= static_cast<double>(x.rows());
  return v;
}

}  // namespace

TEST_CASE("similarity matrix by hand") {
  const Tensor x = Tensor::matrix({{1.0, 0.0}, {0.0, 1.0}});
  const Tensor y = Tensor::matrix({{0.6, 0.8}, {1.0, 0.0}});
  const Tensor m = loss::similarity_matrix(x, y);
  CHECK(m.at(0, 0) == doctest::Approx(0.6));
  CHECK(m.at(0, 1) == doctest::Approx(1.0));
  CHECK(m.at(1, 0) == doctest::Approx(0.8));
  CHECK(m.at(1, 1) == doctest::Approx(0.0));

  const Tensor mt = loss::similarity_matrix(y, x);
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 2; ++j) CHECK(m.at(i, j) == mt.at(j, i));
  }
  CHECK(loss::similarity_matrix(x, x).at(0, 1) == 0.0);
  CHECK_THROWS_AS(loss::similarity_matrix(x, Tensor::matrix({{1.0, 0.0, 0.0}})), ShapeError);
}

TEST_CASE("a single pair has zero loss") {
  numcore::Rng rng(0);
  const Tensor x = random_unit_rows(rng, 1, 4);
  const Tensor y = random_unit_rows(rng, 1, 4);
  for (auto dir : {Direction::kImageToText, Direction::kTextToImage, Direction::kSymmetric}) {
    CHECK(std::abs(loss::info_nce(x, y, 0.07, {dir, Reduction::kSum, 0.0})) < 1e-15);
  }
}

TEST_CASE("identity similarity at unit temperature") {
  const Tensor eye = Tensor::identity(2);
  const double expected = 2.0 * std::log(1.0 + std::exp(-1.0));
  CHECK(expected == doctest::Approx(0.626523).epsilon(1e-6));
  for (auto dir : {Direction::kImageToText, Direction::kTextToImage, Direction::kSymmetric}) {
    CHECK(std::abs(loss::info_nce(eye, eye, 1.0, {dir, Reduction::kSum, 0.0}) - expected) < 1e-14);
  }
  CHECK(std::abs(loss::info_nce(eye, eye, 1.0, {Direction::kSymmetric, Reduction::kMean, 0.0}) -
                 expected / 2.0) < 1e-14);
}

TEST_CASE("vectorised loss equals the literal double loop") {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    numcore::Rng rng(seed);
    const std::size_t b = 1 + rng.uniform_index(16);
    const Tensor x = random_unit_rows(rng, b, 6);
    const Tensor y = random_unit_rows(rng, b, 6);
    const double tau = 0.05 + rng.uniform();
    for (auto dir : {Direction::kImageToText, Direction::kTextToImage, Direction::kSymmetric}) {
      for (auto red : {Reduction::kSum, Reduction::kMean}) {
        const LossConfig c{dir, red, 0.0};
        worst = std::max(worst, std::abs(loss::info_nce(x, y, tau, c) - naive_info_nce(x, y, tau, c)));
      }
    }
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("non-positive temperature is rejected") {
  const Tensor eye = Tensor::identity(2);
  CHECK_THROWS_AS(loss::info_nce(eye, eye, 0.0, {}), ParameterError);
  CHECK_THROWS_AS(loss::info_nce(eye, eye, -1.0, {}), ParameterError);
}

TEST_CASE("clip loss is info_nce over the two towers") {
  numcore::Rng rng(4);
  const auto params = model::DualEncoderParams::init(testing::toy_config(), 4);
  const auto batch = testing::random_batch(rng, params.config, 5);
  std::vector<model::TokenSequence> texts;
  for (const auto& ex : batch) texts.push_back(ex.text);
  const Tensor t = model::encode_texts(texts, params);
  const Tensor i = model::encode_images(loss::stack_images(batch, {}, nullptr), params);
  for (auto dir : {Direction::kImageToText, Direction::kTextToImage, Direction::kSymmetric}) {
    const LossConfig c{dir, Reduction::kSum, 0.0};
    CHECK(loss::clip_loss(batch, params, nullptr, c) ==
          doctest::Approx(loss::info_nce(i, t, params.temperature(), c)).epsilon(1e-13));
  }
}

TEST_CASE("symmetric loss on a symmetric similarity equals either direction") {
  numcore::Rng rng(8);
  const Tensor x = random_unit_rows(rng, 6, 5);
  const double sym = loss::info_nce(x, x, 0.3, {Direction::kSymmetric, Reduction::kSum, 0.0});
  const double i2t = loss::info_nce(x, x, 0.3, {Direction::kImageToText, Reduction::kSum, 0.0});
  const double t2i = loss::info_nce(x, x, 0.3, {Direction::kTextToImage, Reduction::kSum, 0.0});
  CHECK(std::abs(sym - i2t) < 1e-13);
  CHECK(std::abs(sym - t2i) < 1e-13);
}

TEST_CASE("text augmentation with single captions reduces to the plain loss") {
  numcore::Rng rng(11);
  const auto params = model::DualEncoderParams::init(testing::toy_config(), 11);
  const auto batch = testing::random_batch(rng, params.config, 4);
  std::vector<loss::MultiCaptionExample> multi;
  for (const auto& ex : batch) multi.push_back({ex.image, {ex.text}});
  numcore::Rng draw(1);
  CHECK(loss::text_aug_loss(multi, params, nullptr, draw, {}) ==
        loss::clip_loss(batch, params, nullptr, {}));
}

TEST_CASE("caption sampling is seeded and uniform") {
  numcore::Rng rng(2);
  const auto params = model::DualEncoderParams::init(testing::toy_config(), 2);
  std::vector<loss::MultiCaptionExample> multi;
  for (int r = 0; r < 4; ++r) {
    loss::MultiCaptionExample m;
    m.image = Tensor::vector(std::vector<double>(6, 0.1 * (r + 1)));
    for (int c = 0; c < 3; ++c) {
      m.captions.push_back(testing::random_sequence(rng, 12, 8, false));
    }
    multi.push_back(m);
  }
  numcore::Rng a(77), b(77);
  CHECK(loss::text_aug_loss(multi, params, nullptr, a, {}) ==
        loss::text_aug_loss(multi, params, nullptr, b, {}));

  std::vector<loss::MultiCaptionExample> one{multi[0]};
  numcore::Rng draw(5);
  std::vector<int> counts(3, 0);
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const auto ex = loss::sample_examples(one, draw);
    for (int c = 0; c < 3; ++c) {
      if (ex[0].text.ids == multi[0].captions[c].ids) {
        ++counts[c];
        break;
      }
    }
  }
  for (int c : counts) CHECK(std::abs(c / static_cast<double>(n) - 1.0 / 3.0) < 0.02);

  std::vector<loss::MultiCaptionExample> empty{{Tensor::vector({1.0}), {}}};
  CHECK_THROWS_AS(loss::sample_examples(empty, draw), DataError);
}

TEST_CASE("image jitter only applies with a stream and a positive scale") {
  numcore::Rng rng(6);
  const auto params = model::DualEncoderParams::init(testing::toy_config(), 6);
  const auto batch = testing::random_batch(rng, params.config, 3);
  const Tensor plain = loss::stack_images(batch, {}, nullptr);
  numcore::Rng j(1);
  const Tensor still = loss::stack_images(batch, {}, &j);
  CHECK(plain.at(0, 0) == still.at(0, 0));
  const Tensor moved = loss::stack_images(batch, {Direction::kSymmetric, Reduction::kSum, 0.1}, &j);
  CHECK(plain.at(0, 0) != moved.at(0, 0));
}

TEST_CASE("direction and reduction names parse") {
  CHECK(loss::parse_direction("t2i") == Direction::kTextToImage);
  CHECK(loss::parse_reduction("mean") == Reduction::kMean);
  CHECK(loss::direction_name(Direction::kSymmetric) == "symmetric");
  CHECK_THROWS_AS(loss::parse_direction("both"), ConfigError);
  CHECK_THROWS_AS(loss::parse_reduction("max"), ConfigError);
}
