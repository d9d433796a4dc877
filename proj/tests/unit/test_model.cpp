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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "captune/error.hpp"
#include "captune/model/encoder.hpp"
#include "captune/model/model.hpp"
#include "doctest.h"

using namespace captune;
using numcore::Tensor;

namespace {

model::EncoderConfig tiny() {
  model::EncoderConfig c;
  c.vocab_size = 32;
  c.max_tokens = 8;
  c.d_model = 8;
  c.n_layers = 2;
  c.mlp_ratio = 2;
  c.d_embed = 4;
  c.d_image = 6;
  return c;
}

model::TokenSequence sequence(std::vector<std::size_t> ids) {
  model::TokenSequence s;
  s.mask.assign(ids.size(), 1);
  s.ids = std::move(ids);
  return s;
}

lora::LoraConfig lora_config(std::size_t rank, double alpha) {
  lora::LoraConfig c;
  c.rank = rank;
  c.alpha = alpha;
  return c;
}

double norm(const Tensor& t) {
  double s = 0.0;
  for (double v : t.data()) s += v * v;
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("vocabulary ids are sorted and independent of corpus order") {
  const std::vector<std::string> a{"a red car", "the blue car"};
  const std::vector<std::string> b{"the blue car", "a red car"};
  const auto va = model::Vocabulary::build(a);
  const auto vb = model::Vocabulary::build(b);
  CHECK(va.tokens() == vb.tokens());
  CHECK(va.size() == 6);
  CHECK(va.token(model::kUnknownId) == model::kUnknownToken);
  CHECK(va.id_of("a") == 1);
  CHECK(va.id_of("the") == 5);
  CHECK(va.id_of("zebra") == model::kUnknownId);
  CHECK_THROWS_AS(model::Vocabulary::from_tokens({"x", "x"}), IntegrityError);
}

TEST_CASE("tokenize and detokenize round trip within max_tokens") {
  const std::vector<std::string> texts{"um cachorro correndo na praia"};
  const auto v = model::Vocabulary::build(texts);
  const auto seq = v.tokenize("um  cachorro\tcorrendo na praia", 77);
  CHECK(seq.ids.size() == 5);
  CHECK(v.detokenize(seq) == texts[0]);

  const auto cut = v.tokenize(texts[0], 3);
  CHECK(cut.ids.size() == 3);
  CHECK(v.detokenize(cut) == "um cachorro correndo");

  CHECK(v.detokenize(v.tokenize("um gato", 77)) == "um <unk>");
  CHECK_THROWS_AS(v.tokenize("   ", 77), DataError);
}

TEST_CASE("token sequences are validated") {
  auto s = sequence({1, 2, 3});
  CHECK_NOTHROW(s.validate(4, 3));
  CHECK_THROWS_AS(s.validate(3, 3), DataError);
  CHECK_THROWS_AS(s.validate(4, 2), DataError);
  s.mask = {0, 0, 0};
  CHECK_THROWS_AS(s.validate(4, 3), DataError);
  s.mask = {1, 1};
  CHECK_THROWS_AS(s.validate(4, 3), DataError);
}

TEST_CASE("text embedding of the tiny config matches the frozen golden vector") {
  const auto p = model::DualEncoderParams::init(tiny(), 2024);
  const Tensor e = model::encode_text(sequence({3, 7, 1, 30, 12}), p);
  const std::vector<double> golden{0.5697011705926418, 0.25211820619528552,
                                   0.6716162857145378, 0.40100941521771427};
  REQUIRE(e.size() == golden.size());
  for (std::size_t i = 0; i < golden.size(); ++i) {
    CHECK(std::abs(e.data()[i] - golden[i]) < 1e-12);
  }
}

TEST_CASE("both towers emit unit vectors") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto p = model::DualEncoderParams::init(tiny(), seed);
    numcore::Rng rng(seed);
    std::vector<std::size_t> ids(1 + rng.uniform_index(8));
    for (auto& id : ids) id = rng.uniform_index(32);
    CHECK(std::abs(norm(model::encode_text(sequence(ids), p)) - 1.0) < 1e-12);

    std::vector<double> img(6);
    for (auto& x : img) x = rng.normal();
    const model::ImageFeature f{"r", Tensor::vector(img)};
    const Tensor a = model::encode_image(f, p);
    CHECK(std::abs(norm(a) - 1.0) < 1e-12);
    const Tensor again = model::encode_image(f, p);
    CHECK(std::equal(a.data().begin(), a.data().end(), again.data().begin()));
  }
}

TEST_CASE("image dimension mismatch is a shape error") {
  const auto p = model::DualEncoderParams::init(tiny(), 1);
  const model::ImageFeature f{"r", Tensor::vector({1.0, 2.0, 3.0})};
  CHECK_THROWS_AS(model::encode_image(f, p), ShapeError);
}

TEST_CASE("padded positions do not influence the text embedding") {
  const auto p = model::DualEncoderParams::init(tiny(), 5);
  const Tensor plain = model::encode_text(sequence({4, 9, 2}), p);
  model::TokenSequence padded = sequence({4, 9, 2, 17, 17});
  padded.mask = {1, 1, 1, 0, 0};
  const Tensor masked = model::encode_text(padded, p);
  for (std::size_t i = 0; i < plain.size(); ++i) {
    CHECK(std::abs(plain.data()[i] - masked.data()[i]) < 1e-12);
  }
}

TEST_CASE("batched encoding is equivariant to the order of the batch") {
  const auto p = model::DualEncoderParams::init(tiny(), 9);
  std::vector<model::TokenSequence> seqs{sequence({1, 2}), sequence({5, 6, 7, 8}),
                                         sequence({30}), sequence({11, 3, 11})};
  const Tensor fwd = model::encode_texts(seqs, p);
  std::vector<model::TokenSequence> rev(seqs.rbegin(), seqs.rend());
  const Tensor bwd = model::encode_texts(rev, p);
  for (std::size_t r = 0; r < seqs.size(); ++r) {
    const Tensor single = model::encode_text(seqs[r], p);
    for (std::size_t j = 0; j < 4; ++j) {
      CHECK(std::abs(fwd.at(r, j) - bwd.at(seqs.size() - 1 - r, j)) < 1e-12);
      CHECK(std::abs(fwd.at(r, j) - single.data()[j]) < 1e-12);
    }
  }
}

TEST_CASE("fresh adapters leave the text embedding unchanged") {
  const auto p = model::DualEncoderParams::init(tiny(), 3);
  const auto adapters = lora::make_adapter_set(p, lora_config(2, 4.0), 4);
  const auto s = sequence({2, 8, 16, 31});
  const Tensor base = model::encode_text(s, p);
  const Tensor with = model::encode_text(s, p, &adapters);
  for (std::size_t i = 0; i < base.size(); ++i) {
    CHECK(std::abs(base.data()[i] - with.data()[i]) < 1e-12);
  }
}

TEST_CASE("adapters built for another shape are a configuration error") {
  auto wide = tiny();
  wide.d_model = 16;
  const auto pw = model::DualEncoderParams::init(wide, 1);
  const auto adapters = lora::make_adapter_set(pw, {}, 2);
  const auto p = model::DualEncoderParams::init(tiny(), 1);
  CHECK_THROWS_AS(model::encode_text(sequence({1, 2}), p, &adapters), ConfigError);
}

TEST_CASE("parameter counts per training mode") {
  auto c = tiny();
  c.d_model = 16;
  const auto p = model::DualEncoderParams::init(c, 0);

  const auto full = model::count_parameters(p, nullptr, model::TrainMode::kFull);
  CHECK(full.total == p.total_scalars());
  CHECK(full.trainable == full.total);
  CHECK(full.fraction == 1.0);

  const auto lit = model::count_parameters(p, nullptr, model::TrainMode::kLit);
  CHECK(lit.total == full.total);
  CHECK(lit.trainable == full.total - p.image_projection.size());

  const auto adapters = lora::make_adapter_set(p, lora_config(2, 2.0), 1);
  CHECK(lora::adapter_parameter_count(adapters) == 256);
  const auto ll = model::count_parameters(p, &adapters, model::TrainMode::kLitLora);
  CHECK(ll.trainable == lora::trainable_count(adapters, p));
  CHECK(ll.trainable == 256 + p.text_projection.size() + 1);
  CHECK(ll.total == full.total + 256);
  CHECK(ll.fraction == doctest::Approx(static_cast<double>(ll.trainable) / ll.total));

  CHECK_THROWS_AS(model::count_parameters(p, nullptr, model::TrainMode::kLitLora), ConfigError);
}

TEST_CASE("temperature stays inside its bounds") {
  auto p = model::DualEncoderParams::init(tiny(), 0);
  CHECK(p.temperature() == doctest::Approx(0.07));
  p.log_temperature.at(0, 0) = 50.0;
  p.clamp_temperature();
  CHECK(p.temperature() == doctest::Approx(model::kMaxTemperature));
  p.log_temperature.at(0, 0) = -50.0;
  p.clamp_temperature();
  CHECK(p.temperature() == doctest::Approx(model::kMinTemperature));
}

TEST_CASE("train modes parse from their names") {
  CHECK(model::parse_train_mode("lit-lora") == model::TrainMode::kLitLora);
  CHECK(model::parse_train_mode("lit_lora") == model::TrainMode::kLitLora);
  CHECK(model::train_mode_name(model::TrainMode::kFull) == "full");
  CHECK_THROWS_AS(model::parse_train_mode("frozen"), ConfigError);
}
