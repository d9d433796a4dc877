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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "captune/error.hpp"
#include "captune/model/model_io.hpp"
#include "captune/pipeline/config.hpp"
#include "doctest.h"

using namespace captune;
using numcore::Tensor;

namespace {

model::Model small_model(bool with_lora) {
  const std::vector<std::string> texts{"um cachorro", "a dog", "uma casa"};
  model::EncoderConfig c;
  c.max_tokens = 6;
  c.d_model = 8;
  c.n_layers = 2;
  c.mlp_ratio = 2;
  c.d_embed = 4;
  c.d_image = 5;
  model::Model m = model::make_model(model::Vocabulary::build(texts), c, 8);
  if (with_lora) {
    lora::LoraConfig lc;
    lc.rank = 2;
    lc.alpha = 4.0;
    lc.dropout = 0.1;
    m.adapters = lora::make_adapter_set(m.params, lc, 9);
    for (auto& [t, a] : m.adapters->adapters()) {
      for (double& v : a.up.data()) v = 0.125;
    }
  }
  return m;
}

std::filesystem::path temp_file(const std::string& name, const std::string& content) {
  const auto p = std::filesystem::temp_directory_path() / name;
  std::ofstream(p, std::ios::binary) << content;
  return p;
}

}  // namespace

TEST_CASE("model files round trip at float32 precision") {
  for (bool with_lora : {false, true}) {
    const auto m = small_model(with_lora);
    const model::Lineage lineage{{"config_hash", "abc"}, {"seed", "7"}};
    const std::string bytes = model::serialize_model(m, lineage);
    CHECK(bytes.starts_with("CAPTUNE-MODEL 1 "));
    const auto back = model::parse_model(bytes);
    CHECK(back.lineage == lineage);
    CHECK(back.model.vocab.tokens() == m.vocab.tokens());
    CHECK(back.model.params.config == m.params.config);
    CHECK(back.model.adapters.has_value() == with_lora);
    m.params.for_each([&](const std::string& name, const Tensor& t) {
      const Tensor* u = back.model.params.find(name);
      REQUIRE(u != nullptr);
      for (std::size_t i = 0; i < t.size(); ++i) {
        REQUIRE(u->data()[i] == static_cast<double>(static_cast<float>(t.data()[i])));
      }
    });
    if (with_lora) {
      CHECK(back.model.adapters->size() == m.adapters->size());
      const auto* a = back.model.adapters->find({1, lora::Projection::kValue});
      REQUIRE(a != nullptr);
      CHECK(a->alpha == 4.0);
      CHECK(a->dropout == doctest::Approx(0.1));
      CHECK(a->up.data()[0] == 0.125);
    }
    CHECK(model::serialize_model(back.model, back.lineage) == bytes);
  }
}

TEST_CASE("damaged model files are rejected") {
  const std::string bytes = model::serialize_model(small_model(true));
  CHECK_THROWS_AS(model::parse_model("NOT-A-MODEL 1 3\n{}"), ParseError);
  CHECK_THROWS_AS(model::parse_model(bytes.substr(0, bytes.size() - 4)), IntegrityError);
  CHECK_THROWS_AS(model::parse_model(bytes + "xx"), IntegrityError);
  CHECK_THROWS_AS(model::parse_model(bytes.substr(0, 30)), ParseError);

  std::string wrong_version = bytes;
  wrong_version[14] = '9';
  CHECK_THROWS_AS(model::parse_model(wrong_version), ParseError);

  std::string shape = bytes;
  const auto pos = shape.find("\"d_model\":8");
  REQUIRE(pos != std::string::npos);
  shape[pos + 10] = '9';
  CHECK_THROWS_AS(model::parse_model(shape), IntegrityError);

  const auto path = temp_file("captune_bad.ckpt", "garbage");
  CHECK_THROWS_AS(model::load_model(path), ParseError);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(model::load_model("/nonexistent/model.ckpt"), IoError);
}

TEST_CASE("model files survive a trip through the filesystem") {
  const auto m = small_model(false);
  const auto path = std::filesystem::temp_directory_path() / "captune_roundtrip.ckpt";
  model::save_model(path, m, {{"stage", "train"}});
  const auto back = model::load_model(path);
  CHECK(back.lineage.at("stage") == "train");
  const std::vector<std::string> q{"um cachorro"};
  const Tensor a = m.embed_texts(q);
  const Tensor b = back.model.embed_texts(q);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a.data()[i] - b.data()[i]) < 1e-5);
  std::filesystem::remove(path);
}

TEST_CASE("config keys round trip through text") {
  pipeline::PipelineConfig cfg;
  for (const auto& key : pipeline::config_keys()) {
    const std::string v = pipeline::get_value(cfg, key);
    pipeline::PipelineConfig copy = cfg;
    pipeline::set_value(copy, key, v);
    CHECK(pipeline::get_value(copy, key) == v);
  }
  CHECK_THROWS_AS(pipeline::set_value(cfg, "no.such.key", "1"), ConfigError);
  CHECK_THROWS_AS(pipeline::set_value(cfg, "train.steps", "many"), ConfigError);
  CHECK_THROWS_AS(pipeline::set_value(cfg, "train.mode", "frozen"), ConfigError);
  pipeline::set_value(cfg, "train.segment_size", "auto");
  CHECK_FALSE(cfg.train.segment_size.has_value());
  pipeline::set_value(cfg, "train.segment_size", "3");
  CHECK(cfg.train.segment_size == 3);
}

TEST_CASE("config hash tracks canonical content only") {
  pipeline::PipelineConfig a;
  pipeline::PipelineConfig b;
  CHECK(pipeline::config_hash(a) == pipeline::config_hash(b));
  CHECK(pipeline::config_hash(a).size() == 64);
  pipeline::set_value(b, "train.steps", "101");
  CHECK(pipeline::config_hash(a) != pipeline::config_hash(b));
  const std::string text = pipeline::canonical_text(a);
  CHECK(text.find("seed = 0\n") != std::string::npos);
  CHECK(text.find("train.steps = 100\n") != std::string::npos);
}

TEST_CASE("config text parsing") {
  const auto kv = pipeline::parse_config_text("# comment\nseed = 3\n\n train.steps=5 # trailing\n", "c");
  REQUIRE(kv.size() == 2);
  CHECK(kv[0] == std::pair<std::string, std::string>{"seed", "3"});
  CHECK(kv[1] == std::pair<std::string, std::string>{"train.steps", "5"});

  auto message = [](std::string_view text) -> std::string {
    try {
      pipeline::parse_config_text(text, "c");
    } catch (const ParseError& e) {
      return e.what();
    }
    return "";
  };
  CHECK(message("seed = 1\nbroken line\n").starts_with("line 2: "));
  CHECK(message("seed = 1\nseed = 2\n").starts_with("line 2: "));
}

TEST_CASE("precedence: defaults, preset, file, flags, environment seed") {
  const auto file = temp_file("captune_test.cfg",
                              "preset = capivara-opt\ntrain.steps = 40\nlora.rank = 4\n");
  pipeline::ConfigSources src;
  src.config_file = file.string();
  auto cfg = pipeline::resolve(src);
  CHECK(cfg.preset == "capivara-opt");
  CHECK(cfg.train.mode == model::TrainMode::kLitLora);
  CHECK(cfg.train.total_steps == 40);
  CHECK(cfg.train.lora.rank == 4);
  CHECK(cfg.train.batch_size == 1000);

  src.overrides = {{"train.steps", "7"}};
  src.preset = "capivara-ft";
  cfg = pipeline::resolve(src);
  CHECK(cfg.preset == "capivara-ft");
  CHECK(cfg.train.mode == model::TrainMode::kLit);
  CHECK(cfg.train.total_steps == 7);

  src.env_seed = "99";
  CHECK(pipeline::resolve(src).seed == 99);
  src.overrides.push_back({"seed", "5"});
  CHECK(pipeline::resolve(src).seed == 5);

  const auto seeded = temp_file("captune_seeded.cfg", "seed = 12\n");
  pipeline::ConfigSources s2;
  s2.config_file = seeded.string();
  s2.env_seed = "99";
  CHECK(pipeline::resolve(s2).seed == 12);

  pipeline::ConfigSources none;
  none.env_seed = "not-a-number";
  CHECK_THROWS_AS(pipeline::resolve(none), ConfigError);
  pipeline::ConfigSources missing;
  missing.config_file = "/nonexistent/captune.cfg";
  CHECK_THROWS_AS(pipeline::resolve(missing), IoError);
  pipeline::ConfigSources bad_preset;
  bad_preset.preset = "no-such-preset";
  CHECK_THROWS_AS(pipeline::resolve(bad_preset), ConfigError);

  std::filesystem::remove(file);
  std::filesystem::remove(seeded);
}

TEST_CASE("resolved configs are validated") {
  pipeline::ConfigSources src;
  src.overrides = {{"train.batch_size", "0"}};
  CHECK_THROWS_AS(pipeline::validate(pipeline::resolve(src)), ConfigError);
  src.overrides = {{"toy.d_image", "7"}};
  CHECK(pipeline::resolve(src).encoder.d_image == 7);
}
