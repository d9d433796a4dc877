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
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "captune/captune.h"
#include "doctest.h"

namespace {

std::string take(char* s) {
  std::string out = s != nullptr ? s : "";
  ct_string_free(s);
  return out;
}

struct Config {
  ct_config* p = nullptr;
  Config() { REQUIRE(ct_config_new(&p) == CT_OK); }
  ~Config() { ct_config_free(p); }
  void set(const char* k, const char* v) { REQUIRE(ct_config_set(p, k, v) == CT_OK); }
};

std::filesystem::path fresh_dir(const std::string& name) {
  const auto d = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(d);
  std::filesystem::create_directories(d);
  return d;
}

}  // namespace

TEST_CASE("status names and version") {
  CHECK(std::strlen(ct_version()) > 0);
  CHECK(std::string(ct_status_name(CT_OK)) == "ok");
  CHECK(std::string(ct_status_name(CT_ERR_CONFIGURATION)) == "configuration");
  CHECK(std::string(ct_status_name(CT_ERR_IO)) == "io");
  CHECK(std::string(ct_status_name(CT_ERR_USAGE)) == "usage");
}

TEST_CASE("config handles") {
  Config c;
  c.set("train.steps", "12");
  char* out = nullptr;
  REQUIRE(ct_config_get(c.p, "train.steps", &out) == CT_OK);
  CHECK(take(out) == "12");
  CHECK(ct_config_set(c.p, "no.such.key", "1") == CT_ERR_CONFIGURATION);
  CHECK(std::string(ct_last_error()).find("no.such.key") != std::string::npos);

  REQUIRE(ct_config_hash(c.p, &out) == CT_OK);
  const std::string h1 = take(out);
  CHECK(h1.size() == 64);
  c.set("train.steps", "13");
  REQUIRE(ct_config_hash(c.p, &out) == CT_OK);
  CHECK(take(out) != h1);

  REQUIRE(ct_config_canonical(c.p, &out) == CT_OK);
  CHECK(take(out).find("train.steps = 13\n") != std::string::npos);
  REQUIRE(ct_config_keys(&out) == CT_OK);
  CHECK(take(out).find("lora.rank\n") != std::string::npos);

  const char* keys[] = {"seed"};
  const char* values[] = {"4"};
  ct_config* r = nullptr;
  REQUIRE(ct_config_resolve("capivara-opt", nullptr, keys, values, 1, "9", &r) == CT_OK);
  REQUIRE(ct_config_get(r, "train.mode", &out) == CT_OK);
  CHECK(take(out) == "lit_lora");
  REQUIRE(ct_config_get(r, "seed", &out) == CT_OK);
  CHECK(take(out) == "4");
  ct_config_free(r);
  CHECK(ct_config_resolve("nope", nullptr, nullptr, nullptr, 0, nullptr, &r) == CT_ERR_CONFIGURATION);
  CHECK(ct_config_resolve(nullptr, "/nonexistent.cfg", nullptr, nullptr, 0, nullptr, &r) == CT_ERR_IO);
}

TEST_CASE("null arguments are reported, not dereferenced") {
  CHECK(ct_config_new(nullptr) == CT_ERR_NULL_ARGUMENT);
  CHECK(ct_config_set(nullptr, "seed", "1") == CT_ERR_NULL_ARGUMENT);
  CHECK(ct_model_load(nullptr, nullptr) == CT_ERR_NULL_ARGUMENT);
  double out[4];
  CHECK(ct_recall_report(nullptr, 3, out) == CT_ERR_NULL_ARGUMENT);
  ct_config_free(nullptr);
  ct_model_free(nullptr);
  ct_string_free(nullptr);
}

TEST_CASE("numerics through the C boundary") {
  double kwh = 0.0, kg = 0.0;
  REQUIRE(ct_energy_report(7200.0, 100.0, 0.1, &kwh, &kg) == CT_OK);
  CHECK(kwh == doctest::Approx(0.2));
  CHECK(kg == doctest::Approx(0.02));
  CHECK(ct_energy_report(-1.0, 100.0, 0.1, &kwh, &kg) == CT_ERR_PARAMETER);

  const double eye[] = {1, 0, 0, 1};
  double loss = 0.0;
  REQUIRE(ct_info_nce(eye, eye, 2, 2, 1.0, CT_IMAGE_TO_TEXT, &loss) == CT_OK);
  CHECK(loss == doctest::Approx(2.0 * std::log(1.0 + std::exp(-1.0))).epsilon(1e-14));
  CHECK(ct_info_nce(eye, eye, 2, 2, 0.0, CT_IMAGE_TO_TEXT, &loss) == CT_ERR_PARAMETER);

  const std::size_t ranks[] = {1, 3, 7, 12};
  double rep[4];
  REQUIRE(ct_recall_report(ranks, 4, rep) == CT_OK);
  CHECK(rep[0] == 25.0);
  CHECK(rep[1] == 50.0);
  CHECK(rep[2] == 75.0);
  CHECK(rep[3] == 50.0);
  CHECK(ct_recall_report(ranks, 0, rep) == CT_ERR_CONTRACT);
}

TEST_CASE("stages run and models load through the C API") {
  const auto dir = fresh_dir("captune_capi_test");
  Config c;
  c.set("seed", "3");
  c.set("toy.n_records", "60");
  c.set("toy.d_image", "8");
  c.set("train.steps", "3");
  c.set("train.batch_size", "16");

  const std::string corpus = (dir / "corpus.jsonl").string();
  const std::string model = (dir / "model.ckpt").string();
  char* summary = nullptr;
  REQUIRE(ct_run_stage(c.p, "gen-toy", nullptr, nullptr, corpus.c_str(), &summary) == CT_OK);
  CHECK(take(summary).find("gen-toy") != std::string::npos);
  REQUIRE(ct_run_stage(c.p, "train", corpus.c_str(), nullptr, model.c_str(), &summary) == CT_OK);
  take(summary);
  CHECK(std::filesystem::exists(model));

  ct_model* m = nullptr;
  REQUIRE(ct_model_load(model.c_str(), &m) == CT_OK);
  std::size_t d_image = 0, d_embed = 0;
  REQUIRE(ct_model_dims(m, &d_image, &d_embed) == CT_OK);
  CHECK(d_image == 8);
  std::vector<double> e(d_embed);
  REQUIRE(ct_model_embed_text(m, "a red dog", e.data(), e.size()) == CT_OK);
  double n = 0.0;
  for (double v : e) n += v * v;
  CHECK(std::abs(n - 1.0) < 1e-12);
  std::vector<double> img(d_image, 0.5);
  REQUIRE(ct_model_embed_image(m, img.data(), img.size(), e.data(), e.size()) == CT_OK);
  CHECK(ct_model_embed_image(m, img.data(), img.size() - 1, e.data(), e.size()) == CT_ERR_SHAPE);
  CHECK(ct_model_embed_text(m, "a red dog", e.data(), e.size() - 1) != CT_OK);
  ct_model_free(m);

  CHECK(ct_run_stage(c.p, "filter", nullptr, model.c_str(), corpus.c_str(), &summary) == CT_ERR_USAGE);
  CHECK(std::string(ct_last_stage()) == "filter");
  CHECK(ct_run_stage(c.p, "train", (dir / "missing.jsonl").string().c_str(), nullptr,
                     model.c_str(), &summary) == CT_ERR_IO);
  CHECK(std::string(ct_last_error()).find("missing.jsonl") != std::string::npos);
  CHECK(ct_run_stage(c.p, "dance", nullptr, nullptr, nullptr, &summary) == CT_ERR_USAGE);
  CHECK(ct_model_load((dir / "corpus.jsonl").string().c_str(), &m) == CT_ERR_PARSE);
  std::filesystem::remove_all(dir);
}
