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

#include "captune/captune.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "captune/error.hpp"
#include "captune/evalkit/metrics.hpp"
#include "captune/loss/loss.hpp"
#include "captune/model/model_io.hpp"
#include "captune/pipeline/config.hpp"
#include "captune/pipeline/stages.hpp"
#include "captune/trainer/trainer.hpp"

struct ct_config {
  captune::pipeline::PipelineConfig cfg;
};

struct ct_model {
  captune::model::Model model;
};

namespace {

using namespace captune;

thread_local std::string t_error;
thread_local std::string t_stage;

static_assert(static_cast<int>(ErrorKind::kInternal) + 1 == CT_ERR_INTERNAL);

ct_status status_of(ErrorKind kind) { return static_cast<ct_status>(static_cast<int>(kind) + 1); }

template <class F>
ct_status guard(F&& body) {
  t_error.clear();
  t_stage.clear();
  try {
    body();
    return CT_OK;
  } catch (const pipeline::StageError& e) {
    t_error = e.what();
    t_stage = e.stage();
    return status_of(e.kind());
  } catch (const Error& e) {
    t_error = e.what();
    return status_of(e.kind());
  } catch (const std::invalid_argument& e) {
    t_error = e.what();
    return CT_ERR_NULL_ARGUMENT;
  } catch (const std::exception& e) {
    t_error = e.what();
    return CT_ERR_INTERNAL;
  } catch (...) {
    t_error = "unknown failure";
    return CT_ERR_INTERNAL;
  }
}

void need(const void* p, const char* name) {
  if (p == nullptr) throw std::invalid_argument(std::string(name) + " must not be NULL");
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::string join_lines(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) out += s + "\n";
  return out;
}

ct_status null_guard(const void* p, const char* name) {
  if (p != nullptr) return CT_OK;
  t_error = std::string(name) + " must not be NULL";
  t_stage.clear();
  return CT_ERR_NULL_ARGUMENT;
}

}  // namespace

extern "C" {

const char* ct_version(void) { return "1.0.0"; }

const char* ct_status_name(ct_status status) {
  switch (status) {
    case CT_OK: return "ok";
    case CT_ERR_NULL_ARGUMENT: return "null-argument";
    default: break;
  }
  const int k = static_cast<int>(status) - 1;
  if (k < 0 || k > static_cast<int>(ErrorKind::kInternal)) return "unknown";
  return error_kind_name(static_cast<ErrorKind>(k)).data();
}

const char* ct_last_error(void) { return t_error.c_str(); }
const char* ct_last_stage(void) { return t_stage.c_str(); }
void ct_string_free(char* s) { std::free(s); }

ct_status ct_config_new(ct_config** out) {
  if (auto s = null_guard(out, "out")) return s;
  return guard([&] { *out = new ct_config{}; });
}

ct_status ct_config_resolve(const char* preset, const char* config_path,
                            const char* const* keys, const char* const* values,
                            size_t n_overrides, const char* env_seed, ct_config** out) {
  if (auto s = null_guard(out, "out")) return s;
  if (n_overrides > 0) {
    if (auto s = null_guard(keys, "keys")) return s;
    if (auto s = null_guard(values, "values")) return s;
  }
  return guard([&] {
    pipeline::ConfigSources src;
    if (preset != nullptr) src.preset = preset;
    if (config_path != nullptr) src.config_file = config_path;
    if (env_seed != nullptr) src.env_seed = env_seed;
    for (size_t i = 0; i < n_overrides; ++i) {
      need(keys[i], "override key");
      need(values[i], "override value");
      src.overrides.emplace_back(keys[i], values[i]);
    }
    *out = new ct_config{pipeline::resolve(src)};
  });
}

void ct_config_free(ct_config* cfg) { delete cfg; }

ct_status ct_config_set(ct_config* cfg, const char* key, const char* value) {
  if (auto s = null_guard(cfg, "cfg")) return s;
  if (auto s = null_guard(key, "key")) return s;
  if (auto s = null_guard(value, "value")) return s;
  return guard([&] {
    if (std::string_view(key) == "preset") {
      pipeline::apply_preset(cfg->cfg, value);
    } else {
      pipeline::set_value(cfg->cfg, key, value);
    }
  });
}

ct_status ct_config_get(const ct_config* cfg, const char* key, char** out) {
  if (auto s = null_guard(cfg, "cfg")) return s;
  if (auto s = null_guard(key, "key")) return s;
  if (auto s = null_guard(out, "out")) return s;
  return guard([&] { *out = dup(pipeline::get_value(cfg->cfg, key)); });
}

ct_status ct_config_canonical(const ct_config* cfg, char** out) {
  if (auto s = null_guard(cfg, "cfg")) return s;
  if (auto s = null_guard(out, "out")) return s;
  return guard([&] { *out = dup(pipeline::canonical_text(cfg->cfg)); });
}

ct_status ct_config_hash(const ct_config* cfg, char** out) {
  if (auto s = null_guard(cfg, "cfg")) return s;
  if (auto s = null_guard(out, "out")) return s;
  return guard([&] { *out = dup(pipeline::config_hash(cfg->cfg)); });
}

ct_status ct_config_keys(char** out) {
  if (auto s = null_guard(out, "out")) return s;
  return guard([&] { *out = dup(join_lines(pipeline::config_keys())); });
}

ct_status ct_stage_names(char** out) {
  if (auto s = null_guard(out, "out")) return s;
  return guard([&] { *out = dup(join_lines(pipeline::stage_names())); });
}

ct_status ct_run_stage(const ct_config* cfg, const char* stage, const char* in,
                       const char* model, const char* out, char** summary) {
  if (auto s = null_guard(cfg, "cfg")) return s;
  if (auto s = null_guard(stage, "stage")) return s;
  return guard([&] {
    const std::string name(stage);
    auto path = [&](const char* p, const char* what) {
      if (p == nullptr || *p == '\0') {
        throw pipeline::StageError(name, ErrorKind::kUsage,
                                   name + " needs " + what);
      }
      return pipeline::fs::path(p);
    };
    const auto& c = cfg->cfg;
    std::vector<pipeline::StageResult> results;
    if (name == "gen-toy") {
      results.push_back(pipeline::run_gen_toy(c, path(out, "--out")));
    } else if (name == "filter") {
      results.push_back(pipeline::run_filter(c, path(in, "--in"), path(model, "--model"),
                                             path(out, "--out")));
    } else if (name == "augment") {
      results.push_back(pipeline::run_augment(c, path(in, "--in"), path(out, "--out")));
    } else if (name == "translate") {
      results.push_back(pipeline::run_translate(c, path(in, "--in"), path(out, "--out")));
    } else if (name == "select") {
      results.push_back(pipeline::run_select(c, path(in, "--in"), path(model, "--model"),
                                             path(out, "--out")));
    } else if (name == "train") {
      std::optional<pipeline::fs::path> start;
      if (model != nullptr && *model != '\0') start = model;
      results.push_back(pipeline::run_train(c, path(in, "--in"), start, path(out, "--out")));
    } else if (name == "eval") {
      results.push_back(pipeline::run_eval(c, path(in, "--in"), path(model, "--model"),
                                           path(out, "--out")));
    } else if (name == "report") {
      results.push_back(pipeline::run_report(path(in, "--in")));
    } else if (name == "pipeline") {
      results = pipeline::run_pipeline(c, path(out, "--out"));
    } else {
      throw UsageError("unknown stage '" + name + "'");
    }
    if (summary != nullptr) {
      std::string text;
      for (const auto& r : results) text += r.summary + "\n";
      *summary = dup(text);
    }
  });
}

ct_status ct_run_pipeline(const ct_config* cfg, const char* run_dir, ct_stage_callback on_stage,
                          void* user) {
  if (auto s = null_guard(cfg, "cfg")) return s;
  if (auto s = null_guard(run_dir, "run_dir")) return s;
  return guard([&] {
    pipeline::run_pipeline(cfg->cfg, run_dir, [&](const pipeline::StageResult& r) {
      if (on_stage != nullptr) on_stage(r.stage.c_str(), r.summary.c_str(), user);
    });
  });
}

ct_status ct_model_load(const char* path, ct_model** out) {
  if (auto s = null_guard(path, "path")) return s;
  if (auto s = null_guard(out, "out")) return s;
  return guard([&] { *out = new ct_model{model::load_model(path).model}; });
}

void ct_model_free(ct_model* model) { delete model; }

ct_status ct_model_dims(const ct_model* model, size_t* d_image, size_t* d_embed) {
  if (auto s = null_guard(model, "model")) return s;
  return guard([&] {
    if (d_image != nullptr) *d_image = model->model.params.config.d_image;
    if (d_embed != nullptr) *d_embed = model->model.params.config.d_embed;
  });
}

ct_status ct_model_embed_text(const ct_model* model, const char* text, double* out,
                              size_t out_len) {
  if (auto s = null_guard(model, "model")) return s;
  if (auto s = null_guard(text, "text")) return s;
  if (auto s = null_guard(out, "out")) return s;
  return guard([&] {
    const std::vector<std::string> texts{text};
    const numcore::Tensor e = model->model.embed_texts(texts);
    if (out_len != e.cols()) {
      throw ShapeError("output buffer holds " + std::to_string(out_len) + " values, embedding has " +
                       std::to_string(e.cols()));
    }
    std::memcpy(out, e.data().data(), e.cols() * sizeof(double));
  });
}

ct_status ct_model_embed_image(const ct_model* model, const double* feature, size_t feature_len,
                               double* out, size_t out_len) {
  if (auto s = null_guard(model, "model")) return s;
  if (auto s = null_guard(feature, "feature")) return s;
  if (auto s = null_guard(out, "out")) return s;
  return guard([&] {
    const std::vector<std::vector<double>> images{std::vector<double>(feature, feature + feature_len)};
    const numcore::Tensor e = model->model.embed_images(images);
    if (out_len != e.cols()) {
      throw ShapeError("output buffer holds " + std::to_string(out_len) + " values, embedding has " +
                       std::to_string(e.cols()));
    }
    std::memcpy(out, e.data().data(), e.cols() * sizeof(double));
  });
}

ct_status ct_energy_report(double elapsed_s, double power_w, double intensity,
                           double* energy_kwh, double* emissions_kg) {
  return guard([&] {
    const auto r = trainer::energy_report(elapsed_s, power_w, intensity);
    if (energy_kwh != nullptr) *energy_kwh = r.energy_kwh;
    if (emissions_kg != nullptr) *emissions_kg = r.emissions_kg;
  });
}

ct_status ct_info_nce(const double* x, const double* y, size_t batch, size_t dim, double tau,
                      ct_direction direction, double* out) {
  if (auto s = null_guard(x, "x")) return s;
  if (auto s = null_guard(y, "y")) return s;
  if (auto s = null_guard(out, "out")) return s;
  return guard([&] {
    const std::size_t n = batch * dim;
    numcore::Tensor xt({batch, dim}, std::vector<double>(x, x + n));
    numcore::Tensor yt({batch, dim}, std::vector<double>(y, y + n));
    loss::LossConfig cfg;
    switch (direction) {
      case CT_IMAGE_TO_TEXT: cfg.direction = loss::Direction::kImageToText; break;
      case CT_TEXT_TO_IMAGE: cfg.direction = loss::Direction::kTextToImage; break;
      case CT_SYMMETRIC: cfg.direction = loss::Direction::kSymmetric; break;
      default: throw ParameterError("unknown direction " + std::to_string(direction));
    }
    *out = loss::info_nce(xt, yt, tau, cfg);
  });
}

ct_status ct_recall_report(const size_t* ranks, size_t n, double out[4]) {
  if (auto s = null_guard(ranks, "ranks")) return s;
  if (auto s = null_guard(out, "out")) return s;
  return guard([&] {
    const auto rep = evalkit::recall_report(std::vector<std::size_t>(ranks, ranks + n), {1, 5, 10},
                                            evalkit::RetrievalDirection::kTextToImage);
    for (int i = 0; i < 3; ++i) out[i] = rep.recall[static_cast<std::size_t>(i)];
    out[3] = rep.mean_recall;
  });
}

}  // extern "C"
