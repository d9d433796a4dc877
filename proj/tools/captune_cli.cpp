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

// Command-line front end over the C API.

#include <cstdio>
#include <cstdlib>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "captune/captune.h"

namespace {

struct Flags {
  std::string config;
  std::optional<std::string> seed;
  std::optional<std::string> preset;
  std::string in;
  std::string out;
  std::string model;
  std::optional<double> threshold;
  std::optional<std::string> strategy;
  std::optional<std::string> mode;
  std::optional<std::size_t> batch_size;
  std::optional<std::size_t> steps;
  std::optional<double> power_watts;
  std::optional<double> grid_intensity;
  std::vector<std::string> sets;
};

std::string number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "key = value config file");
  sub->add_option("--seed", f.seed, "global seed (falls back to CAPIVARA_SEED)");
  sub->add_option("--preset", f.preset, "training preset")
      ->check(CLI::IsMember({"capivara-ft", "capivara-opt"}));
  sub->add_option("--in", f.in, "input dataset (report: run directory)");
  sub->add_option("--out", f.out, "output artifact (pipeline: run directory)");
  sub->add_option("--model", f.model, "model checkpoint to read");
  sub->add_option("--threshold", f.threshold,
                  "filter: CLIP-score threshold; select: caption score threshold");
  sub->add_option("--strategy", f.strategy, "caption selection strategy")
      ->check(CLI::IsMember({"rank", "threshold", "threshold-dedup"}));
  sub->add_option("--mode", f.mode, "training mode")
      ->check(CLI::IsMember({"full", "lit", "lit-lora", "lit_lora"}));
  sub->add_option("--batch-size", f.batch_size, "training batch size");
  sub->add_option("--steps", f.steps, "training steps");
  sub->add_option("--power-watts", f.power_watts, "assumed average power draw");
  sub->add_option("--grid-intensity", f.grid_intensity, "kg CO2-eq per kWh");
  sub->add_option("--set", f.sets, "extra override, key=value (repeatable)");
}

int fail(const std::string& stage, ct_status s) {
  std::fprintf(stderr, "error[%s] stage %s: %s\n", ct_status_name(s), stage.c_str(),
               ct_last_error());
  return 1;
}

void print_stage(const char*, const char* summary, void*) {
  std::printf("%s\n", summary);
  std::fflush(stdout);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"captune: contrastive image-text fine-tuning laboratory"};
  app.require_subcommand(1);
  Flags flags;
  const std::map<std::string, std::string> descriptions{
      {"gen-toy", "generate the synthetic toy corpus"},
      {"filter", "drop pairs whose CLIP score falls below the threshold"},
      {"augment", "append synthetic captions to train records"},
      {"translate", "translate captions into the target language"},
      {"select", "keep a subset of captions per record"},
      {"train", "fine-tune a model"},
      {"eval", "retrieval evaluation on the test split"},
      {"report", "Markdown/CSV/SVG summary of a run directory"},
      {"pipeline", "run every stage into one run directory"}};
  std::vector<std::pair<std::string, CLI::App*>> subs;
  for (const char* name : {"gen-toy", "filter", "augment", "translate", "select", "train", "eval",
                           "report", "pipeline"}) {
    CLI::App* sub = app.add_subcommand(name, descriptions.at(name));
    add_common(sub, flags);
    subs.emplace_back(name, sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "error[usage] %s\n", e.what());
    return 2;
  }

  std::string stage;
  for (const auto& [name, sub] : subs) {
    if (sub->parsed()) stage = name;
  }

  std::vector<std::pair<std::string, std::string>> overrides;
  for (const auto& kv : flags.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
      std::fprintf(stderr, "error[usage] --set expects key=value, got '%s'\n", kv.c_str());
      return 2;
    }
    overrides.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (flags.seed) overrides.emplace_back("seed", *flags.seed);
  if (flags.threshold) {
    overrides.emplace_back(stage == "select" ? "select.score_threshold" : "filter.threshold",
                           number(*flags.threshold));
  }
  if (flags.strategy) overrides.emplace_back("select.strategy", *flags.strategy);
  if (flags.mode) overrides.emplace_back("train.mode", *flags.mode);
  if (flags.batch_size) overrides.emplace_back("train.batch_size", std::to_string(*flags.batch_size));
  if (flags.steps) overrides.emplace_back("train.steps", std::to_string(*flags.steps));
  if (flags.power_watts) overrides.emplace_back("energy.power_w", number(*flags.power_watts));
  if (flags.grid_intensity) {
    overrides.emplace_back("energy.intensity", number(*flags.grid_intensity));
  }

  std::vector<const char*> keys;
  std::vector<const char*> values;
  for (const auto& [k, v] : overrides) {
    keys.push_back(k.c_str());
    values.push_back(v.c_str());
  }
  const char* env_seed = std::getenv("CAPIVARA_SEED");
  ct_config* cfg = nullptr;
  ct_status s = ct_config_resolve(flags.preset ? flags.preset->c_str() : nullptr,
                                  flags.config.empty() ? nullptr : flags.config.c_str(),
                                  keys.data(), values.data(), keys.size(), env_seed, &cfg);
  if (s != CT_OK) return fail(stage, s);

  if (stage == "pipeline") {
    if (flags.out.empty()) {
      ct_config_free(cfg);
      std::fprintf(stderr, "error[usage] pipeline needs --out RUN_DIR\n");
      return 2;
    }
    s = ct_run_pipeline(cfg, flags.out.c_str(), print_stage, nullptr);
  } else {
    char* summary = nullptr;
    s = ct_run_stage(cfg, stage.c_str(), flags.in.empty() ? nullptr : flags.in.c_str(),
                     flags.model.empty() ? nullptr : flags.model.c_str(),
                     flags.out.empty() ? nullptr : flags.out.c_str(), &summary);
    if (s == CT_OK) std::fputs(summary, stdout);
    ct_string_free(summary);
  }
  ct_config_free(cfg);
  if (s != CT_OK) {
    const std::string failed = *ct_last_stage() != '\0' ? ct_last_stage() : stage;
    const int code = fail(failed, s);
    return s == CT_ERR_USAGE ? 2 : code;
  }
  return 0;
}
