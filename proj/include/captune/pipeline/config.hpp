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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "captune/data/toy_corpus.hpp"
#include "captune/data/translate.hpp"
#include "captune/model/params.hpp"
#include "captune/select/select.hpp"
#include "captune/trainer/trainer.hpp"

namespace captune::pipeline {

/// Every knob of every stage. Paths are deliberately absent: they name where
/// artifacts go, not how they are produced, so they never enter the hash.
struct PipelineConfig {
  std::uint64_t seed = 0;
  std::string preset;

  data::ToyCorpusSpec toy;
  model::EncoderConfig encoder;

  bool filter_enabled = true;
  double filter_threshold = 0.20;

  bool augment_enabled = true;
  std::size_t augment_k = 10;
  double hallucination_rate = 0.1;
  std::string augment_command;

  bool translate_enabled = true;
  std::string target_lang = "pt";
  data::TranslateMode translate_mode = data::TranslateMode::kReplace;
  std::string translate_command;

  bool select_enabled = true;
  select::SelectConfig select;

  // The "pretrained" scorer used for filtering, selection and the baseline.
  std::size_t pretrain_steps = 200;
  std::size_t pretrain_batch_size = 64;
  double pretrain_max_lr = 3e-3;
  double pretrain_min_lr = 3e-4;

  trainer::TrainConfig train;

  double power_w = 100.0;
  double intensity = 0.1;

  PipelineConfig();
};

/// Sorted list of recognised keys.
std::vector<std::string> config_keys();

/// Throws ConfigError for unknown keys or unparsable values.
void set_value(PipelineConfig& cfg, std::string_view key, std::string_view value);
std::string get_value(const PipelineConfig& cfg, std::string_view key);

/// Overwrites the preset-controlled training keys and records the name.
void apply_preset(PipelineConfig& cfg, std::string_view name);

/// "key = value" lines in key order.
std::string canonical_text(const PipelineConfig& cfg);
/// SHA-256 of canonical_text.
std::string config_hash(const PipelineConfig& cfg);

/// Parses "key = value" lines; '#' starts a comment. Throws ParseError with the
/// line number on malformed lines or repeated keys.
std::vector<std::pair<std::string, std::string>> parse_config_text(std::string_view text,
                                                                   std::string_view label);

struct ConfigSources {
  std::optional<std::string> preset;       // --preset
  std::optional<std::string> config_file;  // --config
  std::vector<std::pair<std::string, std::string>> overrides;  // flags
  std::optional<std::string> env_seed;     // CAPIVARA_SEED
};

/// Defaults < preset < config file < flags. The preset comes from the flag
/// when given, else from a "preset" key in the file. The environment seed is
/// used only when neither the file nor the flags set one.
PipelineConfig resolve(const ConfigSources& sources);

/// Runs validate() of every nested config.
void validate(const PipelineConfig& cfg);

}  // namespace captune::pipeline
