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

#include "captune/pipeline/config.hpp"

#include <charconv>
#include <functional>
#include <set>

#include "captune/error.hpp"
#include "captune/evalkit/report.hpp"
#include "captune/util/io.hpp"

namespace captune::pipeline {

namespace {

struct Field {
  std::function<std::string(const PipelineConfig&)> get;
  std::function<void(PipelineConfig&, std::string_view)> set;
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view want) {
  throw ConfigError("config key '" + std::string(key) + "': cannot read '" + std::string(value) +
                    "' as " + std::string(want));
}

std::uint64_t to_u64(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size() || v.empty()) {
    bad_value(key, v, "a non-negative integer");
  }
  return out;
}

double to_double(std::string_view key, std::string_view v) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size() || v.empty()) bad_value(key, v, "a number");
  return out;
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, v, "a boolean");
}

std::string num(double v) { return evalkit::format_number(v); }
std::string flag(bool b) { return b ? "true" : "false"; }

#define CT_SIZE(KEY, EXPR)                                                          \
  {KEY, Field{[](const PipelineConfig& c) { return std::to_string(c.EXPR); },       \
              [](PipelineConfig& c, std::string_view v) {                           \
                c.EXPR = static_cast<decltype(c.EXPR)>(to_u64(KEY, v));             \
              }}}
#define CT_REAL(KEY, EXPR)                                                     \
  {KEY, Field{[](const PipelineConfig& c) { return num(c.EXPR); },             \
              [](PipelineConfig& c, std::string_view v) { c.EXPR = to_double(KEY, v); }}}
#define CT_BOOL(KEY, EXPR)                                                   \
  {KEY, Field{[](const PipelineConfig& c) { return flag(c.EXPR); },          \
              [](PipelineConfig& c, std::string_view v) { c.EXPR = to_bool(KEY, v); }}}
#define CT_TEXT(KEY, EXPR)                                                      \
  {KEY, Field{[](const PipelineConfig& c) { return c.EXPR; },                   \
              [](PipelineConfig& c, std::string_view v) { c.EXPR = std::string(v); }}}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) out += (out.empty() ? "" : ",") + s;
  return out;
}

std::vector<std::string> split_list(std::string_view v) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= v.size()) {
    const auto comma = v.find(',', start);
    const auto piece = trim(v.substr(start, comma == std::string_view::npos ? v.npos : comma - start));
    if (!piece.empty()) out.push_back(piece);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string targets_text(const std::vector<lora::Projection>& t) {
  std::vector<std::string> names;
  for (auto p : t) names.push_back(p == lora::Projection::kQuery ? "q" : "v");
  return join(names);
}

std::vector<lora::Projection> parse_targets(std::string_view v) {
  std::vector<lora::Projection> out;
  for (const auto& s : split_list(v)) {
    if (s == "q" || s == "query") {
      out.push_back(lora::Projection::kQuery);
    } else if (s == "v" || s == "value") {
      out.push_back(lora::Projection::kValue);
    } else {
      bad_value("lora.targets", v, "a list of q/v");
    }
  }
  if (out.empty()) bad_value("lora.targets", v, "a non-empty list of q/v");
  return out;
}

const std::map<std::string, Field, std::less<>>& registry() {
  static const std::map<std::string, Field, std::less<>> fields{
      CT_SIZE("seed", seed),
      CT_TEXT("preset", preset),
      CT_SIZE("toy.n_records", toy.n_records),
      CT_SIZE("toy.n_clusters", toy.n_clusters),
      CT_SIZE("toy.n_modifiers", toy.n_modifiers),
      CT_SIZE("toy.d_image", toy.d_image),
      CT_REAL("toy.noise_rate", toy.noise_rate),
      CT_REAL("toy.image_noise_std", toy.image_noise_std),
      CT_REAL("toy.modifier_scale", toy.modifier_scale),
      CT_REAL("toy.test_fraction", toy.test_fraction),
      CT_SIZE("model.max_tokens", encoder.max_tokens),
      CT_SIZE("model.d_model", encoder.d_model),
      CT_SIZE("model.n_layers", encoder.n_layers),
      CT_SIZE("model.mlp_ratio", encoder.mlp_ratio),
      CT_SIZE("model.d_embed", encoder.d_embed),
      CT_REAL("model.init_std", encoder.init_std),
      CT_REAL("model.init_temperature", encoder.init_temperature),
      CT_BOOL("filter.enabled", filter_enabled),
      CT_REAL("filter.threshold", filter_threshold),
      CT_BOOL("augment.enabled", augment_enabled),
      CT_SIZE("augment.k", augment_k),
      CT_REAL("augment.hallucination", hallucination_rate),
      CT_TEXT("augment.command", augment_command),
      CT_BOOL("translate.enabled", translate_enabled),
      CT_TEXT("translate.target", target_lang),
      CT_TEXT("translate.command", translate_command),
      {"translate.mode",
       Field{[](const PipelineConfig& c) {
               return std::string(c.translate_mode == data::TranslateMode::kReplace
                                      ? "replace"
                                      : "duplicate");
             },
             [](PipelineConfig& c, std::string_view v) {
               if (v == "replace") {
                 c.translate_mode = data::TranslateMode::kReplace;
               } else if (v == "duplicate") {
                 c.translate_mode = data::TranslateMode::kDuplicate;
               } else {
                 bad_value("translate.mode", v, "replace or duplicate");
               }
             }}},
      CT_BOOL("select.enabled", select_enabled),
      {"select.strategy",
       Field{[](const PipelineConfig& c) { return std::string(select::strategy_name(c.select.strategy)); },
             [](PipelineConfig& c, std::string_view v) { c.select.strategy = select::parse_strategy(v); }}},
      CT_SIZE("select.k", select.k),
      CT_REAL("select.score_threshold", select.score_threshold),
      CT_REAL("select.dedup_threshold", select.dedup_threshold),
      CT_SIZE("select.k_min", select.k_min),
      CT_BOOL("select.strict", select.strict),
      CT_SIZE("pretrain.steps", pretrain_steps),
      CT_SIZE("pretrain.batch_size", pretrain_batch_size),
      CT_REAL("pretrain.max_lr", pretrain_max_lr),
      CT_REAL("pretrain.min_lr", pretrain_min_lr),
      {"train.mode",
       Field{[](const PipelineConfig& c) { return std::string(model::train_mode_name(c.train.mode)); },
             [](PipelineConfig& c, std::string_view v) { c.train.mode = model::parse_train_mode(v); }}},
      CT_SIZE("train.batch_size", train.batch_size),
      CT_SIZE("train.steps", train.total_steps),
      CT_REAL("train.max_lr", train.max_lr),
      CT_REAL("train.min_lr", train.min_lr),
      CT_REAL("train.warmup_fraction", train.warmup_fraction),
      CT_REAL("train.weight_decay", train.weight_decay),
      CT_REAL("train.adam_eps", train.adam_eps),
      CT_REAL("train.beta1", train.beta1),
      CT_REAL("train.beta2", train.beta2),
      CT_BOOL("train.decoupled_weight_decay", train.decoupled_weight_decay),
      CT_BOOL("train.checkpointing", train.gradient_checkpointing),
      {"train.segment_size",
       Field{[](const PipelineConfig& c) {
               return c.train.segment_size ? std::to_string(*c.train.segment_size) : std::string("auto");
             },
             [](PipelineConfig& c, std::string_view v) {
               if (v == "auto") {
                 c.train.segment_size.reset();
               } else {
                 c.train.segment_size = static_cast<long long>(to_u64("train.segment_size", v));
               }
             }}},
      {"train.loss_direction",
       Field{[](const PipelineConfig& c) { return std::string(loss::direction_name(c.train.loss.direction)); },
             [](PipelineConfig& c, std::string_view v) { c.train.loss.direction = loss::parse_direction(v); }}},
      {"train.loss_reduction",
       Field{[](const PipelineConfig& c) { return std::string(loss::reduction_name(c.train.loss.reduction)); },
             [](PipelineConfig& c, std::string_view v) { c.train.loss.reduction = loss::parse_reduction(v); }}},
      CT_REAL("train.image_jitter", train.loss.image_jitter_std),
      CT_SIZE("lora.rank", train.lora.rank),
      CT_REAL("lora.alpha", train.lora.alpha),
      CT_REAL("lora.dropout", train.lora.dropout),
      {"lora.targets",
       Field{[](const PipelineConfig& c) { return targets_text(c.train.lora.targets); },
             [](PipelineConfig& c, std::string_view v) { c.train.lora.targets = parse_targets(v); }}},
      CT_REAL("energy.power_w", power_w),
      CT_REAL("energy.intensity", intensity),
  };
  return fields;
}

#undef CT_SIZE
#undef CT_REAL
#undef CT_BOOL
#undef CT_TEXT

const Field& field(std::string_view key) {
  const auto& r = registry();
  auto it = r.find(key);
  if (it == r.end()) throw ConfigError("unknown config key '" + std::string(key) + "'");
  return it->second;
}

}  // namespace

PipelineConfig::PipelineConfig() {
  encoder.max_tokens = 16;
  encoder.d_model = 32;
  encoder.n_layers = 2;
  encoder.mlp_ratio = 2;
  encoder.d_embed = 16;
  encoder.d_image = toy.d_image;
  train.total_steps = 100;
  train.batch_size = 32;
  train.max_lr = 3e-3;
  train.min_lr = 3e-4;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, _] : registry()) keys.push_back(k);
  return keys;
}

void set_value(PipelineConfig& cfg, std::string_view key, std::string_view value) {
  field(key).set(cfg, trim(value));
  // The image tower reads the features the toy world produces.
  cfg.encoder.d_image = cfg.toy.d_image;
}

std::string get_value(const PipelineConfig& cfg, std::string_view key) {
  return field(key).get(cfg);
}

void apply_preset(PipelineConfig& cfg, std::string_view name) {
  const trainer::TrainConfig p = trainer::preset(name);
  trainer::TrainConfig& t = cfg.train;
  t.mode = p.mode;
  t.batch_size = p.batch_size;
  t.total_steps = p.total_steps;
  t.max_lr = p.max_lr;
  t.min_lr = p.min_lr;
  t.weight_decay = p.weight_decay;
  t.adam_eps = p.adam_eps;
  t.beta1 = p.beta1;
  t.beta2 = p.beta2;
  t.gradient_checkpointing = p.gradient_checkpointing;
  t.lora = p.lora;
  cfg.preset = std::string(name);
}

std::string canonical_text(const PipelineConfig& cfg) {
  std::string out;
  for (const auto& [k, f] : registry()) out += k + " = " + f.get(cfg) + "\n";
  return out;
}

std::string config_hash(const PipelineConfig& cfg) {
  return util::sha256_hex(canonical_text(cfg));
}

std::vector<std::pair<std::string, std::string>> parse_config_text(std::string_view text,
                                                                   std::string_view label) {
  std::vector<std::pair<std::string, std::string>> out;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto eol = text.find('\n', pos);
    std::string_view line = text.substr(pos, eol == std::string_view::npos ? text.npos : eol - pos);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const std::string body = trim(line);
    if (!body.empty()) {
      const auto eq = body.find('=');
      if (eq == std::string::npos) {
        throw ParseError(std::string(label) + ": expected 'key = value'", line_no);
      }
      std::string key = trim(std::string_view(body).substr(0, eq));
      std::string value = trim(std::string_view(body).substr(eq + 1));
      if (key.empty()) throw ParseError(std::string(label) + ": empty key", line_no);
      if (!seen.insert(key).second) {
        throw ParseError(std::string(label) + ": key '" + key + "' repeated", line_no);
      }
      out.emplace_back(std::move(key), std::move(value));
    }
    if (eol == std::string_view::npos) break;
    pos = eol + 1;
  }
  return out;
}

PipelineConfig resolve(const ConfigSources& sources) {
  std::vector<std::pair<std::string, std::string>> file_entries;
  if (sources.config_file) {
    file_entries = parse_config_text(util::read_file(*sources.config_file), *sources.config_file);
    for (const auto& [k, _] : file_entries) field(k);
  }
  PipelineConfig cfg;
  std::optional<std::string> preset = sources.preset;
  if (!preset) {
    for (const auto& [k, v] : file_entries) {
      if (k == "preset" && !v.empty()) preset = v;
    }
  }
  if (preset) apply_preset(cfg, *preset);

  bool seed_set = false;
  for (const auto& [k, v] : file_entries) {
    if (k == "preset") continue;
    set_value(cfg, k, v);
    seed_set = seed_set || k == "seed";
  }
  for (const auto& [k, v] : sources.overrides) {
    if (k == "preset") {
      apply_preset(cfg, v);
      continue;
    }
    set_value(cfg, k, v);
    seed_set = seed_set || k == "seed";
  }
  if (!seed_set && sources.env_seed && !sources.env_seed->empty()) {
    cfg.seed = to_u64("CAPIVARA_SEED", trim(*sources.env_seed));
  }
  validate(cfg);
  return cfg;
}

void validate(const PipelineConfig& cfg) {
  cfg.toy.validate();
  model::EncoderConfig enc = cfg.encoder;
  enc.vocab_size = 1;
  enc.validate();
  if (!(cfg.filter_threshold >= -1.0 && cfg.filter_threshold <= 1.0)) {
    throw ConfigError("filter.threshold must be in [-1, 1]");
  }
  if (!(cfg.hallucination_rate >= 0.0 && cfg.hallucination_rate <= 1.0)) {
    throw ConfigError("augment.hallucination must be in [0, 1]");
  }
  if (cfg.target_lang.empty()) throw ConfigError("translate.target must not be empty");
  cfg.select.validate();
  cfg.train.validate();
  if (cfg.pretrain_batch_size == 0) throw ConfigError("pretrain.batch_size must be positive");
  if (!(cfg.pretrain_min_lr > 0.0 && cfg.pretrain_min_lr <= cfg.pretrain_max_lr)) {
    throw ConfigError("pretrain learning rates must satisfy 0 < min <= max");
  }
  if (!(cfg.power_w >= 0.0) || !(cfg.intensity >= 0.0)) {
    throw ConfigError("energy.power_w and energy.intensity must be non-negative");
  }
}

}  // namespace captune::pipeline
