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

#include "captune/trainer/trainer.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <sstream>

#include "captune/error.hpp"
#include "captune/evalkit/report.hpp"

namespace captune::trainer {

namespace {

using checkpoint::Layer;
using model::Binder;
using numcore::NodeId;
using numcore::Tape;

std::string fmt(double v) { return evalkit::format_number(v); }

Binder make_binder(Tape& tape, model::TrainMode mode, const lora::AdapterSet* adapters) {
  return Binder(tape, [mode, adapters](std::string_view name) {
    return model::is_trainable(name, mode, adapters);
  });
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch size must be at least 1");
  if (!(min_lr > 0.0) || !(min_lr <= max_lr) || !std::isfinite(max_lr)) {
    throw ConfigError("learning rates must satisfy 0 < min_lr <= max_lr");
  }
  if (!(warmup_fraction >= 0.0 && warmup_fraction <= 1.0)) {
    throw ConfigError("warmup fraction must be in [0, 1]");
  }
  if (!(weight_decay >= 0.0)) throw ConfigError("weight decay must be non-negative");
  if (!(adam_eps > 0.0)) throw ConfigError("Adam epsilon must be positive");
  if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in (0, 1)");
  }
  if (segment_size && *segment_size <= 0) {
    throw ConfigError("checkpoint segment size must be positive");
  }
  if (!(loss.image_jitter_std >= 0.0)) throw ConfigError("image jitter must be non-negative");
  if (!(lora.dropout >= 0.0 && lora.dropout < 1.0)) {
    throw ConfigError("LoRA dropout must be in [0, 1)");
  }
}

std::size_t TrainConfig::warmup_steps() const {
  return static_cast<std::size_t>(std::floor(warmup_fraction * static_cast<double>(total_steps)));
}

TrainConfig preset(std::string_view name) {
  TrainConfig c;
  c.preset = std::string(name);
  c.weight_decay = 0.2;
  c.adam_eps = 1e-8;
  c.beta1 = 0.9;
  c.beta2 = 0.98;
  if (name == "capivara-ft") {
    c.mode = model::TrainMode::kLit;
    c.batch_size = 2816;
    c.total_steps = 5863;
    c.max_lr = 5e-7;
    c.min_lr = 1e-7;
    c.gradient_checkpointing = false;
  } else if (name == "capivara-opt") {
    c.mode = model::TrainMode::kLitLora;
    c.batch_size = 1000;
    c.total_steps = 1500;
    c.max_lr = 1e-5;
    c.min_lr = 1e-6;
    c.gradient_checkpointing = true;
    c.lora = lora::LoraConfig{};
  } else {
    throw ConfigError("unknown preset '" + std::string(name) +
                      "' (expected capivara-ft or capivara-opt)");
  }
  return c;
}

std::vector<std::string> preset_names() { return {"capivara-ft", "capivara-opt"}; }

double lr_at(std::size_t step, const TrainConfig& config) {
  if (step > config.total_steps) {
    throw ContractError("lr_at: step " + std::to_string(step) + " beyond total " +
                        std::to_string(config.total_steps));
  }
  const double lo = config.min_lr;
  const double hi = config.max_lr;
  const std::size_t warm = config.warmup_steps();
  if (step < warm) {
    return lo + (hi - lo) * static_cast<double>(step) / static_cast<double>(warm);
  }
  const std::size_t decay = config.total_steps - warm;
  if (decay == 0) return hi;
  const double progress = static_cast<double>(step - warm) / static_cast<double>(decay);
  return lo + (hi - lo) * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

std::vector<ParamHandle> trainable_set(model::DualEncoderParams& params,
                                       lora::AdapterSet* adapters, model::TrainMode mode) {
  model::check_mode(mode, adapters);
  std::vector<ParamHandle> out;
  auto visit = [&](const std::string& name, Tensor& t) {
    if (model::is_trainable(name, mode, adapters)) out.push_back({name, &t});
  };
  params.for_each(visit);
  if (adapters != nullptr) adapters->for_each(visit);
  return out;
}

bool decays(const ParamHandle& handle) {
  return handle.tensor->rows() > 1 || handle.tensor->cols() > 1;
}

std::size_t AdamState::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [_, t] : m) n += t.size();
  for (const auto& [_, t] : v) n += t.size();
  return n;
}

void adam_step(std::span<const ParamHandle> handles, const numcore::Gradients& grads,
               AdamState& state, double lr, const TrainConfig& config) {
  for (const auto& h : handles) {
    if (!grads.has_param(h.name)) {
      throw InternalError("no gradient for trainable tensor '" + h.name + "'");
    }
    const Tensor& g = grads.param(h.name);
    if (g.shape() != h.tensor->shape()) {
      throw ShapeError("gradient of '" + h.name + "' has shape " +
                       numcore::shape_string(g.shape()) + ", tensor has " +
                       numcore::shape_string(h.tensor->shape()));
    }
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!std::isfinite(g[i])) {
        throw NumericError("non-finite gradient in '" + h.name + "' at index " +
                           std::to_string(i) + " (step " + std::to_string(state.step) + ")");
      }
    }
  }
  const std::size_t t = state.step + 1;
  const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(t));
  for (const auto& h : handles) {
    Tensor& theta = *h.tensor;
    const Tensor& g = grads.param(h.name);
    auto [mit, m_new] = state.m.try_emplace(h.name, theta.shape());
    auto [vit, v_new] = state.v.try_emplace(h.name, theta.shape());
    Tensor& m = mit->second;
    Tensor& v = vit->second;
    const bool decay = config.weight_decay > 0.0 && decays(h);
    for (std::size_t i = 0; i < theta.size(); ++i) {
      double gi = g[i];
      if (decay && !config.decoupled_weight_decay) gi += config.weight_decay * theta[i];
      m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * gi;
      v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * gi * gi;
      if (decay && config.decoupled_weight_decay) {
        theta[i] -= lr * config.weight_decay * theta[i];
      }
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      theta[i] -= lr * mhat / (std::sqrt(vhat) + config.adam_eps);
    }
    if (h.name == model::kLogTemperature) {
      theta[0] = std::clamp(theta[0], std::log(model::kMinTemperature),
                            std::log(model::kMaxTemperature));
    }
  }
  state.step = t;
}

EnergyReport energy_report(double elapsed_s, double power_w, double intensity) {
  if (!(elapsed_s >= 0.0) || !(power_w >= 0.0) || !(intensity >= 0.0)) {
    throw ParameterError("energy inputs must be non-negative and finite");
  }
  EnergyReport r;
  r.elapsed_s = elapsed_s;
  r.power_w = power_w;
  r.intensity = intensity;
  const double joules = power_w * elapsed_s;
  r.energy_kwh = joules / 3.6e6;
  r.emissions_kg = joules * intensity / 3.6e6;
  return r;
}

double emissions_for(double energy_kwh, double intensity) {
  if (!(energy_kwh >= 0.0) || !(intensity >= 0.0)) {
    throw ParameterError("energy inputs must be non-negative and finite");
  }
  return energy_kwh * intensity;
}

std::string energy_text(const EnergyReport& r) {
  std::string out;
  out += "power_w=" + fmt(r.power_w) + "\n";
  out += "intensity_kg_per_kwh=" + fmt(r.intensity) + "\n";
  out += "measured.elapsed_s=" + fmt(r.elapsed_s) + "\n";
  out += "measured.energy_kwh=" + fmt(r.energy_kwh) + "\n";
  out += "measured.emissions_kg=" + fmt(r.emissions_kg) + "\n";
  return out;
}

std::string TrainLog::to_csv(const std::vector<std::string>& comments) const {
  std::string out;
  for (const auto& c : comments) out += "# " + c + "\n";
  out += "step,loss,lr,peak_activations,recomputes\n";
  for (const auto& s : steps) {
    out += std::to_string(s.step) + "," + fmt(s.loss) + "," + fmt(s.lr) + "," +
           std::to_string(s.peak_activations) + "," + std::to_string(s.recomputes) + "\n";
  }
  return out;
}

StepGradients compute_step(std::span<const loss::Example> batch, const model::Model& model,
                           const TrainConfig& config, std::uint64_t dropout_seed,
                           numcore::Rng* jitter_rng) {
  const auto& params = model.params;
  const lora::AdapterSet* adapters = model.adapter_ptr();
  const model::TrainMode mode = config.mode;
  model::check_mode(mode, adapters);

  std::vector<model::TokenSequence> texts;
  texts.reserve(batch.size());
  for (const auto& ex : batch) texts.push_back(ex.text);
  const model::PackedText packed = model::pack_sequences(texts, params.config);
  const Tensor images = loss::stack_images(batch, config.loss, jitter_rng);
  const std::size_t n_layers = params.blocks.size();
  const bool dropout = adapters != nullptr && config.lora.dropout > 0.0;
  const numcore::Rng dropout_base(dropout_seed);

  StepGradients out;
  if (!config.gradient_checkpointing) {
    Tape tape;
    Binder bind = make_binder(tape, mode, adapters);
    NodeId x = model::embed_text(bind, params, packed);
    for (std::size_t l = 0; l < n_layers; ++l) {
      numcore::Rng rng = dropout_base.derive("lora-dropout", l);
      out.ledger.store();
      x = model::text_block(bind, params, adapters, l, x, packed.lengths,
                            {dropout ? &rng : nullptr});
    }
    NodeId txt = model::text_head(bind, params, x, packed.lengths);
    NodeId img = model::encode_image_batch(bind, params, tape.constant_ref(images));
    NodeId loss = loss::info_nce(tape, img, txt,
                                 bind(model::kLogTemperature, params.log_temperature), config.loss);
    out.loss = tape.value(loss)[0];
    out.grads = tape.backward(loss);
    out.ledger.release(n_layers);
    return out;
  }

  // Embedding tape -> checkpointed blocks -> head tape, stitched by seeds.
  Tape embed_tape;
  Binder embed_bind = make_binder(embed_tape, mode, adapters);
  NodeId x0 = model::embed_text(embed_bind, params, packed);

  std::vector<Layer> layers;
  layers.reserve(n_layers);
  for (std::size_t l = 0; l < n_layers; ++l) {
    layers.push_back([&, l](Tape& tape, NodeId in) {
      Binder bind = make_binder(tape, mode, adapters);
      numcore::Rng rng = dropout_base.derive("lora-dropout", l);
      return model::text_block(bind, params, adapters, l, in, packed.lengths,
                               {dropout ? &rng : nullptr});
    });
  }
  const checkpoint::CheckpointPlan plan = checkpoint::plan(n_layers, config.segment_size);
  const checkpoint::CheckpointState state =
      checkpoint::forward_checkpointed(embed_tape.value(x0), layers, plan, out.ledger);

  Tape head_tape;
  Binder head_bind = make_binder(head_tape, mode, adapters);
  NodeId top = head_tape.input(state.output);
  NodeId txt = model::text_head(head_bind, params, top, packed.lengths);
  NodeId img = model::encode_image_batch(head_bind, params, head_tape.constant_ref(images));
  NodeId loss = loss::info_nce(head_tape, img, txt,
                               head_bind(model::kLogTemperature, params.log_temperature),
                               config.loss);
  out.loss = head_tape.value(loss)[0];
  numcore::Gradients head = head_tape.backward(loss);

  checkpoint::LayerGradients blocks =
      checkpoint::backward_checkpointed(state, layers, plan, head.input(top), out.ledger);
  numcore::Gradients embed = embed_tape.backward_from(x0, blocks.input);

  head.inputs.clear();
  out.grads = std::move(head);
  out.grads.accumulate(blocks.params);
  out.grads.accumulate(embed);
  return out;
}

TrainResult train(const TrainConfig& config, const data::Dataset& ds, model::Model& model,
                  const TrainOptions& options) {
  config.validate();
  lora::AdapterSet* adapters = model.adapters ? &*model.adapters : nullptr;
  if (adapters != nullptr) adapters->validate_against(model.params);
  const std::vector<ParamHandle> handles = trainable_set(model.params, adapters, config.mode);

  TrainResult result;
  for (const auto& h : handles) result.trainable_scalars += h.tensor->size();
  const auto start = std::chrono::steady_clock::now();

  AdamState state;
  if (config.total_steps > 0) {
    const std::vector<std::size_t> pool = ds.indices(data::Split::kTrain);
    if (pool.empty()) throw DataError("training split is empty");
    const numcore::Rng root(config.seed);
    const bool full_batches = pool.size() >= config.batch_size;

    std::vector<std::vector<std::size_t>> batches;
    std::size_t cursor = 0;
    std::uint64_t epoch = 0;
    for (std::size_t step = 0; step < config.total_steps; ++step) {
      if (cursor == batches.size()) {
        batches = data::make_batches(pool, config.batch_size, config.seed, epoch++, full_batches);
        cursor = 0;
      }
      const std::vector<std::size_t>& batch = batches[cursor++];

      numcore::Rng caption_rng = root.derive("caption", step);
      std::vector<loss::Example> examples;
      examples.reserve(batch.size());
      for (std::size_t idx : batch) {
        const data::Record& r = ds[idx];
        const data::Caption& c = data::sample_caption(r, caption_rng);
        examples.push_back({Tensor::vector(r.image), model.tokenize(c.text)});
      }
      numcore::Rng jitter_rng = root.derive("jitter", step);
      const std::uint64_t dropout_seed = numcore::mix_seed(config.seed, "dropout", step);

      StepGradients sg;
      try {
        sg = compute_step(examples, model, config, dropout_seed, &jitter_rng);
        if (!std::isfinite(sg.loss)) throw NumericError("non-finite loss");
        const double lr = lr_at(step, config);
        adam_step(handles, sg.grads, state, lr, config);
        StepLog log{step, sg.loss, lr, sg.ledger.peak, sg.ledger.recomputes};
        result.log.steps.push_back(log);
        if (options.on_step) options.on_step(log);
      } catch (const Error& e) {
        if (e.kind() == ErrorKind::kNumeric) {
          throw NumericError("training step " + std::to_string(step) + ": " + e.what());
        }
        throw;
      }
    }
  }
  model.params.clamp_temperature();
  result.optimizer_state_scalars = state.scalar_count();
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  result.energy = energy_report(elapsed, options.power_w, options.intensity);
  return result;
}

}  // namespace captune::trainer
