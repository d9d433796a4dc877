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
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "captune/checkpoint/grad_checkpoint.hpp"
#include "captune/data/dataset.hpp"
#include "captune/lora/lora.hpp"
#include "captune/loss/loss.hpp"
#include "captune/model/model.hpp"

namespace captune::trainer {

using numcore::Tensor;

struct TrainConfig {
  model::TrainMode mode = model::TrainMode::kLit;
  std::size_t batch_size = 32;
  std::size_t total_steps = 100;
  double max_lr = 1e-3;
  double min_lr = 1e-4;
  double warmup_fraction = 0.1;
  double weight_decay = 0.2;
  double adam_eps = 1e-8;
  double beta1 = 0.9;
  double beta2 = 0.98;
  /// AdamW-style decay; false folds wd * theta into the gradient instead.
  bool decoupled_weight_decay = true;
  std::uint64_t seed = 0;
  bool gradient_checkpointing = true;
  /// Layers per checkpoint segment; ceil(sqrt(n_layers)) when unset.
  std::optional<long long> segment_size;
  loss::LossConfig loss;
  lora::LoraConfig lora;
  std::string preset;

  /// Throws ConfigError on violated invariants.
  void validate() const;
  std::size_t warmup_steps() const;
};

/// Named presets "capivara-ft" and "capivara-opt".
TrainConfig preset(std::string_view name);
std::vector<std::string> preset_names();

/// Linear warmup from min_lr to max_lr over warmup_steps(), then cosine decay
/// back to min_lr at total_steps. Throws ContractError outside [0, total].
double lr_at(std::size_t step, const TrainConfig& config);

struct ParamHandle {
  std::string name;
  Tensor* tensor = nullptr;
};

/// Tensors updated under `mode`, in canonical order. Throws ConfigError when
/// the mode and adapter presence disagree.
std::vector<ParamHandle> trainable_set(model::DualEncoderParams& params,
                                       lora::AdapterSet* adapters, model::TrainMode mode);

/// Names exempt from weight decay (scalars such as the temperature).
bool decays(const ParamHandle& handle);

struct AdamState {
  std::map<std::string, Tensor> m;
  std::map<std::string, Tensor> v;
  std::size_t step = 0;

  std::size_t scalar_count() const;
};

/// One bias-corrected Adam update of every handle. All gradients are checked
/// before anything changes; a non-finite entry throws NumericError. A handle
/// named log_temperature is clamped to the temperature bounds afterwards.
void adam_step(std::span<const ParamHandle> handles, const numcore::Gradients& grads,
               AdamState& state, double lr, const TrainConfig& config);

struct EnergyReport {
  double elapsed_s = 0.0;
  double power_w = 0.0;
  double energy_kwh = 0.0;
  double intensity = 0.0;  // kg CO2-eq per kWh
  double emissions_kg = 0.0;
};

/// energy = W * s / 3.6e6 kWh, emissions = energy * intensity. Throws
/// ParameterError for negative inputs.
EnergyReport energy_report(double elapsed_s, double power_w, double intensity);
/// kg CO2-eq for a known energy figure.
double emissions_for(double energy_kwh, double intensity);
/// Key-value text; measured fields carry the "measured." prefix.
std::string energy_text(const EnergyReport& report);

struct StepLog {
  std::size_t step = 0;
  double loss = 0.0;
  double lr = 0.0;
  std::size_t peak_activations = 0;
  std::size_t recomputes = 0;
};

struct TrainLog {
  std::vector<StepLog> steps;

  /// Columns: step,loss,lr,peak_activations,recomputes; `comments` become
  /// leading "# " lines.
  std::string to_csv(const std::vector<std::string>& comments = {}) const;
};

struct StepGradients {
  double loss = 0.0;
  numcore::Gradients grads;
  checkpoint::ActivationLedger ledger;
};

/// Loss and gradients of one batch. With checkpointing the text tower is run
/// through the segment plan; otherwise the whole forward lives on one tape.
/// `dropout_seed` drives LoRA dropout masks, one stream per layer.
StepGradients compute_step(std::span<const loss::Example> batch, const model::Model& model,
                           const TrainConfig& config, std::uint64_t dropout_seed = 0,
                           numcore::Rng* jitter_rng = nullptr);

struct TrainOptions {
  double power_w = 100.0;
  double intensity = 0.1;
  /// Called after every step; may be empty.
  std::function<void(const StepLog&)> on_step;
};

struct TrainResult {
  TrainLog log;
  EnergyReport energy;
  std::size_t optimizer_state_scalars = 0;
  std::size_t trainable_scalars = 0;
};

/// Trains `model` in place on the train split of `ds`. Batches are drawn
/// epoch by epoch from a seeded shuffle (a single short batch when the split
/// is smaller than the batch size), one caption per record is sampled
/// uniformly, and each step applies Adam at lr_at(step).
TrainResult train(const TrainConfig& config, const data::Dataset& ds, model::Model& model,
                  const TrainOptions& options = {});

}  // namespace captune::trainer
