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

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "captune/error.hpp"
#include "captune/model/model_io.hpp"
#include "captune/pipeline/config.hpp"

namespace captune::pipeline {

namespace fs = std::filesystem;

/// A failure inside a named stage; keeps the category of the cause.
class StageError : public Error {
 public:
  StageError(std::string stage, ErrorKind kind, const std::string& what)
      : Error(kind, what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

struct StageResult {
  std::string stage;
  std::string summary;  // one line
  std::vector<fs::path> artifacts;
};

/// Stage-specific stream seed derived from the global seed.
std::uint64_t stage_seed(const PipelineConfig& cfg, std::string_view purpose);

/// config_hash and seed, as written into every artifact.
model::Lineage lineage_of(const PipelineConfig& cfg);

StageResult run_gen_toy(const PipelineConfig& cfg, const fs::path& out);
StageResult run_filter(const PipelineConfig& cfg, const fs::path& in, const fs::path& model,
                       const fs::path& out);
StageResult run_augment(const PipelineConfig& cfg, const fs::path& in, const fs::path& out);
StageResult run_translate(const PipelineConfig& cfg, const fs::path& in, const fs::path& out);
/// Also writes "<out stem>.selection.csv".
StageResult run_select(const PipelineConfig& cfg, const fs::path& in, const fs::path& model,
                       const fs::path& out);
/// Starts from `model_in` when given, else from a fresh model whose
/// vocabulary covers the train split. Next to `out` it writes
/// "<stem>.log.csv", "<stem>.energy.txt" and "<stem>.params.txt".
StageResult run_train(const PipelineConfig& cfg, const fs::path& in,
                      const std::optional<fs::path>& model_in, const fs::path& out);
/// Retrieval on the test split, written as CSV rows labelled `run_label`.
StageResult run_eval(const PipelineConfig& cfg, const fs::path& in, const fs::path& model,
                     const fs::path& out, const std::string& run_label = "trained");
/// Reads eval.csv (required) plus eval_baseline.csv, final.energy.txt and
/// final.params.txt when present; writes report.md, report.csv, report.svg.
/// Throws IoError listing missing inputs, IntegrityError on lineage mismatch.
StageResult run_report(const fs::path& run_dir);

/// gen-toy, scorer pretraining, filter, augment, translate, select, baseline
/// eval, train, eval and report, all inside `run_dir`.
std::vector<StageResult> run_pipeline(
    const PipelineConfig& cfg, const fs::path& run_dir,
    const std::function<void(const StageResult&)>& on_stage = {});

/// Stage names accepted by the CLI.
const std::vector<std::string>& stage_names();

}  // namespace captune::pipeline
