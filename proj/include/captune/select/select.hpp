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

#include <cstddef>
#include <string_view>
#include <vector>

#include "captune/data/dataset.hpp"
#include "captune/model/model.hpp"
#include "captune/numcore/tensor.hpp"

namespace captune::select {

using numcore::Tensor;

enum class Strategy { kRank, kThreshold, kThresholdDedup };

std::string_view strategy_name(Strategy s) noexcept;
/// Accepts "rank", "threshold", "threshold-dedup" and "threshold_dedup".
Strategy parse_strategy(std::string_view text);

struct SelectConfig {
  Strategy strategy = Strategy::kThresholdDedup;
  std::size_t k = 5;
  double score_threshold = 0.15;
  double dedup_threshold = 0.3;
  std::size_t k_min = 3;
  /// When false, an empty dedup result falls back to the k_min best-scoring
  /// captions instead of emptying the record.
  bool strict = false;

  void validate() const;
};

// Index-level cores. Scores are image-text cosines in caption order.

/// Top-k by score, descending, ties in list order.
std::vector<std::size_t> rank_indices(const std::vector<double>& scores, std::size_t k);
/// Indices with score >= thr, ascending; the single best index when none pass.
std::vector<std::size_t> threshold_indices(const std::vector<double>& scores, double thr);
/// Greedy near-duplicate removal over a text-text cosine matrix. Survivors
/// in ascending order; may be empty.
std::vector<std::size_t> near_dup_indices(const Tensor& similarity, std::size_t k_min,
                                          double thr);

// Record-level operations.

/// Image-text cosines of every caption of the record.
std::vector<double> caption_scores(const data::Record& record, const model::Model& model);

data::Record rank_select(const data::Record& record, const model::Model& model,
                         std::size_t k);
data::Record threshold_select(const data::Record& record, const model::Model& model,
                              double thr = 0.15);
/// Captions kept by near-duplicate removal on their text embeddings.
std::vector<data::Caption> near_dup_removal(const std::vector<data::Caption>& captions,
                                            const model::Model& model,
                                            std::size_t k_min = 3, double thr = 0.3);

struct SelectionStats {
  std::size_t records = 0;
  std::size_t captions_before = 0;
  std::size_t captions_after = 0;
  std::size_t fallbacks = 0;
};

struct SelectionResult {
  data::Dataset dataset;
  SelectionStats stats;
};

/// Applies the configured strategy to every record in `splits` (all when
/// empty).
SelectionResult select_captions(const data::Dataset& ds, const model::Model& model,
                                const SelectConfig& config,
                                const std::vector<data::Split>& splits = {});

}  // namespace captune::select
