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

#include <set>
#include <span>
#include <vector>

#include "captune/data/dataset.hpp"
#include "captune/model/model.hpp"

namespace captune::data {

inline constexpr double kDefaultFilterThreshold = 0.20;

/// Cosine between each record's image embedding and its original caption's
/// text embedding, in record order.
std::vector<double> clip_scores(const Dataset& ds, const model::Model& model);

/// Keeps record i iff scores[i] >= threshold; only scores strictly below the
/// threshold are discarded. Records outside `splits` (when non-empty) are
/// always kept.
Dataset filter_by_scores(const Dataset& ds, std::span<const double> scores,
                         double threshold = kDefaultFilterThreshold,
                         const std::set<Split>& splits = {});

Dataset clip_score_filter(const Dataset& ds, const model::Model& model,
                          double threshold = kDefaultFilterThreshold,
                          const std::set<Split>& splits = {});

}  // namespace captune::data
