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

#include "captune/data/filter.hpp"

#include <cmath>
#include <sstream>

#include "captune/error.hpp"

namespace captune::data {

std::vector<double> clip_scores(const Dataset& ds, const model::Model& model) {
  std::vector<std::string> texts;
  std::vector<std::vector<double>> images;
  texts.reserve(ds.size());
  images.reserve(ds.size());
  for (const auto& r : ds.records()) {
    texts.push_back(r.original().text);
    images.push_back(r.image);
  }
  std::vector<double> scores(ds.size());
  if (ds.empty()) return scores;
  const auto t = model.embed_texts(texts);
  const auto v = model.embed_images(images);
  for (std::size_t i = 0; i < ds.size(); ++i) scores[i] = numcore::dot(v.row(i), t.row(i));
  return scores;
}

Dataset filter_by_scores(const Dataset& ds, std::span<const double> scores,
                         double threshold, const std::set<Split>& splits) {
  if (scores.size() != ds.size()) {
    throw ShapeError(std::to_string(scores.size()) + " scores for " +
                     std::to_string(ds.size()) + " records");
  }
  if (!std::isfinite(threshold)) throw ParameterError("filter threshold must be finite");
  std::vector<Record> kept;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const bool in_scope = splits.empty() || splits.contains(ds[i].split);
    if (!in_scope || scores[i] >= threshold) kept.push_back(ds[i]);
  }
  const std::size_t discarded = ds.size() - kept.size();
  const std::size_t n_kept = kept.size();
  Dataset out = ds.with_records(std::move(kept));
  std::ostringstream thr;
  thr << threshold;
  out.record_transform({"clip_score_filter",
                        {{"threshold", thr.str()},
                         {"kept", std::to_string(n_kept)},
                         {"discarded", std::to_string(discarded)}}});
  return out;
}

Dataset clip_score_filter(const Dataset& ds, const model::Model& model, double threshold,
                          const std::set<Split>& splits) {
  return filter_by_scores(ds, clip_scores(ds, model), threshold, splits);
}

}  // namespace captune::data
