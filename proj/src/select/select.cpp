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

#include "captune/select/select.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "captune/error.hpp"

namespace captune::select {

namespace {

std::vector<data::Caption> pick(const std::vector<data::Caption>& captions,
                                const std::vector<std::size_t>& idx) {
  std::vector<data::Caption> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(captions[i]);
  return out;
}

Tensor text_similarity(const std::vector<data::Caption>& captions, const model::Model& model) {
  std::vector<std::string> texts;
  texts.reserve(captions.size());
  for (const auto& c : captions) texts.push_back(c.text);
  const Tensor e = model.embed_texts(texts);
  return numcore::matmul_nt(e, e);
}

}  // namespace

std::string_view strategy_name(Strategy s) noexcept {
  switch (s) {
    case Strategy::kRank: return "rank";
    case Strategy::kThreshold: return "threshold";
    case Strategy::kThresholdDedup: return "threshold-dedup";
  }
  return "rank";
}

Strategy parse_strategy(std::string_view text) {
  if (text == "rank") return Strategy::kRank;
  if (text == "threshold") return Strategy::kThreshold;
  if (text == "threshold-dedup" || text == "threshold_dedup") return Strategy::kThresholdDedup;
  throw ConfigError("unknown selection strategy '" + std::string(text) + "'");
}

void SelectConfig::validate() const {
  if (k < 1) throw ConfigError("selection k must be at least 1");
  if (k_min < 1) throw ConfigError("selection k_min must be at least 1");
  auto in_range = [](double x) { return x >= -1.0 && x <= 1.0; };
  if (!in_range(score_threshold)) throw ConfigError("score threshold must be in [-1, 1]");
  if (!in_range(dedup_threshold)) throw ConfigError("dedup threshold must be in [-1, 1]");
}

std::vector<std::size_t> rank_indices(const std::vector<double>& scores, std::size_t k) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  if (idx.size() > k) idx.resize(k);
  return idx;
}

std::vector<std::size_t> threshold_indices(const std::vector<double>& scores, double thr) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] >= thr) idx.push_back(i);
  }
  if (idx.empty() && !scores.empty()) {
    idx.push_back(static_cast<std::size_t>(
        std::max_element(scores.begin(), scores.end()) - scores.begin()));
  }
  return idx;
}

std::vector<std::size_t> near_dup_indices(const Tensor& similarity, std::size_t k_min,
                                          double thr) {
  const std::size_t n = similarity.rows();
  if (similarity.rank() != 2 || similarity.cols() != n) {
    throw ShapeError("similarity matrix must be square, got " +
                     numcore::shape_string(similarity.shape()));
  }
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  if (n < k_min) return all;

  Tensor s = similarity;
  for (std::size_t i = 0; i < n; ++i) s.at(i, i) -= 1.0;
  auto column_sums = [&] {
    std::vector<double> cost(n, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < n; ++c) cost[c] += s.at(r, c);
    }
    return cost;
  };
  auto any_above = [&] {
    return std::any_of(s.data().begin(), s.data().end(),
                       [&](double v) { return !(v <= thr); });
  };

  std::size_t n_texts = n;
  while (any_above() && n_texts > k_min) {
    const auto cost = column_sums();
    const auto i = static_cast<std::size_t>(std::max_element(cost.begin(), cost.end()) -
                                            cost.begin());
    for (std::size_t c = 0; c < n; ++c) s.at(i, c) = 0.0;
    for (std::size_t r = 0; r < n; ++r) s.at(r, i) = 0.0;
    --n_texts;
  }

  const auto cost = column_sums();
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < n; ++i) {
    if (cost[i] != 0.0) keep.push_back(i);
  }
  return keep;
}

std::vector<double> caption_scores(const data::Record& record, const model::Model& model) {
  std::vector<std::string> texts;
  for (const auto& c : record.captions) texts.push_back(c.text);
  const Tensor t = model.embed_texts(texts);
  const Tensor v = model.embed_images(std::vector<std::vector<double>>{record.image});
  std::vector<double> scores(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) scores[i] = numcore::dot(v.row(0), t.row(i));
  return scores;
}

data::Record rank_select(const data::Record& record, const model::Model& model,
                         std::size_t k) {
  if (k < 1) throw ConfigError("selection k must be at least 1");
  data::Record out = record;
  out.captions = pick(record.captions, rank_indices(caption_scores(record, model), k));
  return out;
}

data::Record threshold_select(const data::Record& record, const model::Model& model,
                              double thr) {
  data::Record out = record;
  out.captions = pick(record.captions, threshold_indices(caption_scores(record, model), thr));
  return out;
}

std::vector<data::Caption> near_dup_removal(const std::vector<data::Caption>& captions,
                                            const model::Model& model, std::size_t k_min,
                                            double thr) {
  if (captions.size() < k_min) return captions;
  return pick(captions, near_dup_indices(text_similarity(captions, model), k_min, thr));
}

SelectionResult select_captions(const data::Dataset& ds, const model::Model& model,
                                const SelectConfig& config,
                                const std::vector<data::Split>& splits) {
  config.validate();
  SelectionResult result;
  std::vector<data::Record> records;
  records.reserve(ds.size());
  for (const auto& r : ds.records()) {
    const bool in_scope =
        splits.empty() || std::find(splits.begin(), splits.end(), r.split) != splits.end();
    if (!in_scope) {
      records.push_back(r);
      continue;
    }
    ++result.stats.records;
    result.stats.captions_before += r.captions.size();
    const std::vector<double> scores = caption_scores(r, model);
    data::Record out = r;
    switch (config.strategy) {
      case Strategy::kRank:
        out.captions = pick(r.captions, rank_indices(scores, config.k));
        break;
      case Strategy::kThreshold:
        out.captions = pick(r.captions, threshold_indices(scores, config.score_threshold));
        break;
      case Strategy::kThresholdDedup: {
        const auto passed = threshold_indices(scores, config.score_threshold);
        std::vector<data::Caption> survivors = pick(r.captions, passed);
        std::vector<data::Caption> deduped =
            near_dup_removal(survivors, model, config.k_min, config.dedup_threshold);
        if (deduped.empty() && !config.strict) {
          std::vector<double> passed_scores;
          for (std::size_t i : passed) passed_scores.push_back(scores[i]);
          auto best = rank_indices(passed_scores, config.k_min);
          std::sort(best.begin(), best.end());
          deduped = pick(survivors, best);
          ++result.stats.fallbacks;
        }
        out.captions = std::move(deduped);
        break;
      }
    }
    if (out.captions.empty()) {
      throw IntegrityError("strict caption selection removed every caption of record '" +
                           r.id + "'");
    }
    result.stats.captions_after += out.captions.size();
    records.push_back(std::move(out));
  }
  result.dataset = ds.with_records(std::move(records));
  std::ostringstream ss;
  ss << config.score_threshold;
  std::ostringstream dd;
  dd << config.dedup_threshold;
  result.dataset.record_transform(
      {"select_captions",
       {{"strategy", std::string(strategy_name(config.strategy))},
        {"k", std::to_string(config.k)},
        {"score_threshold", ss.str()},
        {"dedup_threshold", dd.str()},
        {"k_min", std::to_string(config.k_min)},
        {"strict", config.strict ? "true" : "false"},
        {"captions_before", std::to_string(result.stats.captions_before)},
        {"captions_after", std::to_string(result.stats.captions_after)},
        {"fallbacks", std::to_string(result.stats.fallbacks)}}});
  return result;
}

}  // namespace captune::select
