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

#include <algorithm>
#include <string>
#include <vector>

#include "captune/error.hpp"
#include "captune/select/select.hpp"
#include "doctest.h"
#include "support/remove_similar.hpp"

using namespace captune;
using numcore::Tensor;
using select::SelectConfig;
using select::Strategy;

namespace {

Tensor to_tensor(const testing::Matrix& m) {
  Tensor t = Tensor::zeros(m.size(), m.size());
  for (std::size_t r = 0; r < m.size(); ++r) {
    for (std::size_t c = 0; c < m.size(); ++c) t.at(r, c) = m[r][c];
  }
  return t;
}

testing::Matrix constant(std::size_t n, double off) {
  testing::Matrix m(n, std::vector<double>(n, off));
  for (std::size_t i = 0; i < n; ++i) m[i][i] = 1.0;
  return m;
}

model::Model toy_model() {
  const std::vector<std::string> texts{"a red dog", "a blue cat", "the old boat", "one big tree"};
  model::EncoderConfig c;
  c.max_tokens = 8;
  c.d_model = 8;
  c.n_layers = 1;
  c.mlp_ratio = 2;
  c.d_embed = 4;
  c.d_image = 3;
  return model::make_model(model::Vocabulary::build(texts), c, 12);
}

data::Record record(std::string id, std::vector<std::string> texts) {
  data::Record r;
  r.id = std::move(id);
  r.image = {0.3, -0.2, 0.9};
  for (auto& t : texts) r.captions.push_back({std::move(t), data::CaptionSource::kOriginal, "en"});
  return r;
}

std::vector<std::string> texts_of(const data::Record& r) {
  std::vector<std::string> out;
  for (const auto& c : r.captions) out.push_back(c.text);
  return out;
}

}  // namespace

TEST_CASE("rank selection keeps the top k in score order") {
  const std::vector<double> s{0.3, 0.1, 0.5, 0.2, 0.4, 0.35};
  const auto top = select::rank_indices(s, 5);
  CHECK(top == std::vector<std::size_t>{2, 4, 5, 0, 3});
  CHECK(std::find(top.begin(), top.end(), 1) == top.end());
  CHECK(select::rank_indices(s, 10).size() == 6);
  CHECK(select::rank_indices({0.2, 0.5, 0.2}, 2) == std::vector<std::size_t>{1, 0});
}

TEST_CASE("threshold selection and its fallback") {
  CHECK(select::threshold_indices({0.2, 0.14, 0.16}, 0.15) == std::vector<std::size_t>{0, 2});
  CHECK(select::threshold_indices({0.2, 0.3}, 0.15) == std::vector<std::size_t>{0, 1});
  CHECK(select::threshold_indices({0.1, 0.12, 0.05}, 0.15) == std::vector<std::size_t>{1});
  CHECK(select::threshold_indices({0.15}, 0.15) == std::vector<std::size_t>{0});
}

TEST_CASE("near-duplicate removal traced by hand") {
  CHECK(select::near_dup_indices(to_tensor(constant(2, 0.9)), 3, 0.3) ==
        std::vector<std::size_t>{0, 1});
  // Four texts at 0.9: one removal brings the count to k_min; the removed
  // text's zeroed column then has cost 0 and the other three survive.
  CHECK(select::near_dup_indices(to_tensor(constant(4, 0.9)), 3, 0.3) ==
        std::vector<std::size_t>{1, 2, 3});
  CHECK(select::near_dup_indices(to_tensor(constant(4, 0.1)), 3, 0.3) ==
        std::vector<std::size_t>{0, 1, 2, 3});
  // Orthogonal texts all have zero cost and are removed by the final sweep.
  CHECK(select::near_dup_indices(to_tensor(constant(4, 0.0)), 3, 0.3).empty());
  CHECK_THROWS_AS(select::near_dup_indices(Tensor::zeros(2, 3), 1, 0.3), ShapeError);
}

TEST_CASE("near-duplicate removal equals the literal pseudocode on all small matrices") {
  const std::vector<double> values{0.0, 0.1, 0.35, 0.9};
  std::size_t checked = 0, mismatches = 0;
  for (std::size_t n = 1; n <= 4; ++n) {
    for (std::size_t k_min : {1u, 2u, 3u}) {
      testing::for_each_similarity(n, values, [&](const testing::Matrix& m) {
        ++checked;
        if (select::near_dup_indices(to_tensor(m), k_min, 0.3) !=
            testing::remove_similar(m, k_min, 0.3)) {
          ++mismatches;
        }
      });
    }
  }
  CHECK(checked > 10000);
  CHECK(mismatches == 0);
}

TEST_CASE("record-level selection on a model") {
  const auto m = toy_model();
  const auto r = record("r", {"a red dog", "a blue cat", "the old boat", "one big tree"});
  const auto scores = select::caption_scores(r, m);
  REQUIRE(scores.size() == 4);

  const auto ranked = select::rank_select(r, m, 2);
  REQUIRE(ranked.captions.size() == 2);
  const auto order = select::rank_indices(scores, 2);
  CHECK(ranked.captions[0].text == r.captions[order[0]].text);

  auto all = texts_of(select::rank_select(r, m, 100));
  auto orig = texts_of(r);
  std::sort(all.begin(), all.end());
  std::sort(orig.begin(), orig.end());
  CHECK(all == orig);

  CHECK(select::threshold_select(r, m, -1.0).captions == r.captions);
  CHECK(select::threshold_select(r, m, 1.0).captions.size() == 1);
  CHECK_THROWS_AS(select::rank_select(r, m, 0), ConfigError);

  const auto two = record("t", {"a red dog", "a blue cat"});
  CHECK(select::near_dup_removal(two.captions, m, 3, 0.3) == two.captions);
}

TEST_CASE("empty dedup results fall back unless strict") {
  const auto m = toy_model();
  data::Dataset ds;
  ds.add(record("dup", {"a red dog", "a red dog"}));
  ds.add(record("other", {"a blue cat", "the old boat", "one big tree"}));
  SelectConfig cfg;
  cfg.score_threshold = -1.0;
  cfg.k_min = 1;
  const auto res = select::select_captions(ds, m, cfg);
  CHECK(res.stats.fallbacks >= 1);
  CHECK(res.dataset[0].captions.size() == 1);
  CHECK(res.stats.records == 2);
  CHECK(res.dataset.provenance().size() == ds.provenance().size() + 1);

  cfg.strict = true;
  CHECK_THROWS_AS(select::select_captions(ds, m, cfg), IntegrityError);
}

TEST_CASE("selection outputs are ordered subsets and respect split scope") {
  const auto m = toy_model();
  data::Dataset ds;
  auto train = record("a", {"one big tree", "a red dog", "a blue cat", "the old boat"});
  auto test = record("b", {"one big tree", "a red dog", "a blue cat", "the old boat"});
  test.split = data::Split::kTest;
  ds.add(train);
  ds.add(test);
  for (auto strategy : {Strategy::kThreshold, Strategy::kThresholdDedup}) {
    SelectConfig cfg;
    cfg.strategy = strategy;
    cfg.score_threshold = 0.0;
    const auto res = select::select_captions(ds, m, cfg, {data::Split::kTrain});
    const auto& kept = res.dataset[0].captions;
    std::size_t pos = 0;
    for (const auto& c : kept) {
      while (pos < train.captions.size() && !(train.captions[pos] == c)) ++pos;
      CHECK(pos < train.captions.size());
    }
    CHECK(res.dataset[1].captions == test.captions);
    const auto again = select::select_captions(ds, m, cfg, {data::Split::kTrain});
    CHECK(again.dataset.records() == res.dataset.records());
  }
}

TEST_CASE("selection config validation and names") {
  SelectConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.k = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.k = 5;
  cfg.score_threshold = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  CHECK(select::parse_strategy("threshold_dedup") == Strategy::kThresholdDedup);
  CHECK(select::strategy_name(Strategy::kRank) == "rank");
  CHECK_THROWS_AS(select::parse_strategy("best"), ConfigError);
}
