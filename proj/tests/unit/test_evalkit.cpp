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
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "captune/data/toy_corpus.hpp"
#include "captune/error.hpp"
#include "captune/evalkit/metrics.hpp"
#include "captune/evalkit/report.hpp"
#include "captune/trainer/trainer.hpp"
#include "doctest.h"
#include "support/toy_model.hpp"

using namespace captune;
using evalkit::RetrievalDirection;
using numcore::Tensor;

namespace {

// Orders the gallery by (similarity desc, index asc) and reports the first
// position holding a true item.
std::vector<std::size_t> full_sort_ranks(const Tensor& q, const Tensor& g,
                                         const std::vector<std::vector<std::size_t>>& truth) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < q.rows(); ++i) {
    std::vector<double> sim(g.rows());
    for (std::size_t j = 0; j < g.rows(); ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < q.cols(); ++c) s += q.at(i, c) * g.at(j, c);
      sim[j] = s;
    }
    std::vector<std::size_t> order(g.rows());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return sim[a] != sim[b] ? sim[a] > sim[b] : a < b;
    });
    for (std::size_t p = 0; p < order.size(); ++p) {
      if (std::find(truth[i].begin(), truth[i].end(), order[p]) != truth[i].end()) {
        out.push_back(p + 1);
        break;
      }
    }
  }
  return out;
}

Tensor rows(std::initializer_list<std::initializer_list<double>> r) { return Tensor::matrix(r); }

}  // namespace

TEST_CASE("rank of hand-built queries") {
  const Tensor g = rows({{1, 0}, {0.8, 0.6}, {0.6, 0.8}, {0, 1}});
  CHECK(evalkit::retrieval_ranks(rows({{1, 0}}), g, {{0}}) == std::vector<std::size_t>{1});
  CHECK(evalkit::retrieval_ranks(rows({{1, 0}}), g, {{2, 3}}) == std::vector<std::size_t>{3});

  const Tensor tied = rows({{0.6, 0.8}, {0.6, 0.8}, {1, 0}});
  CHECK(evalkit::retrieval_ranks(rows({{0.6, 0.8}}), tied, {{2}}) == std::vector<std::size_t>{3});
  CHECK(evalkit::retrieval_ranks(rows({{0.6, 0.8}}), tied, {{1}}) == std::vector<std::size_t>{2});

  CHECK_THROWS_AS(evalkit::retrieval_ranks(rows({{1, 0}}), g, {{}}), IntegrityError);
  CHECK_THROWS_AS(evalkit::retrieval_ranks(rows({{1, 0}}), g, {{9}}), IntegrityError);
  CHECK_THROWS_AS(evalkit::retrieval_ranks(rows({{1, 0}}), g, {{0}, {1}}), ContractError);
}

TEST_CASE("ranks agree with a full sort on random instances") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    numcore::Rng rng(seed);
    const std::size_t n = 1 + rng.uniform_index(50);
    const std::size_t d = 3;
    Tensor q = Tensor::zeros(n, d);
    Tensor g = Tensor::zeros(n, d);
    // Coarse values so exact ties occur.
    for (double& v : q.data()) v = static_cast<double>(rng.uniform_index(3)) - 1.0;
    for (double& v : g.data()) v = static_cast<double>(rng.uniform_index(3)) - 1.0;
    std::vector<std::vector<std::size_t>> truth(n);
    for (auto& t : truth) {
      const std::size_t k = 1 + rng.uniform_index(3);
      for (std::size_t i = 0; i < k; ++i) t.push_back(rng.uniform_index(n));
    }
    CHECK(evalkit::retrieval_ranks(q, g, truth) == full_sort_ranks(q, g, truth));
  }
}

TEST_CASE("self retrieval ranks first without ties") {
  numcore::Rng rng(4);
  Tensor x = Tensor::zeros(20, 8);
  for (std::size_t i = 0; i < 20; ++i) {
    double s = 0.0;
    for (double& v : x.row(i)) s += (v = rng.normal()) * v;
    for (double& v : x.row(i)) v /= std::sqrt(s);
  }
  std::vector<std::vector<std::size_t>> truth(20);
  for (std::size_t i = 0; i < 20; ++i) truth[i] = {i};
  const auto rep = evalkit::recall_report(evalkit::retrieval_ranks(x, x, truth));
  CHECK(rep.recall[0] == 100.0);
}

TEST_CASE("recall reports by counting") {
  const auto all_first = evalkit::recall_report({1, 1, 1});
  CHECK(all_first.recall == std::vector<double>{100, 100, 100});
  CHECK(all_first.mean_recall == 100.0);

  const auto mixed = evalkit::recall_report({1, 3, 7, 12});
  CHECK(mixed.recall == std::vector<double>{25, 50, 75});
  CHECK(mixed.mean_recall == 50.0);
  CHECK(mixed.queries == 4);

  const auto far = evalkit::recall_report({11, 50, 12});
  CHECK(far.recall == std::vector<double>{0, 0, 0});
  CHECK(far.mean_recall == 0.0);

  CHECK_THROWS_AS(evalkit::recall_report({}), ContractError);
  CHECK_THROWS_AS(evalkit::recall_report({0, 1}), ContractError);

  numcore::Rng rng(2);
  for (int t = 0; t < 50; ++t) {
    std::vector<std::size_t> ranks(1 + rng.uniform_index(30));
    for (auto& r : ranks) r = 1 + rng.uniform_index(20);
    const auto rep = evalkit::recall_report(ranks);
    CHECK(rep.recall[0] <= rep.recall[1]);
    CHECK(rep.recall[1] <= rep.recall[2]);
    CHECK(rep.mean_recall == doctest::Approx((rep.recall[0] + rep.recall[1] + rep.recall[2]) / 3));
  }
}

TEST_CASE("classification reports by counting") {
  const auto perfect = evalkit::classification_report({0, 1, 2}, {0, 1, 2}, 3);
  CHECK(perfect.top1 == 100.0);
  CHECK(perfect.mean_per_class == 100.0);
  CHECK(perfect.confusion[1][1] == 1);
  CHECK(perfect.confusion[1][0] == 0);

  const auto rep = evalkit::classification_report({0, 1, 1}, {0, 0, 1}, 3);
  CHECK(rep.top1 == doctest::Approx(66.6667).epsilon(1e-5));
  CHECK(rep.mean_per_class == doctest::Approx(75.0));
  CHECK(rep.zero_support_classes == std::vector<std::size_t>{2});
  for (std::size_t c = 0; c < 2; ++c) {
    double s = 0.0;
    for (double v : rep.normalized[c]) s += v;
    CHECK(std::abs(s - 1.0) < 1e-12);
  }
  CHECK_THROWS_AS(evalkit::classification_report({0}, {0, 1}, 2), ContractError);
  CHECK_THROWS_AS(evalkit::classification_report({0}, {3}, 2), ContractError);
}

TEST_CASE("zero-shot classification on an untrained model") {
  const std::vector<std::string> texts{"a photo of a dog", "a photo of a cat"};
  model::EncoderConfig c = testing::small_encoder(4);
  const auto m = model::make_model(model::Vocabulary::build(texts), c, 3);
  const Tensor imgs = m.embed_images(std::vector<std::vector<double>>{{1, 0, 0, 0}, {0, 1, 0, 0}});

  CHECK(evalkit::zero_shot_classify(imgs, {"dog"}, {"a photo of a {}"}, m) ==
        std::vector<std::size_t>{0, 0});

  const Tensor verbatim = evalkit::class_embeddings({"dog", "cat"}, {"{}"}, m);
  const Tensor direct = m.embed_texts(std::vector<std::string>{"dog", "cat"});
  for (std::size_t i = 0; i < direct.size(); ++i) {
    CHECK(std::abs(verbatim.data()[i] - direct.data()[i]) < 1e-12);
  }
  CHECK_THROWS_AS(evalkit::zero_shot_classify(imgs, {}, {"{}"}, m), ConfigError);
  CHECK_THROWS_AS(evalkit::zero_shot_classify(imgs, {"dog"}, {}, m), ConfigError);
  CHECK(evalkit::predict_classes(rows({{1, 0}}), rows({{0.5, 0}, {0.5, 0}})) ==
        std::vector<std::size_t>{0});
}

TEST_CASE("zero-shot accuracy beats chance after brief training") {
  data::ToyCorpusSpec spec;
  spec.n_records = 150;
  spec.n_clusters = 3;
  spec.d_image = 12;
  spec.noise_rate = 0.0;
  const auto corpus = data::generate_toy_corpus(spec, 21);
  model::Model m = testing::model_for(corpus.dataset, testing::small_encoder(spec.d_image), 4);
  trainer::TrainConfig cfg;
  cfg.mode = model::TrainMode::kLit;
  cfg.total_steps = 80;
  cfg.batch_size = 32;
  cfg.max_lr = 5e-3;
  cfg.min_lr = 5e-4;
  cfg.seed = 2;
  trainer::train(cfg, corpus.dataset, m);

  std::vector<std::vector<double>> images;
  std::vector<std::size_t> labels;
  for (std::size_t i : corpus.dataset.indices(data::Split::kTest)) {
    images.push_back(corpus.dataset[i].image);
    labels.push_back(corpus.truth.cluster[i]);
  }
  const std::vector<std::string> classes(spec.nouns.begin(), spec.nouns.begin() + 3);
  const auto preds = evalkit::zero_shot_classify(m.embed_images(images), classes,
                                                 {"a photo of a {}", "a {}"}, m);
  const auto rep = evalkit::classification_report(preds, labels, 3);
  MESSAGE("zero-shot top-1 " << rep.top1);
  CHECK(rep.top1 > 100.0 / 3.0);
}

TEST_CASE("retrieval CSV round trips exactly") {
  std::vector<evalkit::RetrievalRow> table;
  table.push_back({"trained", "test:pt", evalkit::recall_report({1, 3, 7, 12})});
  table.push_back({"baseline", "test:pt",
                   evalkit::recall_report({2, 2, 9}, {1, 5, 10}, RetrievalDirection::kImageToText)});
  const auto csv = evalkit::retrieval_csv(table, {"config_hash=abc", "seed=7"});
  CHECK(csv.starts_with("# config_hash=abc\n# seed=7\nrun,dataset,direction,"));
  std::vector<std::string> comments;
  const auto back = evalkit::parse_retrieval_csv(csv, &comments);
  CHECK(comments == std::vector<std::string>{"config_hash=abc", "seed=7"});
  REQUIRE(back.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(back[i].run == table[i].run);
    CHECK(back[i].dataset == table[i].dataset);
    CHECK(back[i].report.direction == table[i].report.direction);
    CHECK(back[i].report.recall == table[i].report.recall);
    CHECK(back[i].report.mean_recall == table[i].report.mean_recall);
    CHECK(back[i].report.queries == table[i].report.queries);
  }
  CHECK(evalkit::retrieval_csv(back, comments) == csv);
  CHECK_THROWS_AS(evalkit::parse_retrieval_csv("run,dataset\nx,y\n"), ParseError);
}

TEST_CASE("number formatting is shortest round-trip") {
  for (double v : {0.1, 1.0 / 3.0, 66.66666666666667, 1e-300, 12345.0, -0.0625}) {
    CHECK(std::stod(evalkit::format_number(v)) == v);
  }
  CHECK(evalkit::format_number(0.1) == "0.1");
  CHECK(evalkit::format_number(50.0) == "50");
}

TEST_CASE("markdown, confusion grid and svg output") {
  const auto md = evalkit::markdown_table({"a", "b"}, {{"1", "2"}});
  CHECK(md == "| a | b |\n| --- | ---: |\n| 1 | 2 |\n");
  CHECK_THROWS_AS(evalkit::markdown_table({"a", "b"}, {{"1"}}), ContractError);

  const auto rep = evalkit::classification_report({0, 1, 1}, {0, 0, 1}, 2);
  const auto grid = evalkit::confusion_csv(rep, {"dog", "cat"}, false);
  CHECK(grid == "label\\prediction,dog,cat\ndog,1,1\ncat,0,1\n");

  const auto svg = evalkit::svg_bar_chart("delta", {"txt2img", "img2txt"}, {2.5, -1.0});
  CHECK(svg.starts_with("<svg"));
  CHECK(svg.find("txt2img") != std::string::npos);
  CHECK(svg.find("img2txt") != std::string::npos);
}
