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

#include "captune/evalkit/metrics.hpp"

#include <algorithm>

#include "captune/error.hpp"

namespace captune::evalkit {

std::string_view direction_name(RetrievalDirection d) noexcept {
  return d == RetrievalDirection::kTextToImage ? "txt2img" : "img2txt";
}

std::vector<std::size_t> retrieval_ranks(const Tensor& queries, const Tensor& gallery,
                                         const std::vector<std::vector<std::size_t>>& truth) {
  if (queries.rows() != truth.size()) {
    throw ContractError(std::to_string(queries.rows()) + " queries but " +
                        std::to_string(truth.size()) + " truth sets");
  }
  if (queries.size() > 0 && gallery.size() > 0 && queries.cols() != gallery.cols()) {
    throw ShapeError("query dimension " + std::to_string(queries.cols()) +
                     " differs from gallery dimension " + std::to_string(gallery.cols()));
  }
  const std::size_t n_gallery = gallery.rows();
  const Tensor sim = numcore::matmul_nt(queries, gallery);
  std::vector<std::size_t> ranks(truth.size());
  for (std::size_t q = 0; q < truth.size(); ++q) {
    if (truth[q].empty()) {
      throw IntegrityError("query " + std::to_string(q) + " has no true gallery item");
    }
    std::size_t best = truth[q].front();
    for (std::size_t id : truth[q]) {
      if (id >= n_gallery) {
        throw IntegrityError("query " + std::to_string(q) + " refers to gallery item " +
                             std::to_string(id) + " of " + std::to_string(n_gallery));
      }
      const double s = sim.at(q, id);
      const double b = sim.at(q, best);
      if (s > b || (s == b && id < best)) best = id;
    }
    const double s_best = sim.at(q, best);
    std::size_t ahead = 0;
    for (std::size_t j = 0; j < n_gallery; ++j) {
      const double s = sim.at(q, j);
      if (s > s_best || (s == s_best && j < best)) ++ahead;
    }
    ranks[q] = ahead + 1;
  }
  return ranks;
}

RetrievalReport recall_report(const std::vector<std::size_t>& ranks, std::vector<std::size_t> ks,
                              RetrievalDirection direction) {
  if (ranks.empty()) throw ContractError("recall_report needs at least one rank");
  if (ks.empty()) throw ContractError("recall_report needs at least one K");
  for (std::size_t r : ranks) {
    if (r < 1) throw ContractError("ranks are 1-based");
  }
  RetrievalReport rep;
  rep.direction = direction;
  rep.ks = std::move(ks);
  rep.queries = ranks.size();
  double total = 0.0;
  for (std::size_t k : rep.ks) {
    const auto hits = std::count_if(ranks.begin(), ranks.end(), [k](std::size_t r) { return r <= k; });
    const double recall = 100.0 * static_cast<double>(hits) / static_cast<double>(ranks.size());
    rep.recall.push_back(recall);
    total += recall;
  }
  rep.mean_recall = total / static_cast<double>(rep.ks.size());
  return rep;
}

RetrievalEvaluation evaluate_retrieval(const data::Dataset& ds, const model::Model& model,
                                       data::Split split) {
  const auto idx = ds.indices(split);
  if (idx.empty()) {
    throw DataError("no records in split '" + std::string(data::split_name(split)) + "'");
  }
  std::vector<std::vector<double>> images;
  std::vector<std::string> texts;
  std::vector<std::size_t> owner;  // caption -> image row
  std::vector<std::vector<std::size_t>> captions_of(idx.size());
  for (std::size_t row = 0; row < idx.size(); ++row) {
    const auto& r = ds[idx[row]];
    images.push_back(r.image);
    for (const auto& c : r.captions) {
      captions_of[row].push_back(texts.size());
      texts.push_back(c.text);
      owner.push_back(row);
    }
  }
  const Tensor img = model.embed_images(images);
  const Tensor txt = model.embed_texts(texts);

  std::vector<std::vector<std::size_t>> t2i_truth;
  t2i_truth.reserve(owner.size());
  for (std::size_t o : owner) t2i_truth.push_back({o});

  RetrievalEvaluation ev;
  ev.text_to_image = recall_report(retrieval_ranks(txt, img, t2i_truth), {1, 5, 10},
                                   RetrievalDirection::kTextToImage);
  ev.image_to_text = recall_report(retrieval_ranks(img, txt, captions_of), {1, 5, 10},
                                   RetrievalDirection::kImageToText);
  return ev;
}

Tensor class_embeddings(const std::vector<std::string>& class_names,
                        const std::vector<std::string>& templates, const model::Model& model) {
  if (class_names.empty()) throw ConfigError("zero-shot classification needs classes");
  if (templates.empty()) throw ConfigError("zero-shot classification needs templates");
  const std::size_t d = model.params.config.d_embed;
  Tensor out = Tensor::zeros(class_names.size(), d);
  for (std::size_t c = 0; c < class_names.size(); ++c) {
    std::vector<std::string> prompts;
    for (const auto& t : templates) {
      std::string p;
      for (std::size_t i = 0; i < t.size(); ++i) {
        if (t.compare(i, 2, "{}") == 0) {
          p += class_names[c];
          ++i;
        } else {
          p += t[i];
        }
      }
      prompts.push_back(std::move(p));
    }
    const Tensor e = model.embed_texts(prompts);
    std::vector<double> mean(d, 0.0);
    for (std::size_t r = 0; r < e.rows(); ++r) {
      for (std::size_t j = 0; j < d; ++j) mean[j] += e.at(r, j);
    }
    for (double& v : mean) v /= static_cast<double>(e.rows());
    const Tensor unit = numcore::l2_normalize(Tensor::vector(mean));
    std::copy(unit.data().begin(), unit.data().end(), out.row(c).begin());
  }
  return out;
}

std::vector<std::size_t> predict_classes(const Tensor& image_embeddings,
                                         const Tensor& class_embeddings) {
  const Tensor sim = numcore::matmul_nt(image_embeddings, class_embeddings);
  std::vector<std::size_t> preds(image_embeddings.rows());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto row = sim.row(i);
    preds[i] = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return preds;
}

std::vector<std::size_t> zero_shot_classify(const Tensor& image_embeddings,
                                            const std::vector<std::string>& class_names,
                                            const std::vector<std::string>& templates,
                                            const model::Model& model) {
  return predict_classes(image_embeddings, class_embeddings(class_names, templates, model));
}

ClassificationReport classification_report(const std::vector<std::size_t>& predictions,
                                           const std::vector<std::size_t>& labels,
                                           std::size_t n_classes) {
  if (predictions.size() != labels.size()) {
    throw ContractError(std::to_string(predictions.size()) + " predictions for " +
                        std::to_string(labels.size()) + " labels");
  }
  if (labels.empty()) throw ContractError("classification_report needs at least one label");
  ClassificationReport rep;
  rep.confusion.assign(n_classes, std::vector<std::size_t>(n_classes, 0));
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= n_classes || predictions[i] >= n_classes) {
      throw ContractError("class index out of range at position " + std::to_string(i));
    }
    ++rep.confusion[labels[i]][predictions[i]];
    if (labels[i] == predictions[i]) ++correct;
  }
  rep.top1 = 100.0 * static_cast<double>(correct) / static_cast<double>(labels.size());
  rep.normalized.assign(n_classes, std::vector<double>(n_classes, 0.0));
  double per_class_total = 0.0;
  std::size_t supported = 0;
  for (std::size_t c = 0; c < n_classes; ++c) {
    std::size_t support = 0;
    for (std::size_t v : rep.confusion[c]) support += v;
    if (support == 0) {
      rep.zero_support_classes.push_back(c);
      continue;
    }
    for (std::size_t j = 0; j < n_classes; ++j) {
      rep.normalized[c][j] =
          static_cast<double>(rep.confusion[c][j]) / static_cast<double>(support);
    }
    per_class_total +=
        100.0 * static_cast<double>(rep.confusion[c][c]) / static_cast<double>(support);
    ++supported;
  }
  rep.mean_per_class = per_class_total / static_cast<double>(supported);
  return rep;
}

}  // namespace captune::evalkit
