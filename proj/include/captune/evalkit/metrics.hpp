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
#include <string>
#include <string_view>
#include <vector>

#include "captune/data/dataset.hpp"
#include "captune/model/model.hpp"
#include "captune/numcore/tensor.hpp"

namespace captune::evalkit {

using numcore::Tensor;

enum class RetrievalDirection { kTextToImage, kImageToText };
std::string_view direction_name(RetrievalDirection d) noexcept;

/// For each query row, the 1-based position of its first true item when the
/// gallery is ordered by descending similarity with ties broken by ascending
/// index: 1 + (rows strictly more similar than the best true item) + (rows
/// equally similar with a lower index). Throws IntegrityError for an empty
/// truth set or an out-of-range id.
std::vector<std::size_t> retrieval_ranks(const Tensor& queries, const Tensor& gallery,
                                         const std::vector<std::vector<std::size_t>>& truth);

struct RetrievalReport {
  RetrievalDirection direction = RetrievalDirection::kTextToImage;
  std::vector<std::size_t> ks{1, 5, 10};
  std::vector<double> recall;  // percent, aligned with ks
  double mean_recall = 0.0;
  std::size_t queries = 0;
};

/// recall@K = 100 * |{rank <= K}| / N. Throws ContractError on empty ranks.
RetrievalReport recall_report(const std::vector<std::size_t>& ranks,
                              std::vector<std::size_t> ks = {1, 5, 10},
                              RetrievalDirection direction = RetrievalDirection::kTextToImage);

struct RetrievalEvaluation {
  RetrievalReport text_to_image;
  RetrievalReport image_to_text;
};

/// Both directions over the records of one split. Every caption of a record
/// is a text query (text to image); image to text counts a hit on any of the
/// record's captions.
RetrievalEvaluation evaluate_retrieval(const data::Dataset& ds, const model::Model& model,
                                       data::Split split = data::Split::kTest);

/// L2-normalized mean of the template embeddings of each class.
Tensor class_embeddings(const std::vector<std::string>& class_names,
                        const std::vector<std::string>& templates, const model::Model& model);

/// Argmax cosine per image row; ties go to the lowest class index. Throws
/// ConfigError for an empty class list or template list.
std::vector<std::size_t> zero_shot_classify(const Tensor& image_embeddings,
                                            const std::vector<std::string>& class_names,
                                            const std::vector<std::string>& templates,
                                            const model::Model& model);
std::vector<std::size_t> predict_classes(const Tensor& image_embeddings,
                                         const Tensor& class_embeddings);

struct ClassificationReport {
  double top1 = 0.0;
  double mean_per_class = 0.0;
  std::vector<std::size_t> zero_support_classes;
  std::vector<std::vector<std::size_t>> confusion;  // [label][prediction]
  std::vector<std::vector<double>> normalized;      // rows sum to 1 (0 without support)
};

ClassificationReport classification_report(const std::vector<std::size_t>& predictions,
                                           const std::vector<std::size_t>& labels,
                                           std::size_t n_classes);

}  // namespace captune::evalkit
