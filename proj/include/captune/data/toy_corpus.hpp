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
#include <string>
#include <vector>

#include "captune/data/dataset.hpp"

namespace captune::data {

/// Synthetic image/caption world: every image is a cluster center plus a
/// modifier direction plus Gaussian noise, and its caption names the
/// modifier and the cluster noun.
struct ToyCorpusSpec {
  std::size_t n_records = 200;
  std::size_t n_clusters = 8;
  std::size_t n_modifiers = 4;
  std::size_t d_image = 32;
  /// Fraction of records whose original caption describes another cluster.
  double noise_rate = 0.1;
  double image_noise_std = 0.35;
  double modifier_scale = 0.6;
  double test_fraction = 0.2;
  /// Original captions cycle through these languages; anything other than
  /// "en" is produced by the pseudo-translator.
  std::vector<std::string> languages{"en"};
  std::vector<std::string> nouns{"dog",   "cat",   "car",  "bird", "boat",  "tree",
                                 "house", "horse", "bike", "fish", "plane", "chair",
                                 "train", "clock", "cup",  "shoe"};
  std::vector<std::string> modifiers{"red",   "blue", "green", "small",
                                     "large", "old",  "young", "dark"};
  std::vector<std::string> templates{"a photo of a {m} {n}", "a picture of a {m} {n}",
                                     "an image of a {m} {n}", "a {m} {n}",
                                     "a close view of a {m} {n}"};

  /// Throws ConfigError when the corpus settings are inconsistent.
  void validate() const;
};

/// Prototype vectors of the world, regenerated from (spec, seed).
struct ToyWorld {
  ToyCorpusSpec spec;
  std::vector<std::vector<double>> centers;    // n_clusters x d_image
  std::vector<std::vector<double>> modifiers;  // n_modifiers x d_image

  static ToyWorld make(const ToyCorpusSpec& spec, std::uint64_t seed);

  std::vector<double> prototype(std::size_t cluster, std::size_t modifier) const;
  /// Nearest (cluster, modifier) prototype in Euclidean distance; ties go to
  /// the lowest index pair.
  std::pair<std::size_t, std::size_t> decode(const std::vector<double>& image) const;
  std::string describe(const std::string& templ, std::size_t cluster,
                       std::size_t modifier) const;
};

/// Hidden ground truth, aligned with the dataset records.
struct ToyTruth {
  std::vector<std::size_t> cluster;
  std::vector<std::size_t> modifier;
  std::vector<bool> corrupted;
};

struct ToyCorpus {
  Dataset dataset;
  ToyTruth truth;
  ToyWorld world;
};

/// Exactly floor(noise_rate * n_records) records are corrupted and exactly
/// round(test_fraction * n_records) records land in the test split.
ToyCorpus generate_toy_corpus(const ToyCorpusSpec& spec, std::uint64_t seed);

/// Fills "{m}" and "{n}" placeholders.
std::string fill_template(std::string_view templ, std::string_view modifier,
                          std::string_view noun);

}  // namespace captune::data
