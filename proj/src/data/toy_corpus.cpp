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

#include "captune/data/toy_corpus.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "captune/data/translate.hpp"
#include "captune/error.hpp"
#include "captune/numcore/rng.hpp"

namespace captune::data {

namespace {

std::vector<std::size_t> shuffled(std::size_t n, numcore::Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.uniform_index(i)]);
  return idx;
}

std::string record_id(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "toy-%05zu", i);
  return buf;
}

}  // namespace

void ToyCorpusSpec::validate() const {
  if (n_clusters < 1) throw ConfigError("toy corpus needs at least one cluster");
  if (n_clusters > nouns.size()) {
    throw ConfigError("toy corpus has " + std::to_string(n_clusters) + " clusters but only " +
                      std::to_string(nouns.size()) + " nouns");
  }
  if (n_modifiers < 1 || n_modifiers > modifiers.size()) {
    throw ConfigError("toy corpus modifier count must be in [1, " +
                      std::to_string(modifiers.size()) + "]");
  }
  if (d_image < 1) throw ConfigError("toy corpus image dimension must be positive");
  if (!(noise_rate >= 0.0 && noise_rate <= 1.0)) {
    throw ConfigError("toy corpus noise rate must be in [0, 1]");
  }
  if (noise_rate > 0.0 && n_clusters < 2) {
    throw ConfigError("corrupting captions needs at least two clusters");
  }
  if (!(test_fraction >= 0.0 && test_fraction <= 1.0)) {
    throw ConfigError("toy corpus test fraction must be in [0, 1]");
  }
  if (!(image_noise_std >= 0.0) || !(modifier_scale >= 0.0)) {
    throw ConfigError("toy corpus scales must be non-negative");
  }
  if (templates.empty()) throw ConfigError("toy corpus needs at least one template");
  if (languages.empty()) throw ConfigError("toy corpus needs at least one language");
}

ToyWorld ToyWorld::make(const ToyCorpusSpec& spec, std::uint64_t seed) {
  spec.validate();
  ToyWorld w;
  w.spec = spec;
  numcore::Rng rng(numcore::mix_seed(seed, "toy-world"));
  w.centers.assign(spec.n_clusters, std::vector<double>(spec.d_image));
  for (auto& c : w.centers) {
    for (double& v : c) v = rng.normal();
  }
  w.modifiers.assign(spec.n_modifiers, std::vector<double>(spec.d_image));
  for (auto& m : w.modifiers) {
    for (double& v : m) v = spec.modifier_scale * rng.normal();
  }
  return w;
}

std::vector<double> ToyWorld::prototype(std::size_t cluster, std::size_t modifier) const {
  std::vector<double> p = centers.at(cluster);
  const auto& m = modifiers.at(modifier);
  for (std::size_t i = 0; i < p.size(); ++i) p[i] += m[i];
  return p;
}

std::pair<std::size_t, std::size_t> ToyWorld::decode(const std::vector<double>& image) const {
  if (image.size() != spec.d_image) {
    throw ShapeError("image has dimension " + std::to_string(image.size()) +
                     ", toy world expects " + std::to_string(spec.d_image));
  }
  std::pair<std::size_t, std::size_t> best{0, 0};
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centers.size(); ++c) {
    for (std::size_t m = 0; m < modifiers.size(); ++m) {
      double d = 0.0;
      for (std::size_t i = 0; i < image.size(); ++i) {
        const double diff = image[i] - centers[c][i] - modifiers[m][i];
        d += diff * diff;
      }
      if (d < best_d) {
        best_d = d;
        best = {c, m};
      }
    }
  }
  return best;
}

std::string ToyWorld::describe(const std::string& templ, std::size_t cluster,
                               std::size_t modifier) const {
  return fill_template(templ, spec.modifiers.at(modifier), spec.nouns.at(cluster));
}

std::string fill_template(std::string_view templ, std::string_view modifier,
                          std::string_view noun) {
  std::string out;
  for (std::size_t i = 0; i < templ.size(); ++i) {
    if (templ.substr(i, 3) == "{m}") {
      out += modifier;
      i += 2;
    } else if (templ.substr(i, 3) == "{n}") {
      out += noun;
      i += 2;
    } else {
      out += templ[i];
    }
  }
  return out;
}

ToyCorpus generate_toy_corpus(const ToyCorpusSpec& spec, std::uint64_t seed) {
  ToyCorpus corpus;
  corpus.world = ToyWorld::make(spec, seed);
  const ToyWorld& w = corpus.world;
  const std::size_t n = spec.n_records;

  numcore::Rng pick(numcore::mix_seed(seed, "toy-assign"));
  const auto n_corrupt =
      static_cast<std::size_t>(std::floor(spec.noise_rate * static_cast<double>(n)));
  const auto n_test =
      static_cast<std::size_t>(std::llround(spec.test_fraction * static_cast<double>(n)));
  std::vector<bool> corrupt(n, false);
  {
    const auto order = shuffled(n, pick);
    for (std::size_t i = 0; i < n_corrupt; ++i) corrupt[order[i]] = true;
  }
  std::vector<bool> test(n, false);
  {
    const auto order = shuffled(n, pick);
    for (std::size_t i = 0; i < n_test; ++i) test[order[i]] = true;
  }

  std::vector<std::string> foreign;
  for (const auto& l : spec.languages) {
    if (l != "en") foreign.push_back(l);
  }
  const PseudoTranslator translator(seed, foreign);

  std::vector<Record> records;
  records.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    numcore::Rng rng(numcore::mix_seed(seed, "toy-record", i));
    const std::size_t cluster = rng.uniform_index(spec.n_clusters);
    const std::size_t modifier = rng.uniform_index(spec.n_modifiers);
    Record r;
    r.id = record_id(i);
    r.image = w.prototype(cluster, modifier);
    for (double& v : r.image) v += rng.normal(0.0, spec.image_noise_std);

    std::size_t said_cluster = cluster;
    std::size_t said_modifier = modifier;
    if (corrupt[i]) {
      said_cluster = (cluster + 1 + rng.uniform_index(spec.n_clusters - 1)) % spec.n_clusters;
      said_modifier = rng.uniform_index(spec.n_modifiers);
    }
    const std::string& templ = spec.templates[rng.uniform_index(spec.templates.size())];
    const std::string& lang = spec.languages[i % spec.languages.size()];
    std::string text = w.describe(templ, said_cluster, said_modifier);
    if (lang != "en") text = translator.translate(text, "en", lang);
    r.captions.push_back({std::move(text), CaptionSource::kOriginal, lang});
    r.split = test[i] ? Split::kTest : Split::kTrain;
    records.push_back(std::move(r));

    corpus.truth.cluster.push_back(cluster);
    corpus.truth.modifier.push_back(modifier);
    corpus.truth.corrupted.push_back(corrupt[i]);
  }
  corpus.dataset = corpus.dataset.with_records(std::move(records));
  std::string langs;
  for (const auto& l : spec.languages) langs += (langs.empty() ? "" : ",") + l;
  corpus.dataset.record_transform(
      {"generate_toy_corpus",
       {{"seed", std::to_string(seed)},
        {"n_records", std::to_string(n)},
        {"n_clusters", std::to_string(spec.n_clusters)},
        {"n_modifiers", std::to_string(spec.n_modifiers)},
        {"d_image", std::to_string(spec.d_image)},
        {"noise_rate", std::to_string(spec.noise_rate)},
        {"corrupted", std::to_string(n_corrupt)},
        {"test_records", std::to_string(n_test)},
        {"languages", langs}}});
  return corpus;
}

}  // namespace captune::data
