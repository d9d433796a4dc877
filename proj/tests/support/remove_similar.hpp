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
#include <vector>

namespace captune::testing {

using Matrix = std::vector<std::vector<double>>;

// Line-by-line transcription of the published near-duplicate removal
// pseudocode on a plain nested-vector matrix. Returns surviving indices.
inline std::vector<std::size_t> remove_similar(Matrix sim_matrix, std::size_t k_min,
                                               double thr) {
  const std::size_t n = sim_matrix.size();
  std::vector<std::size_t> all;
  for (std::size_t i = 0; i < n; ++i) all.push_back(i);
  if (n < k_min) return all;

  std::size_t n_texts = n;
  for (std::size_t i = 0; i < n; ++i) sim_matrix[i][i] -= 1.0;

  auto all_at_most_thr = [&] {
    for (const auto& row : sim_matrix) {
      for (double v : row) {
        if (!(v <= thr)) return false;
      }
    }
    return true;
  };
  auto column_sum = [&] {
    std::vector<double> cost(n, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < n; ++c) cost[c] += sim_matrix[r][c];
    }
    return cost;
  };

  while (!all_at_most_thr() && n_texts > k_min) {
    const std::vector<double> cost = column_sum();
    std::size_t i = 0;
    for (std::size_t j = 1; j < n; ++j) {
      if (cost[j] > cost[i]) i = j;
    }
    for (std::size_t c = 0; c < n; ++c) sim_matrix[i][c] = 0.0;
    for (std::size_t r = 0; r < n; ++r) sim_matrix[r][i] = 0.0;
    n_texts -= 1;
  }

  const std::vector<double> cost = column_sum();
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(cost[i] == 0.0)) kept.push_back(i);
  }
  return kept;
}

// Calls visit(matrix) for every symmetric n x n matrix with unit diagonal and
// off-diagonal entries drawn from `values`.
template <class F>
void for_each_similarity(std::size_t n, const std::vector<double>& values, F&& visit) {
  std::vector<std::pair<std::size_t, std::size_t>> cells;
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = r + 1; c < n; ++c) cells.emplace_back(r, c);
  }
  std::vector<std::size_t> digit(cells.size(), 0);
  Matrix m(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) m[i][i] = 1.0;
  while (true) {
    for (std::size_t k = 0; k < cells.size(); ++k) {
      m[cells[k].first][cells[k].second] = values[digit[k]];
      m[cells[k].second][cells[k].first] = values[digit[k]];
    }
    visit(static_cast<const Matrix&>(m));
    std::size_t k = 0;
    while (k < digit.size() && ++digit[k] == values.size()) digit[k++] = 0;
    if (k == digit.size()) return;
  }
}

}  // namespace captune::testing
