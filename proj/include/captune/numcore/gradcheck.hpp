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

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "captune/error.hpp"

namespace captune::numcore {

/// Compares an analytic gradient against central differences of `f` at
/// `theta` and returns max_i |analytic_i - fd_i| / (|fd_i| + 1e-12).
///
/// `f` receives the perturbed parameter vector in `Real` precision, so a
/// caller can hand in an extended-precision reference evaluation.
template <class Real, class F>
double finite_diff_check(F&& f, std::span<const double> theta,
                         std::span<const double> analytic, double step) {
  if (theta.size() != analytic.size()) {
    throw ShapeError("finite_diff_check: " + std::to_string(theta.size()) +
                     " parameters but " + std::to_string(analytic.size()) +
                     " gradient entries");
  }
  if (!(step > 0.0)) throw ParameterError("finite_diff_check: step must be > 0");

  std::vector<Real> point(theta.begin(), theta.end());
  double worst = 0.0;
  for (std::size_t i = 0; i < point.size(); ++i) {
    const Real saved = point[i];
    point[i] = saved + static_cast<Real>(step);
    const Real up = f(std::span<const Real>(point));
    point[i] = saved - static_cast<Real>(step);
    const Real down = f(std::span<const Real>(point));
    point[i] = saved;
    if (!std::isfinite(static_cast<double>(up)) ||
        !std::isfinite(static_cast<double>(down))) {
      throw NumericError("finite_diff_check: non-finite evaluation at index " +
                         std::to_string(i));
    }
    const double fd =
        static_cast<double>((up - down) / (Real{2} * static_cast<Real>(step)));
    const double err = std::abs(analytic[i] - fd) / (std::abs(fd) + 1e-12);
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace captune::numcore
