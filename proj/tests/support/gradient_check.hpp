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

#include <span>
#include <vector>

#include "captune/loss/loss.hpp"
#include "captune/model/encoder.hpp"
#include "captune/numcore/gradcheck.hpp"
#include "support/reference_model.hpp"

namespace captune::testing {

struct CheckResult {
  double worst = 0.0;
  std::size_t checked = 0;
};

// Central differences of the long-double reference loss over every entry
// trainable under `mode`, compared with the tape gradients.
inline CheckResult check_mode(const model::DualEncoderParams& params,
                              const lora::AdapterSet* adapters,
                              const std::vector<loss::Example>& batch,
                              const loss::LossConfig& cfg, model::TrainMode mode) {
  const auto eval = loss::clip_loss_with_gradients(batch, params, adapters, cfg, mode);
  const RefProblem problem = make_problem(params, adapters, batch, cfg);
  const std::vector<double> theta = flatten(params, adapters);
  const std::vector<double> analytic = flatten_grads(eval.grads, problem.layout);

  std::vector<std::size_t> index;
  for (const auto& e : problem.layout.entries) {
    if (!model::is_trainable(e.name, mode, adapters)) continue;
    for (std::size_t k = 0; k < e.rows * e.cols; ++k) index.push_back(e.offset + k);
  }
  std::vector<double> sub_theta;
  std::vector<double> sub_grad;
  for (std::size_t i : index) {
    sub_theta.push_back(theta[i]);
    sub_grad.push_back(analytic[i]);
  }
  std::vector<Real> full(theta.begin(), theta.end());
  auto f = [&](std::span<const Real> sub) {
    for (std::size_t k = 0; k < index.size(); ++k) full[index[k]] = sub[k];
    return reference_loss(full, problem);
  };
  CheckResult r;
  r.worst = numcore::finite_diff_check<Real>(f, sub_theta, sub_grad, 1e-6);
  r.checked = index.size();
  return r;
}

}  // namespace captune::testing
