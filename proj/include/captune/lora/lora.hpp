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

#include <compare>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "captune/model/params.hpp"
#include "captune/numcore/tensor.hpp"

namespace captune::lora {

using numcore::Tensor;

enum class Projection { kQuery, kValue };

struct Target {
  std::size_t layer = 0;
  Projection projection = Projection::kQuery;

  /// "lora.<layer>.<q|v>"; factor tensors append ".down" / ".up".
  std::string name() const;
  /// Name of the frozen base weight the adapter wraps.
  std::string base_name() const;

  auto operator<=>(const Target&) const = default;
};

/// Low-rank update for a frozen d1 x d2 weight W0:
///   h = W0 x + (alpha / rank) * up * (down * x)
/// with down: rank x d2 and up: d1 x rank.
struct Adapter {
  Tensor down;
  Tensor up;
  std::size_t rank = 0;
  double alpha = 0.0;
  double dropout = 0.0;
  Target target;

  double scaling() const { return alpha / static_cast<double>(rank); }
  std::size_t d_out() const { return up.rows(); }
  std::size_t d_in() const { return down.cols(); }
  std::size_t parameter_count() const { return down.size() + up.size(); }
};

/// down ~ N(0, 0.02^2) from the seeded stream, up = 0. Throws RankError unless
/// rank < min(d1, d2).
Adapter init_adapter(std::size_t d1, std::size_t d2, std::size_t rank,
                     double alpha, std::uint64_t seed, Target target = {});

/// W0 x + (alpha/rank) B (A x) for a single vector x.
Tensor apply(const Adapter& adapter, const Tensor& w0, const Tensor& x);
/// W0 + (alpha/rank) B A.
Tensor merge(const Adapter& adapter, const Tensor& w0);

struct LoraConfig {
  std::size_t rank = 8;
  double alpha = 8.0;
  double dropout = 0.0;
  std::vector<Projection> targets{Projection::kQuery, Projection::kValue};
};

class AdapterSet {
 public:
  AdapterSet() = default;

  /// One adapter per target; throws ConfigError on duplicates.
  void add(Adapter adapter);
  bool empty() const noexcept { return adapters_.empty(); }
  std::size_t size() const noexcept { return adapters_.size(); }
  const Adapter* find(const Target& t) const;
  Adapter* find(const Target& t);

  std::map<Target, Adapter>& adapters() noexcept { return adapters_; }
  const std::map<Target, Adapter>& adapters() const noexcept { return adapters_; }

  const std::vector<std::string>& saved_modules() const noexcept { return saved_; }
  void set_saved_modules(std::vector<std::string> names) { saved_ = std::move(names); }

  /// Checks every adapter against the shape of the weight it wraps.
  void validate_against(const model::DualEncoderParams& params) const;

  /// Visits "<target>.down" and "<target>.up" tensors in target order.
  template <class F>
  void for_each(F&& visit) {
    for (auto& [t, a] : adapters_) {
      visit(t.name() + ".down", a.down);
      visit(t.name() + ".up", a.up);
    }
  }
  template <class F>
  void for_each(F&& visit) const {
    for (const auto& [t, a] : adapters_) {
      visit(t.name() + ".down", a.down);
      visit(t.name() + ".up", a.up);
    }
  }

 private:
  std::map<Target, Adapter> adapters_;
  std::vector<std::string> saved_{std::string(model::kTextProjection)};
};

/// Adapters on every configured projection of every block, each seeded from
/// its own derived stream.
AdapterSet make_adapter_set(const model::DualEncoderParams& params,
                            const LoraConfig& config, std::uint64_t seed);

/// Sum of rank * (d1 + d2) over adapters.
std::size_t adapter_parameter_count(const AdapterSet& set);
/// Adapter factors + saved modules + log_temperature.
std::size_t trainable_count(const AdapterSet& set,
                            const model::DualEncoderParams& params);

/// Params with every adapter folded into its base weight.
model::DualEncoderParams merge_into(const model::DualEncoderParams& params,
                                    const AdapterSet& set);

}  // namespace captune::lora
