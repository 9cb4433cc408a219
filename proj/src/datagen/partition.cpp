/*
 * Copyright 2026 The drfl Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "drfl/datagen/partition.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "drfl/errors.hpp"
#include "drfl/rng.hpp"

namespace drfl::datagen {

namespace {

std::vector<double> sample_dirichlet(std::size_t n, double alpha, Rng& rng) {
  std::gamma_distribution<double> gamma(alpha, 1.0);
  std::vector<double> p(n);
  double total = 0.0;
  for (double& v : p) {
    v = gamma(rng);
    total += v;
  }
  if (!(total > 0.0) || !std::isfinite(total)) {
    // Every draw underflowed (tiny alpha): fall back to a single random owner.
    std::fill(p.begin(), p.end(), 0.0);
    p[uniform_index(rng, n)] = 1.0;
    return p;
  }
  for (double& v : p) v /= total;
  return p;
}

std::size_t draw_categorical(const std::vector<double>& cumulative, Rng& rng) {
  const double u = uniform01(rng) * cumulative.back();
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()),
                               cumulative.size() - 1);
}

}  // namespace

PartitionPlan dirichlet_partition(const LabeledDataset& data, std::size_t devices, double alpha,
                                  double validation_fraction, std::uint64_t seed) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw ContractError("dirichlet_partition: alpha must be positive");
  }
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    throw ContractError("dirichlet_partition: validation fraction must be in [0, 1)");
  }
  if (devices == 0) throw ContractError("dirichlet_partition: need at least one device");
  data.validate();
  const std::size_t n = data.size();
  const auto n_val = static_cast<std::size_t>(
      std::llround(validation_fraction * static_cast<double>(n)));
  if (n - n_val < devices) {
    throw ContractError("dirichlet_partition: " + std::to_string(n - n_val) +
                        " training samples cannot cover " + std::to_string(devices) +
                        " devices");
  }

  Rng rng(seed);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  shuffle(order.begin(), order.end(), rng);

  PartitionPlan plan;
  plan.alpha = alpha;
  plan.validation_fraction = validation_fraction;
  plan.validation_indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::sort(plan.validation_indices.begin(), plan.validation_indices.end());

  std::vector<char> is_val(n, 0);
  for (std::size_t i : plan.validation_indices) is_val[i] = 1;
  std::vector<std::vector<std::size_t>> by_class(data.classes);
  for (std::size_t i = 0; i < n; ++i) {
    if (!is_val[i]) by_class[static_cast<std::size_t>(data.labels[i])].push_back(i);
  }

  plan.device_indices.assign(devices, {});
  for (const auto& members : by_class) {
    const std::vector<double> p = sample_dirichlet(devices, alpha, rng);
    std::vector<double> cumulative(devices);
    std::partial_sum(p.begin(), p.end(), cumulative.begin());
    for (std::size_t idx : members) {
      plan.device_indices[draw_categorical(cumulative, rng)].push_back(idx);
    }
  }

  for (std::size_t dev = 0; dev < devices; ++dev) {
    if (!plan.device_indices[dev].empty()) continue;
    std::size_t largest = 0;
    for (std::size_t j = 1; j < devices; ++j) {
      if (plan.device_indices[j].size() > plan.device_indices[largest].size()) largest = j;
    }
    plan.device_indices[dev].push_back(plan.device_indices[largest].back());
    plan.device_indices[largest].pop_back();
  }
  for (auto& shard : plan.device_indices) std::sort(shard.begin(), shard.end());
  return plan;
}

std::vector<double> device_label_entropy(const LabeledDataset& data, const PartitionPlan& plan) {
  std::vector<double> out;
  out.reserve(plan.device_indices.size());
  for (const auto& shard : plan.device_indices) {
    std::vector<double> counts(data.classes, 0.0);
    for (std::size_t i : shard) counts[static_cast<std::size_t>(data.labels[i])] += 1.0;
    double h = 0.0;
    const auto total = static_cast<double>(shard.size());
    for (double c : counts) {
      if (c > 0) h -= (c / total) * std::log(c / total);
    }
    out.push_back(h);
  }
  return out;
}

double mean_label_entropy(const LabeledDataset& data, const PartitionPlan& plan) {
  const auto h = device_label_entropy(data, plan);
  double s = 0.0;
  for (double v : h) s += v;
  return h.empty() ? 0.0 : s / static_cast<double>(h.size());
}

}  // namespace drfl::datagen
