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

#include <doctest.h>

#include <filesystem>
#include <memory>

#include "drfl/datagen/dataset.hpp"
#include "drfl/errors.hpp"
#include "drfl/taskmodel/layerwise_model.hpp"
#include "drfl/taskmodel/training.hpp"

using namespace drfl;
using namespace drfl::taskmodel;

namespace {

ModelSpec small_spec() { return {3, 4, 6, 5, 3}; }

std::shared_ptr<const LayerwiseModel> random_model(std::uint64_t seed) {
  Rng rng(seed);
  return std::make_shared<const LayerwiseModel>(LayerwiseModel::initialize(small_spec(), rng));
}

// Update whose every delta entry equals `v`.
GradientUpdate constant_update(const LayerwiseModel& g, DeviceId id, std::size_t depth, double v,
                               std::size_t samples) {
  GradientUpdate u{id, depth, {}, samples};
  for (std::size_t i : g.submodel_indices(depth)) u.deltas.emplace_back(g.tensors()[i].shape(), v);
  return u;
}

}  // namespace

TEST_CASE("sub-model layout and parameter counts") {
  const LayerwiseModel m(small_spec());
  CHECK(m.tensors().size() == 3 * 2 + 3 * 4);
  CHECK(m.submodel_indices(2) == std::vector<std::size_t>{0, 1, 2, 3, 10, 11, 12, 13});
  // blocks: 4*6+6, 6*6+6, head: 6*5+5 + 5*3+3
  CHECK(m.param_count(1) == 30 + 35 + 18);
  CHECK(m.param_count(2) == 30 + 42 + 35 + 18);
  CHECK(m.param_count(1) < m.param_count(2));
  CHECK(m.param_count(3) < m.total_param_count());
  CHECK_THROWS_AS(ModelSpec({0, 4, 6, 5, 3}).validate(), ContractError);
}

TEST_CASE("extracted views share the snapshot and predict like the tape") {
  const auto g = random_model(1);
  const auto view = extract_submodel(g, 2);
  CHECK(&view.global() == g.get());
  CHECK(view.tensor_count() == 8);
  CHECK(view.byte_size() == 8 * g->param_count(2));
  const auto data = datagen::generate_synthetic({3, 20, 4, 2.0}, 3);
  numkernel::Tape tape;
  std::vector<Var> params;
  for (const auto& t : view.parameters()) params.push_back(tape.constant(t));
  const Tensor a = submodel_logits(tape.constant(data.features), params, 2).value();
  const Tensor b = predict_logits(*g, 2, data.features);
  CHECK(a == b);
  CHECK_THROWS_AS(extract_submodel(g, 4), ContractError);
}

TEST_CASE("local training leaves the snapshot untouched and is deterministic") {
  const auto g = random_model(2);
  const LayerwiseModel copy = *g;
  const auto data = datagen::generate_synthetic({3, 64, 4, 2.0}, 3);
  const auto view = extract_submodel(g, 3);
  const auto u1 = local_train(view, data, {2, 16, 0.1}, 99, 4);
  const auto u2 = local_train(view, data, {2, 16, 0.1}, 99, 4);
  CHECK(*g == copy);
  CHECK(u1.deltas == u2.deltas);
  CHECK(u1.device == 4);
  CHECK(u1.sample_count == 64);
  CHECK(u1.deltas.size() == view.tensor_count());
  CHECK_THROWS_AS(local_train(view, data.subset({}), {1, 8, 0.1}, 1), ContractError);
}

TEST_CASE("local training lowers the training loss") {
  const auto g = random_model(3);
  const auto data = datagen::generate_synthetic({3, 300, 4, 3.0}, 4);
  const double before = evaluate(*g, 3, data);
  const auto u = local_train(extract_submodel(g, 3), data, {10, 16, 0.1}, 5);
  const std::vector<GradientUpdate> us{u};
  const double after = evaluate(aggregate_layerwise(*g, us), 3, data);
  CHECK(after > before);
  CHECK(after > 0.6);
}

TEST_CASE("a depth-1 model separates two planar classes within 50 steps") {
  const auto data = datagen::generate_synthetic({2, 400, 2, 8.0}, 6);
  Rng rng(1);
  const auto g = std::make_shared<const LayerwiseModel>(
      LayerwiseModel::initialize({1, 2, 8, 4, 2}, rng));
  // 13 batches per epoch, 39 SGD steps.
  const auto u = local_train(extract_submodel(g, 1), data, {3, 32, 0.1}, 2);
  const std::vector<GradientUpdate> us{u};
  CHECK(evaluate(aggregate_layerwise(*g, us), 1, data) > 0.9);
}

TEST_CASE("layer-wise aggregation averages each layer over its contributors") {
  const auto g = random_model(4);
  // Device 0 trains depth 1 with 100 samples, device 1 depth 3 with 300.
  const std::vector<GradientUpdate> us{constant_update(*g, 1, 3, 2.0, 300),
                                       constant_update(*g, 0, 1, 1.0, 100)};
  const auto next = aggregate_layerwise(*g, us);
  auto moved = [&](std::size_t i) { return g->tensors()[i][0] - next.tensors()[i][0]; };
  // Block 1: both contribute, 0.25 * 1 + 0.75 * 2.
  CHECK(moved(g->block_index(1)) == doctest::Approx(1.75));
  // Blocks 2 and 3: only device 1.
  CHECK(moved(g->block_index(2)) == doctest::Approx(2.0));
  CHECK(moved(g->block_index(3) + 1) == doctest::Approx(2.0));
  // Heads only from updates of exactly that depth.
  CHECK(moved(g->head_index(1)) == doctest::Approx(1.0));
  CHECK(moved(g->head_index(3) + 3) == doctest::Approx(2.0));
  // Nobody trained head 2.
  for (std::size_t k = 0; k < LayerwiseModel::kHeadTensors; ++k) {
    CHECK(next.tensors()[g->head_index(2) + k] == g->tensors()[g->head_index(2) + k]);
  }
}

TEST_CASE("aggregation with no updates is the identity") {
  const auto g = random_model(5);
  CHECK(aggregate_layerwise(*g, {}) == *g);
}

TEST_CASE("aggregation rejects malformed updates") {
  const auto g = random_model(6);
  std::vector<GradientUpdate> us{constant_update(*g, 0, 2, 1.0, 0)};
  CHECK_THROWS_AS(aggregate_layerwise(*g, us), ContractError);
  us[0].sample_count = 5;
  us[0].depth = 4;
  CHECK_THROWS_AS(aggregate_layerwise(*g, us), ContractError);
  us[0].depth = 3;
  CHECK_THROWS_AS(aggregate_layerwise(*g, us), ContractError);
}

TEST_CASE("evaluation breaks logit ties toward the lowest class") {
  const LayerwiseModel zero(small_spec());
  datagen::LabeledDataset d{Tensor({3, 4}, 1.0), {0, 1, 0}, 3};
  CHECK(evaluate(zero, 2, d) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("checkpoints round-trip exactly") {
  const auto g = random_model(7);
  const auto path = std::filesystem::temp_directory_path() / "drfl_ckpt_test.bin";
  save_checkpoint(path.string(), *g);
  CHECK(load_checkpoint(path.string()) == *g);
  std::filesystem::remove(path);
}
