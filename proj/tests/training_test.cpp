// Copyright 2026 The Spartan Memory Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "spartan/errors.hpp"
#include "spartan/training.hpp"
#include "test_support.hpp"

namespace spartan {
namespace {

BackboneConfig small_backbone() { return BackboneConfig{16, 2, 2, 32, 512, 16, Pooling::kFirstToken}; }

PluginConfig spartan_plugin(std::size_t dim, std::size_t n = 6, std::size_t c = 2, std::size_t k = 2) {
  PluginConfig p;
  p.spartan = SpartanConfig{dim, n, c, k};
  p.adapter = AdapterConfig{dim, 4};
  return p;
}

std::vector<Example> topic_data(std::size_t per_topic, double noise, std::uint64_t seed) {
  SyntheticTopicTask task;
  task.examples_per_topic = per_topic;
  task.noise = noise;
  Rng rng(seed);
  return generate_topic_dataset(task, rng);
}

std::vector<std::vector<Scalar>> snapshot(const Model& m) {
  std::vector<std::vector<Scalar>> out;
  for (const auto& t : tensors(m)) out.emplace_back(t.values.begin(), t.values.end());
  return out;
}

TEST(TrainConfig, DefaultsAndValidation) {
  const TrainConfig cfg;
  EXPECT_EQ(cfg.batch_size, 16u);
  EXPECT_EQ(cfg.few_shot_steps, 1000u);
  EXPECT_EQ(cfg.beta1, 0.9);
  EXPECT_EQ(cfg.beta2, 0.999);
  EXPECT_EQ(cfg.epsilon, 1e-8);
  EXPECT_EQ(cfg.weight_decay, 0.0);
  EXPECT_EQ(default_learning_rate(PluginKind::kSpartan), 1e-3);
  EXPECT_EQ(default_learning_rate(PluginKind::kAdapter), 1e-4);
  EXPECT_EQ(default_learning_rate(PluginKind::kAdapterPair), 1e-4);
  TrainConfig bad;
  bad.batch_size = 0;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = TrainConfig{};
  bad.learning_rate = -1.0;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(CrossEntropy, UniformLogits) {
  const auto ce = cross_entropy(Vector{0.3, 0.3, 0.3, 0.3}, 2);
  EXPECT_NEAR(ce.loss, std::log(4.0), 1e-15);
  EXPECT_NEAR(ce.d_logits[2], 0.25 - 1.0, 1e-15);
}

TEST(CrossEntropy, ConfidentCorrectLogitApproachesZero) {
  EXPECT_LT(cross_entropy(Vector{50, 0, 0}, 0).loss, 1e-20);
  EXPECT_TRUE(std::isfinite(cross_entropy(Vector{1000, 0, 0}, 1).loss));
  EXPECT_THROW(cross_entropy(Vector{1, 2}, 2), ParameterError);
}

TEST(CrossEntropy, GradientMatchesFiniteDifferences) {
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    Vector logits = testing::random_vector(rng, 5, 2.0);
    const std::size_t label = rng.index(5);
    const auto ce = cross_entropy(logits, label);
    for (std::size_t i = 0; i < 5; ++i) {
      const double saved = logits[i];
      logits[i] = saved + 1e-5;
      const double up = cross_entropy(logits, label).loss;
      logits[i] = saved - 1e-5;
      const double down = cross_entropy(logits, label).loss;
      logits[i] = saved;
      EXPECT_NEAR(ce.d_logits[i], (up - down) / 2e-5, 1e-8);
    }
  }
}

TEST(Argmax, TiesGoToLowestLabel) {
  EXPECT_EQ(argmax(Vector{1, 3, 3, 2}), 1u);
  EXPECT_EQ(argmax(Vector{0, 0, 0}), 0u);
}

TEST(Adam, SingleStepFromZeroStateClosedForm) {
  std::vector<Scalar> p{0.7, -1.2, 3.0}, g{0.5, -2e-3, 0.0};
  std::vector<TensorView> params{{"w", {3}, p, true}};
  std::vector<TensorView> grads{{"w", {3}, g, true}};
  auto state = make_optimizer_state(params);
  TrainConfig cfg;
  cfg.learning_rate = 0.01;
  adam_step(state, params, grads, cfg);
  // m_hat = g, v_hat = g^2, so the step is lr * g / (|g| + eps).
  EXPECT_NEAR(p[0], 0.7 - 0.01 * 0.5 / (0.5 + 1e-8), 1e-15);
  EXPECT_NEAR(p[1], -1.2 + 0.01 * 2e-3 / (2e-3 + 1e-8), 1e-15);
  EXPECT_EQ(p[2], 3.0);
  EXPECT_EQ(state.step, 1u);
  EXPECT_NEAR(state.first_moment[0][0], 0.05, 1e-16);
  EXPECT_NEAR(state.second_moment[0][0], 0.001 * 0.25, 1e-18);
}

TEST(Adam, ZeroGradientsLeaveParamsUnchanged) {
  std::vector<Scalar> p{0.7, -1.2}, g{0.0, 0.0};
  std::vector<TensorView> params{{"w", {2}, p, true}};
  std::vector<TensorView> grads{{"w", {2}, g, true}};
  auto state = make_optimizer_state(params);
  for (int i = 0; i < 5; ++i) adam_step(state, params, grads, TrainConfig{});
  EXPECT_EQ(p, (std::vector<Scalar>{0.7, -1.2}));
}

TEST(Adam, ShapeMismatchRejected) {
  std::vector<Scalar> p{1, 2}, g{1};
  std::vector<TensorView> params{{"w", {2}, p, true}};
  std::vector<TensorView> grads{{"w", {1}, g, true}};
  auto state = make_optimizer_state(params);
  EXPECT_THROW(adam_step(state, params, grads, TrainConfig{}), ShapeError);
}

TEST(Train, ZeroStepsChangeNothing) {
  Model m = build_model(small_backbone(), 4, spartan_plugin(16), 1);
  const Model before = m;
  TrainConfig cfg;
  cfg.steps = 0;
  const auto result = train(m, topic_data(10, 0.05, 2), cfg);
  EXPECT_TRUE(result.history.empty());
  EXPECT_EQ(m, before);
}

TEST(Train, ZeroLearningRateChangesNothing) {
  Model m = build_model(small_backbone(), 4, spartan_plugin(16), 1);
  const auto before = snapshot(m);
  TrainConfig cfg;
  cfg.steps = 5;
  cfg.learning_rate = 0.0;
  const auto result = train(m, topic_data(10, 0.05, 2), cfg);
  EXPECT_EQ(result.history.size(), 5u);
  EXPECT_EQ(snapshot(m), before);
}

TEST(Train, FrozenTensorsNeverChange) {
  for (auto kind : {PluginKind::kSpartan, PluginKind::kAdapter, PluginKind::kAdapterPair, PluginKind::kNone}) {
    PluginConfig plugin = spartan_plugin(16);
    plugin.kind = kind;
    Model m = build_model(small_backbone(), 4, plugin, 3);
    const auto frozen = frozen_checksum(m);
    const Model before = m;
    TrainConfig cfg;
    cfg.steps = 10;
    cfg.learning_rate = 1e-2;
    train(m, topic_data(10, 0.05, 4), cfg);
    EXPECT_EQ(frozen_checksum(m), frozen);
    EXPECT_EQ(m.backbone.layers, before.backbone.layers);
    EXPECT_EQ(m.backbone.token_embedding, before.backbone.token_embedding);
    EXPECT_NE(m.backbone.head, before.backbone.head);
  }
}

TEST(Train, DeterministicUnderSeed) {
  const auto data = topic_data(10, 0.05, 5);
  TrainConfig cfg;
  cfg.steps = 8;
  Model a = build_model(small_backbone(), 4, spartan_plugin(16), 6);
  Model b = build_model(small_backbone(), 4, spartan_plugin(16), 6);
  const auto ra = train(a, data, cfg), rb = train(b, data, cfg);
  EXPECT_EQ(a, b);
  for (std::size_t i = 0; i < ra.history.size(); ++i) EXPECT_EQ(ra.history[i].loss, rb.history[i].loss);
}

TEST(Train, NonFiniteLossNamesTheStep) {
  Model m = build_model(small_backbone(), 4, spartan_plugin(16), 7);
  m.backbone.head(0, 0) = std::numeric_limits<double>::quiet_NaN();
  TrainConfig cfg;
  cfg.steps = 3;
  try {
    train(m, topic_data(10, 0.05, 8), cfg);
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("step 1"), std::string::npos) << e.what();
  }
}

TEST(Train, RejectsEmptyDataAndOutOfRangeLabels) {
  Model m = build_model(small_backbone(), 2, spartan_plugin(16), 7);
  TrainConfig cfg;
  cfg.steps = 1;
  EXPECT_THROW(train(m, {}, cfg), DataError);
  EXPECT_THROW(train(m, topic_data(2, 0.0, 1), cfg), DataError);  // labels 2 and 3
}

TEST(BatchGradients, MeanOverExamples) {
  Model m = build_model(small_backbone(), 4, spartan_plugin(16), 9);
  Rng rng(10);
  for (auto& layer : m.plugin.spartan) {
    for (auto& v : layer.child_values) fill_gaussian(rng, v.span(), 0.3);
  }
  fill_gaussian(rng, m.backbone.head.span(), 0.3);
  const auto data = tokenize_all(topic_data(1, 0.0, 11), m.backbone.config);
  const auto both = compute_batch_gradients(m, std::span(data).subspan(0, 2));
  const auto a = compute_batch_gradients(m, std::span(data).subspan(0, 1));
  const auto b = compute_batch_gradients(m, std::span(data).subspan(1, 1));
  EXPECT_NEAR(both.loss, 0.5 * (a.loss + b.loss), 1e-14);
  auto gb = both.grads, ga = a.grads, gbb = b.grads;
  const auto vb = trainable_tensors(gb), va = trainable_tensors(ga), vbb = trainable_tensors(gbb);
  for (std::size_t t = 0; t < vb.size(); ++t) {
    for (std::size_t i = 0; i < vb[t].values.size(); ++i) {
      EXPECT_NEAR(vb[t].values[i], 0.5 * (va[t].values[i] + vbb[t].values[i]), 1e-14);
    }
  }
}

TEST(BatchGradients, MatchFiniteDifferencesOfTheLoss) {
  BackboneConfig bb{8, 2, 2, 16, 64, 12, Pooling::kFirstToken};
  for (auto kind : {PluginKind::kSpartan, PluginKind::kAdapter}) {
    PluginConfig plugin = spartan_plugin(8, 4, 2, 2);
    plugin.kind = kind;
    Model m = build_model(bb, 3, plugin, 12);
    Rng rng(13);
    for (auto& layer : m.plugin.spartan) {
      for (auto s : testing::spans_of(layer)) fill_gaussian(rng, s, 0.7);
    }
    for (auto& a : m.plugin.adapters) fill_gaussian(rng, a.up.span(), 0.5);
    fill_gaussian(rng, m.backbone.head.span(), 0.5);
    SyntheticTopicTask task;
    task.num_topics = 3;
    task.examples_per_topic = 1;
    task.max_words = 6;
    Rng gen(14);
    const auto batch = tokenize_all(generate_topic_dataset(task, gen), bb);
    const auto bg = compute_batch_gradients(m, batch);
    auto routes = [&] {
      std::vector<std::size_t> r;
      for (const auto& ex : batch) {
        const auto c = encode_traced(m.backbone, ex.ids, m.plugin);
        for (const auto& l : c.layers) {
          for (const auto& t : l.spartan) r.insert(r.end(), t.selected.begin(), t.selected.end());
        }
      }
      return r;
    };
    const auto base = routes();
    auto grads = bg.grads;
    std::vector<std::span<Scalar>> targets;
    std::vector<std::span<const Scalar>> analytic;
    for (auto& t : trainable_tensors(m)) targets.push_back(t.values);
    for (auto& t : trainable_tensors(grads)) analytic.emplace_back(t.values);
    const auto fd = testing::finite_difference_check(
        targets, analytic, [&] { return compute_batch_gradients(m, batch).loss; },
        [&] { return routes() == base; });
    ASSERT_TRUE(fd.selection_stable);
    EXPECT_LE(fd.max_rel_err, 1e-6) << plugin_kind_name(kind);
  }
}

TEST(BatchGradients, UnselectedParentsGetZeroRawGradient) {
  Model m = build_model(BackboneConfig{16, 2, 2, 32, 512, 16}, 4, spartan_plugin(16, 12, 2, 2), 15);
  Rng rng(16);
  for (auto& layer : m.plugin.spartan) {
    for (auto& v : layer.child_values) fill_gaussian(rng, v.span(), 0.3);
  }
  fill_gaussian(rng, m.backbone.head.span(), 0.3);
  const auto batch = tokenize_all(topic_data(1, 0.05, 17), m.backbone.config);
  const auto bg = compute_batch_gradients(m, batch);
  std::size_t checked = 0;
  for (std::size_t l = 0; l < m.plugin.spartan.size(); ++l) {
    std::vector<bool> used(12, false);
    for (const auto& ex : batch) {
      const auto trace = encode_traced(m.backbone, ex.ids, m.plugin);
      for (const auto& t : trace.layers[l].spartan) {
        for (auto i : t.selected) used[i] = true;
      }
    }
    const auto& g = bg.grads.plugin.spartan[l];
    for (std::size_t i = 0; i < 12; ++i) {
      if (used[i]) continue;
      ++checked;
      for (Scalar v : g.parents.row(i)) EXPECT_EQ(v, 0.0);
      for (Scalar v : g.child_keys[i].span()) EXPECT_EQ(v, 0.0);
      for (Scalar v : g.child_values[i].span()) EXPECT_EQ(v, 0.0);
    }
  }
  EXPECT_GT(checked, 0u) << "every parent was selected; the check is vacuous";
}

TEST(Evaluate, ConstantPredictorOnBalancedData) {
  Model m = build_model(small_backbone(), 4, spartan_plugin(16), 18);
  m.backbone.head.fill(0.0);
  EXPECT_DOUBLE_EQ(evaluate(m, topic_data(25, 0.05, 19)), 0.25);
  EXPECT_THROW(evaluate(m, {}), DataError);
}

TEST(Evaluate, TrainedModelOnNoiseFreeDataIsPerfectAndReproducible) {
  const auto data = topic_data(40, 0.0, 20);
  TrainConfig cfg;
  cfg.steps = 150;
  cfg.learning_rate = 1e-2;
  Model m = build_model(small_backbone(), 4, spartan_plugin(16), 21);
  train(m, data, cfg);
  const double acc = evaluate(m, data);
  EXPECT_EQ(acc, 1.0);
  EXPECT_EQ(evaluate(m, data), acc);
}

TEST(Train, LossDecreasesOnTheSyntheticTask) {
  // Desk-scale defaults; 500 steps.
  const auto data = topic_data(250, 0.05, 1);
  Model m = build_model(BackboneConfig{}, 4, spartan_plugin(128, 16, 3, 8), 0);
  TrainConfig cfg;
  cfg.steps = 500;
  const auto result = train(m, data, cfg);
  std::vector<double> loss;
  for (const auto& s : result.history) loss.push_back(s.loss);
  std::vector<double> block;
  for (std::size_t i = 0; i < 500; i += 50) {
    block.push_back(std::accumulate(loss.begin() + i, loss.begin() + i + 50, 0.0) / 50.0);
  }
  for (std::size_t i = 1; i < block.size(); ++i) EXPECT_LE(block[i], block[i - 1]) << "window " << i;
  double prev = std::accumulate(loss.begin(), loss.begin() + 50, 0.0) / 50.0;
  for (std::size_t i = 1; i + 50 <= 500; ++i) {
    const double ma = prev + (loss[i + 49] - loss[i - 1]) / 50.0;
    EXPECT_LE(ma, prev + 1e-4) << "step " << i;
    prev = ma;
  }
}

}  // namespace
}  // namespace spartan
