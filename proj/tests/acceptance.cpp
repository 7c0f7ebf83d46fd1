// Copyright 2026 The Spartan Memory Authors.
// SPDX-License-Identifier: Apache-2.0

// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "spartan/analysis.hpp"
#include "spartan/bench.hpp"
#include "spartan/checkpoint.hpp"
#include "spartan/param_accounting.hpp"
#include "spartan/training.hpp"
#include "test_support.hpp"

namespace spartan {
namespace {

using testing::max_abs_diff;
using testing::random_vector;

// Tolerances and budgets.
constexpr double kFdTolerance = 1e-6;
constexpr double kTieMargin = 1e-6;
constexpr int kFdInstances = 20;
constexpr int kSparsityInstances = 100;
constexpr double kIdentityTolerance = 1e-12;
constexpr int kDenseInstances = 1000;
constexpr double kDenseTolerance = 1e-12;
constexpr double kMacRatioFloor = 1.6;
constexpr double kThroughputNoise = 0.05;
constexpr double kBenchSeconds = 2.0;
constexpr double kTrainAccuracyFloor = 0.95;
constexpr double kHeldOutAccuracyFloor = 0.90;
constexpr std::size_t kMaxSteps = 1000;
constexpr std::size_t kTrainSteps = 400;
constexpr double kPurityFloor = 0.8;
constexpr double kNmiFloor = 0.3;
constexpr double kNmiOracleTolerance = 1e-9;
constexpr int kRoundTripModels = 20;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Gradient FD over one random memory layer or adapter; returns the worst error.
double spartan_fd_instance(Rng& rng, bool& accepted) {
  const SpartanConfig cfg{8, 4, 2, 2};
  auto p = testing::random_spartan(cfg, rng);
  Vector x = random_vector(rng, 8);
  const Vector w = random_vector(rng, 8);
  const auto trace = forward_position(p, x);
  accepted = false;
  if (testing::topk_gap(trace.parent_probs, cfg.top_k) < kTieMargin) return 0.0;
  auto g = backward_position(p, trace, w);
  std::vector<std::span<Scalar>> targets = testing::spans_of(p);
  targets.push_back(x.span());
  std::vector<std::span<const Scalar>> analytic;
  for (auto s : testing::spans_of(g.params)) analytic.emplace_back(s);
  analytic.emplace_back(g.input.span());
  const auto fd = testing::finite_difference_check(
      targets, analytic, [&] { return dot(w, forward_position(p, x).output); },
      [&] { return forward_position(p, x).selected == trace.selected; });
  accepted = fd.selection_stable;
  return fd.max_rel_err;
}

double adapter_fd_instance(Rng& rng) {
  auto p = testing::random_adapter(AdapterConfig{8, 4}, rng);
  Vector x = random_vector(rng, 8);
  const Vector w = random_vector(rng, 8);
  auto g = adapter_backward(p, adapter_forward_traced(p, x), w);
  std::vector<std::span<Scalar>> targets = testing::spans_of(p);
  targets.push_back(x.span());
  std::vector<std::span<const Scalar>> analytic;
  for (auto s : testing::spans_of(g.params)) analytic.emplace_back(s);
  analytic.emplace_back(g.input.span());
  return testing::finite_difference_check(targets, analytic,
                                          [&] { return dot(w, adapter_forward(p, x)); })
      .max_rel_err;
}

Outcome gradient_correctness() {
  Rng rng(101);
  double worst_memory = 0.0, worst_adapter = 0.0;
  int accepted = 0, skipped = 0;
  while (accepted < kFdInstances) {
    bool ok = false;
    const double err = spartan_fd_instance(rng, ok);
    if (!ok) {
      ++skipped;
      continue;
    }
    worst_memory = std::max(worst_memory, err);
    ++accepted;
  }
  for (int i = 0; i < kFdInstances; ++i) worst_adapter = std::max(worst_adapter, adapter_fd_instance(rng));
  return {worst_memory <= kFdTolerance && worst_adapter <= kFdTolerance,
          fmt("max rel err memory %.2e, adapter %.2e over %d+%d instances (%d near ties skipped)",
              worst_memory, worst_adapter, kFdInstances, kFdInstances, skipped)};
}

Outcome exact_sparsity() {
  Rng rng(102);
  std::size_t nonzero = 0, checked = 0;
  for (int trial = 0; trial < kSparsityInstances; ++trial) {
    const std::size_t n = 2 + rng.index(15);
    const SpartanConfig cfg{1 + rng.index(10), n, 1 + rng.index(3), 1 + rng.index(n - 1)};
    const auto p = testing::random_spartan(cfg, rng);
    const auto t = forward_position(p, random_vector(rng, cfg.dim));
    const auto g = backward_position(p, t, random_vector(rng, cfg.dim));
    std::vector<bool> chosen(n, false);
    for (auto i : t.selected) chosen[i] = true;
    for (std::size_t i = 0; i < n; ++i) {
      if (chosen[i]) continue;
      for (Scalar v : g.params.parents.row(i)) nonzero += v != 0.0;
      for (Scalar v : g.params.child_keys[i].span()) nonzero += v != 0.0;
      for (Scalar v : g.params.child_values[i].span()) nonzero += v != 0.0;
      ++checked;
    }
  }
  return {nonzero == 0 && checked > 0,
          fmt("%zu nonzero entries across %zu unselected parents in %d instances", nonzero, checked,
              kSparsityInstances)};
}

Outcome identity_at_init() {
  const BackboneConfig cfg{128, 4, 4, 256, 2048, 32, Pooling::kFirstToken};
  PluginConfig with;
  with.spartan = SpartanConfig{128, 16, 3, 8};
  PluginConfig without;
  without.kind = PluginKind::kNone;
  const Model a = build_model(cfg, 4, with, 103);
  const Model b = build_model(cfg, 4, without, 103);
  Rng rng(104);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    TokenIds ids{kBosToken};
    const std::size_t len = 2 + rng.index(cfg.max_seq_len - 1);
    while (ids.size() < len) ids.push_back(static_cast<std::uint32_t>(1 + rng.index(cfg.vocab_buckets - 1)));
    const Matrix ya = encode(a.backbone, ids, a.plugin), yb = encode(b.backbone, ids, b.plugin);
    worst = std::max(worst, max_abs_diff(ya.span(), yb.span()));
  }
  return {a.backbone == b.backbone && worst <= kIdentityTolerance,
          fmt("max |with - without| = %.2e over 100 inputs (d=128, L=4)", worst)};
}

Outcome dense_oracle() {
  Rng rng(105);
  double worst = 0.0, worst_weights = 0.0;
  for (int trial = 0; trial < kDenseInstances; ++trial) {
    const std::size_t n = 1 + rng.index(32);
    const SpartanConfig cfg{1 + rng.index(12), n, 1 + rng.index(4), n};
    const auto p = testing::random_spartan(cfg, rng);
    const Vector x = random_vector(rng, cfg.dim);
    worst = std::max(worst, max_abs_diff(forward_position(p, x).output, dense_reference_forward(p, x)));

    const std::size_t k = 1 + rng.index(n);
    const Vector logits = random_vector(rng, n, 3.0);
    const Vector probs = softmax_stable(logits);
    const auto sel = topk_indices(probs, k);
    double z = 0.0;
    for (auto i : sel) z += probs[i];
    const Vector w = restricted_softmax(logits, sel);
    for (std::size_t s = 0; s < k; ++s) worst_weights = std::max(worst_weights, std::abs(w[s] - probs[sel[s]] / z));
  }
  return {worst <= kDenseTolerance && worst_weights <= kDenseTolerance,
          fmt("K=N vs dense max diff %.2e, restricted softmax vs p/Z %.2e over %d instances", worst,
              worst_weights, kDenseInstances)};
}

BenchReport micro(BenchArch arch, std::size_t k) {
  BenchConfig cfg;
  cfg.arch = arch;
  cfg.mode = BenchMode::kMicro;
  cfg.threads = 1;
  cfg.batch_size = 32;
  cfg.measure_seconds = kBenchSeconds;
  cfg.spartan.top_k = k;
  return run_bench(cfg);
}

Outcome compute_sparsity() {
  const SpartanConfig s{768, 16, 3, 8};
  const AdapterConfig a{768, 64};
  const std::uint64_t memory = measure_plugin_macs(BenchArch::kSpartan, s, a);
  const std::uint64_t adapter = measure_plugin_macs(BenchArch::kAdapter, s, a);
  const std::uint64_t expected = 16 * 768 + 2 * 8 * 3 * 768;
  const double ratio = static_cast<double>(adapter) / static_cast<double>(memory);
  const auto rm = micro(BenchArch::kSpartan, 8), ra = micro(BenchArch::kAdapter, 8);
  const bool pass = memory == expected && memory == count_macs(BenchArch::kSpartan, s, a).plugin_macs &&
                    adapter == 98304 && ratio >= kMacRatioFloor &&
                    rm.instances_per_minute >= ra.instances_per_minute;
  return {pass, fmt("MACs/position memory %llu (N d + 2 K c d = %llu), adapter %llu, ratio %.2f; "
                    "micro throughput memory %.0f vs adapter %.0f inst/min",
                    static_cast<unsigned long long>(memory), static_cast<unsigned long long>(expected),
                    static_cast<unsigned long long>(adapter), ratio, rm.instances_per_minute,
                    ra.instances_per_minute)};
}

Outcome k_monotonicity() {
  std::vector<double> ipm;
  std::string detail = "inst/min";
  bool pass = true;
  for (std::size_t k : {2u, 4u, 8u, 16u}) {
    ipm.push_back(micro(BenchArch::kSpartan, k).instances_per_minute);
    detail += fmt(" K=%zu:%.0f", k, ipm.back());
    if (ipm.size() > 1 && ipm.back() > ipm[ipm.size() - 2] * (1.0 + kThroughputNoise)) pass = false;
  }
  return {pass, detail};
}

std::vector<Example> topic_set(std::uint64_t seed) {
  SyntheticTopicTask task;
  task.noise = 0.05;
  Rng rng(seed);
  return generate_topic_dataset(task, rng);
}

TrainConfig protocol() {
  TrainConfig cfg;
  cfg.learning_rate = 1e-3;
  cfg.batch_size = 16;
  cfg.steps = kTrainSteps;
  return cfg;
}

const BackboneConfig kDeskBackbone{128, 4, 4, 256, 2048, 32, Pooling::kFirstToken};

Outcome learnability() {
  const auto train_set = topic_set(1), held_out = topic_set(2);
  PluginConfig plugin;
  plugin.spartan = SpartanConfig{128, 16, 3, 8};
  Model m = build_model(kDeskBackbone, 4, plugin, 0);
  const auto result = train(m, train_set, protocol());
  const double train_acc = evaluate(m, train_set), held_acc = evaluate(m, held_out);
  return {train_acc >= kTrainAccuracyFloor && held_acc >= kHeldOutAccuracyFloor &&
              result.history.size() <= kMaxSteps,
          fmt("train %.4f, held-out %.4f after %zu steps (final loss %.4g)", train_acc, held_acc,
              result.history.size(), result.history.back().loss)};
}

Outcome specialization() {
  const auto train_set = topic_set(1), held_out = topic_set(2);
  PluginConfig plugin;
  plugin.spartan = SpartanConfig{128, 5, 1, 2};
  Model m = build_model(kDeskBackbone, 4, plugin, 0);
  train(m, train_set, protocol());
  const auto records = collect_selections(m, held_out);
  const auto stats = specialization_stats(records, 5, 4);
  std::vector<std::size_t> parents, labels;
  for (const auto& r : records) {
    parents.push_back(r.argmax_parent);
    labels.push_back(r.label);
  }
  const double oracle = testing::brute_force_nmi(parents, labels);
  const double gap = std::abs(stats.nmi - oracle);
  return {stats.max_purity >= kPurityFloor && stats.nmi >= kNmiFloor && gap <= kNmiOracleTolerance,
          fmt("last layer N=5 c=1 K=2: max purity %.4f, NMI %.4f (oracle diff %.1e)",
              stats.max_purity, stats.nmi, gap)};
}

Outcome parameter_accounting() {
  const BackboneConfig bb{768, 12, 12, 3072, 2048, 64};
  PluginConfig plugin;
  plugin.spartan = SpartanConfig{768, 16, 3, 8};
  plugin.adapter = AdapterConfig{768, 64};
  const auto r = enumerate_params(model_tensor_shapes(bb, 2, plugin), plugin, 12);
  const std::string table = report_table(r);
  plugin.kind = PluginKind::kAdapter;
  const auto pf = enumerate_params(model_tensor_shapes(bb, 2, plugin), plugin, 12);
  plugin.kind = PluginKind::kAdapterPair;
  const auto hb = enumerate_params(model_tensor_shapes(bb, 2, plugin), plugin, 12);
  const bool printed = table.find("1032192") != std::string::npos &&
                       table.find("1179648") != std::string::npos &&
                       table.find("[MISMATCH]") != std::string::npos;
  const bool pass = r.plugin_params_per_task == 1032192 && r.formula_added_per_task == 1179648 &&
                    printed && hb.plugin_params_per_layer == 2 * pf.plugin_params_per_layer;
  return {pass, fmt("enumerated %llu, closed form %llu (gap %+.2f%%, flagged %s); per layer "
                    "two adapters %llu = 2 x %llu",
                    static_cast<unsigned long long>(r.plugin_params_per_task),
                    static_cast<unsigned long long>(r.formula_added_per_task), 100.0 * r.formula_gap,
                    printed ? "yes" : "no", static_cast<unsigned long long>(hb.plugin_params_per_layer),
                    static_cast<unsigned long long>(pf.plugin_params_per_layer))};
}

Outcome determinism_and_round_trip() {
  RunConfig cfg;
  cfg.seed = 11;
  cfg.num_labels = 4;
  cfg.backbone = BackboneConfig{32, 2, 4, 64, 512, 32};
  cfg.plugin.spartan = SpartanConfig{32, 6, 2, 2};
  cfg.plugin.adapter = AdapterConfig{32, 8};
  cfg.train.steps = 20;
  cfg.train.seed = cfg.seed;
  const auto data = topic_set(3);
  auto trained = [&] {
    Checkpoint c{cfg, std::nullopt, build_model(cfg.backbone, 4, cfg.plugin, cfg.seed)};
    train(c.model, data, cfg.train);
    return serialize_checkpoint(c);
  };
  const bool identical = trained() == trained();

  Rng rng(106);
  int lossless = 0;
  const PluginKind kinds[] = {PluginKind::kSpartan, PluginKind::kAdapter, PluginKind::kAdapterPair,
                              PluginKind::kNone};
  for (int i = 0; i < kRoundTripModels; ++i) {
    RunConfig rc = cfg;
    rc.seed = rng.next_u64();
    rc.train.seed = rc.seed;
    rc.plugin.kind = kinds[i % 4];
    Checkpoint c{rc, std::nullopt, build_model(rc.backbone, 4, rc.plugin, rc.seed)};
    for (auto& t : trainable_tensors(c.model)) fill_gaussian(rng, t.values, 1.0);
    const Checkpoint back = deserialize_checkpoint(serialize_checkpoint(c));
    lossless += back.model == c.model && back.config == c.config;
  }
  return {identical && lossless == kRoundTripModels,
          fmt("same-seed checkpoints %s; %d/%d random models round-trip bitwise",
              identical ? "identical" : "DIFFER", lossless, kRoundTripModels)};
}

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;  // 0 = no runtime bound
  std::function<Outcome()> check;
};

}  // namespace
}  // namespace spartan

int main() {
  using namespace spartan;
  const std::vector<Criterion> criteria = {
      {1, "gradient correctness", 10, gradient_correctness},
      {2, "exact gradient sparsity", 5, exact_sparsity},
      {3, "identity at init", 0, identity_at_init},
      {4, "dense oracle equivalence", 0, dense_oracle},
      {5, "compute sparsity", 120, compute_sparsity},
      {6, "K monotonicity", 120, k_monotonicity},
      {7, "learnability", 300, learnability},
      {8, "parent specialization", 0, specialization},
      {9, "parameter accounting", 1, parameter_accounting},
      {10, "determinism and round trip", 0, determinism_and_round_trip},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = c.budget_seconds == 0 || secs <= c.budget_seconds;
    const bool pass = o.pass && in_time;
    failed += !pass;
    std::printf("%s [%d] %s: %s (%.1f s%s)\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(),
                secs, in_time ? "" : ", over budget");
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
