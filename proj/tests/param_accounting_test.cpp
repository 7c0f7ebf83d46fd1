// Copyright 2026 The Spartan Memory Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <json.hpp>

#include "spartan/errors.hpp"
#include "spartan/param_accounting.hpp"

namespace spartan {
namespace {

BackboneConfig base_backbone() { return BackboneConfig{768, 12, 12, 3072, 2048, 64}; }

PluginConfig plugin_of(PluginKind kind, std::size_t d = 768) {
  PluginConfig p;
  p.kind = kind;
  p.spartan = SpartanConfig{d, 16, 3, 8};
  p.adapter = AdapterConfig{d, 64};
  return p;
}

// Hand count of the frozen encoder from its configuration.
std::uint64_t backbone_oracle(const BackboneConfig& c) {
  const std::uint64_t d = c.dim, f = c.ffn_dim;
  const std::uint64_t per_layer = 4 * (d * d + d) + 2 * d + f * d + f + d * f + d + 2 * d;
  return c.vocab_buckets * d + c.max_seq_len * d + 2 * d + c.layers * per_layer;
}

TEST(ClosedForm, BaseSizeShape) {
  EXPECT_EQ(spartan_formula_total(0, 1, 16, 3, 768, 12), 1179648u);
  EXPECT_EQ(spartan_formula_total(0, 9, 16, 3, 768, 12), 10616832u);
  EXPECT_EQ(spartan_formula_total(0, 1, 1, 1, 1, 1), 4u);
  EXPECT_EQ(spartan_formula_total(5, 1, 1, 1, 1, 0), 5u);
}

TEST(ClosedForm, LinearInTasks) {
  for (std::uint64_t t = 0; t < 6; ++t) {
    EXPECT_EQ(spartan_formula_total(100, t, 4, 2, 8, 3),
              100 + t * (spartan_formula_total(100, 1, 4, 2, 8, 3) - 100));
  }
}

TEST(Enumerate, SpartanAtBaseSize) {
  const auto shapes = model_tensor_shapes(base_backbone(), 2, plugin_of(PluginKind::kSpartan));
  const auto r = enumerate_params(shapes, plugin_of(PluginKind::kSpartan), 12);
  EXPECT_EQ(r.backbone_params, 86678016u);
  EXPECT_EQ(r.backbone_params, backbone_oracle(base_backbone()));
  EXPECT_EQ(r.plugin_params_per_layer, 86016u);
  EXPECT_EQ(r.plugin_params_per_task, 1032192u);
  EXPECT_EQ(r.head_params, 2u * 768 + 2);
  EXPECT_EQ(r.added_params_per_task, 1032192u + 1538);
  EXPECT_EQ(r.formula_added_per_task, 1179648u);
  EXPECT_NEAR(r.formula_gap, 1.0 / 7.0, 1e-12);
  EXPECT_EQ(r.storage_bytes, 4 * r.total_enumerated);
  EXPECT_GT(r.manifest_bytes, 0u);
}

TEST(Enumerate, AdaptersAtBaseSize) {
  const auto pf = enumerate_params(
      model_tensor_shapes(base_backbone(), 2, plugin_of(PluginKind::kAdapter)),
      plugin_of(PluginKind::kAdapter), 12);
  EXPECT_EQ(pf.plugin_params_per_task, 1208064u);
  EXPECT_EQ(pf.plugin_params_per_layer, 100672u);
  EXPECT_EQ(pf.formula_added_per_task, 0u);
  const auto hb = enumerate_params(
      model_tensor_shapes(base_backbone(), 2, plugin_of(PluginKind::kAdapterPair)),
      plugin_of(PluginKind::kAdapterPair), 12);
  EXPECT_EQ(hb.plugin_params_per_task, 2 * pf.plugin_params_per_task);
}

TEST(Enumerate, NoPluginLeavesOnlyTheHead) {
  const auto r = enumerate_params(
      model_tensor_shapes(base_backbone(), 4, plugin_of(PluginKind::kNone)),
      plugin_of(PluginKind::kNone), 12);
  EXPECT_EQ(r.plugin_params_per_task, 0u);
  EXPECT_EQ(r.trainable_params, 4u * 768 + 4);
}

TEST(Enumerate, TasksScaleTheAddedPartOnly) {
  const auto plugin = plugin_of(PluginKind::kSpartan);
  const auto shapes = model_tensor_shapes(base_backbone(), 2, plugin);
  const auto one = enumerate_params(shapes, plugin, 12, 1);
  const auto nine = enumerate_params(shapes, plugin, 12, 9);
  EXPECT_EQ(nine.total_enumerated, one.backbone_params + 9 * one.added_params_per_task);
  EXPECT_EQ(nine.total_formula, 86678016u + 10616832u);
}

TEST(Enumerate, ConfigListingMatchesAllocatedModel) {
  const BackboneConfig bb{32, 3, 4, 64, 300, 20};
  for (auto kind : {PluginKind::kSpartan, PluginKind::kAdapter, PluginKind::kAdapterPair,
                    PluginKind::kNone}) {
    const auto plugin = plugin_of(kind, 32);
    const Model m = build_model(bb, 3, plugin, 1);
    const auto listed = model_tensor_shapes(bb, 3, plugin);
    EXPECT_EQ(listed, model_tensor_shapes(m)) << plugin_kind_name(kind);
    const auto r = enumerate_params(m, plugin);
    std::uint64_t walk = 0;
    for (const auto& t : tensors(m)) walk += t.values.size();
    EXPECT_EQ(r.frozen_params + r.trainable_params, walk);
    EXPECT_EQ(r.total_enumerated, walk);
    EXPECT_EQ(r.backbone_params, backbone_oracle(bb));
  }
}

TEST(Report, JsonAndTableFlagTheClosedFormGap) {
  const auto plugin = plugin_of(PluginKind::kSpartan);
  const auto r = enumerate_params(model_tensor_shapes(base_backbone(), 2, plugin), plugin, 12);
  const auto j = nlohmann::json::parse(report_json(r));
  EXPECT_EQ(j.at("plugin_params_per_task").get<std::uint64_t>(), 1032192u);
  EXPECT_TRUE(j.at("formula_mismatch").get<bool>());
  EXPECT_NE(report_table(r).find("[MISMATCH]"), std::string::npos);
  const auto adapter = plugin_of(PluginKind::kAdapter);
  const auto ra =
      enumerate_params(model_tensor_shapes(base_backbone(), 2, adapter), adapter, 12);
  EXPECT_EQ(report_table(ra).find("[MISMATCH]"), std::string::npos);
}

TEST(Enumerate, InvalidConfigurationRejected) {
  PluginConfig p = plugin_of(PluginKind::kSpartan, 64);
  EXPECT_THROW(model_tensor_shapes(base_backbone(), 2, p), ConfigError);
}

}  // namespace
}  // namespace spartan
