// Copyright 2026 The Spartan Memory Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spartan/backbone.hpp"

namespace spartan {

// N_base + 2 T (P + P C) d L, the closed-form storage count quoted for the
// memory layer. Note that it charges the parent term twice; the exact count
// of a layer is (P + 2 P C) d.
std::uint64_t spartan_formula_total(std::uint64_t base_params, std::uint64_t tasks,
                                    std::uint64_t parents, std::uint64_t children,
                                    std::uint64_t dim, std::uint64_t layers);

struct TensorShape {
  std::string name;
  std::vector<std::size_t> shape;
  bool trainable = false;

  std::size_t count() const;
  bool operator==(const TensorShape&) const = default;
};

// Tensor listing derived from configuration alone (no weights allocated);
// matches tensors(build_model(...)) name-for-name.
std::vector<TensorShape> model_tensor_shapes(const BackboneConfig& backbone,
                                             std::size_t num_labels,
                                             const PluginConfig& plugin);
std::vector<TensorShape> model_tensor_shapes(const Model& model);

struct ParamReport {
  std::string plugin;
  std::uint64_t backbone_params = 0;       // frozen
  std::uint64_t head_params = 0;           // per task
  std::uint64_t plugin_params_per_task = 0;
  std::uint64_t plugin_params_per_layer = 0;
  std::uint64_t added_params_per_task = 0; // plugin + head
  std::uint64_t tasks = 1;
  std::uint64_t frozen_params = 0;         // single-task model
  std::uint64_t trainable_params = 0;      // single-task model
  std::uint64_t total_enumerated = 0;      // backbone + tasks * added
  // Closed-form figures; only meaningful for the memory plugin.
  std::uint64_t formula_added_per_task = 0;
  std::uint64_t total_formula = 0;
  double formula_gap = 0.0;  // (formula - enumerated) / enumerated, plugin only
  std::uint64_t storage_bytes = 0;   // 4 bytes per scalar of total_enumerated
  std::uint64_t manifest_bytes = 0;  // tensor-name/shape manifest, reported apart
};

ParamReport enumerate_params(const std::vector<TensorShape>& shapes,
                             const PluginConfig& plugin, std::size_t layers,
                             std::uint64_t tasks = 1);
ParamReport enumerate_params(const Model& model, const PluginConfig& plugin,
                             std::uint64_t tasks = 1);

std::string report_json(const ParamReport& report);
std::string report_table(const ParamReport& report);

}  // namespace spartan
