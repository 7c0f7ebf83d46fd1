// Copyright 2026 The Spartan Memory Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "spartan/backbone.hpp"
#include "spartan/data.hpp"

namespace spartan {

struct SelectionRecord {
  std::size_t example_index = 0;
  std::size_t label = 0;
  std::size_t layer = 0;
  std::size_t argmax_parent = 0;
  Vector parent_probs;
};

// Routing of the pooled (first) position at `layer` (the last layer when
// unset), one record per example in dataset order. Requires a memory plugin.
std::vector<SelectionRecord> collect_selections(const Model& model,
                                                const std::vector<Example>& dataset,
                                                std::optional<std::size_t> layer = std::nullopt);

struct SpecializationStats {
  std::size_t num_parents = 0;
  std::size_t num_labels = 0;
  // histogram[parent][label]
  std::vector<std::vector<std::size_t>> histogram;
  std::vector<std::size_t> parent_counts;
  // Majority-label share per parent; 0 for parents never chosen.
  std::vector<double> purity;
  double max_purity = 0.0;
  // I(parent; label) / ((H(parent) + H(label)) / 2), in [0, 1].
  double nmi = 0.0;
};

SpecializationStats specialization_stats(const std::vector<SelectionRecord>& records,
                                         std::size_t num_parents, std::size_t num_labels);

void write_selections_csv(const std::filesystem::path& path,
                          const std::vector<SelectionRecord>& records);
std::string specialization_json(const SpecializationStats& stats);

}  // namespace spartan
