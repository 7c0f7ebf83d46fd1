// Copyright 2026 The Spartan Memory Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Run configuration and checkpoint files, both JSON.
//
// Config schema (every field optional; defaults shown by `spartan config`):
//   {
//     "seed": 0,
//     "num_labels": 0,                 // 0 = infer from the training data
//     "backbone": {"dim", "layers", "heads", "ffn_dim", "vocab_buckets",
//                  "max_seq_len", "pooling": "first" | "mean"},
//     "plugin":   {"kind": "none" | "spartan" | "adapter" | "adapter2",
//                  "dim", "num_parents", "children_per_parent", "top_k",
//                  "bottleneck"},
//     "train":    {"learning_rate", "batch_size", "steps", "few_shot_steps",
//                  "beta1", "beta2", "epsilon", "weight_decay", "eval_every"},
//     "data":     {"train", "eval", "labels"}
//   }
// A plugin "dim" that disagrees with the backbone dim is rejected; when absent
// it follows the backbone. A missing learning rate follows the plugin kind.
//
// Checkpoint: {"format_version", "config", "labels", "seed", "tensors": [
//   {"name", "shape", "trainable", "values"}]}. Values are written in
// shortest round-trip form, so save/load is bitwise lossless.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "spartan/backbone.hpp"
#include "spartan/data.hpp"
#include "spartan/training.hpp"

namespace spartan {

inline constexpr int kCheckpointFormatVersion = 1;

struct DataPaths {
  std::string train;
  std::string eval;
  std::string labels;

  bool operator==(const DataPaths&) const = default;
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::size_t num_labels = 0;
  BackboneConfig backbone;
  PluginConfig plugin;
  TrainConfig train;
  DataPaths data;

  // Cross-field checks; messages name both sides of a mismatch.
  void validate() const;
  bool operator==(const RunConfig&) const = default;
};

RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json run_config_to_json(const RunConfig& cfg);
RunConfig load_run_config(const std::filesystem::path& path);

struct Checkpoint {
  RunConfig config;
  std::optional<LabelManifest> labels;
  Model model;
};

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::string& text);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace spartan
