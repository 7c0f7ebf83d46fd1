// Copyright 2026 The Spartan Memory Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "spartan/numerics.hpp"

namespace spartan {

struct Example {
  std::string text;
  std::size_t label = 0;

  bool operator==(const Example&) const = default;
};

// Bag-of-keywords topic classification. Each topic owns a disjoint keyword
// pool; every word of an example comes from its own topic's pool except with
// probability `noise`, when it is drawn from another topic's pool.
struct SyntheticTopicTask {
  std::size_t num_topics = 4;
  std::size_t keywords_per_topic = 24;
  std::size_t examples_per_topic = 250;
  std::size_t min_words = 6;
  std::size_t max_words = 10;
  double noise = 0.05;
  // Optional explicit pools; generated as "<topic name>_<k>" words when empty.
  std::vector<std::vector<std::string>> keyword_pools;

  std::vector<std::vector<std::string>> pools() const;
  void validate() const;
};

// Topic names used for generated pools, in label order.
const std::vector<std::string>& default_topic_names();

// Labels are interleaved (0, 1, ..., T-1, 0, ...) so any prefix is balanced
// within one example per label.
std::vector<Example> generate_topic_dataset(const SyntheticTopicTask& task, Rng& rng);

// String label -> id; written/read as "labels.json".
using LabelManifest = std::map<std::string, std::size_t>;

LabelManifest load_label_manifest(const std::filesystem::path& path);
void save_label_manifest(const std::filesystem::path& path, const LabelManifest& labels);

// One JSON object per line with "text" and "label". Integer labels are taken
// as ids; string labels are mapped through `labels` (required then). Blank
// lines are skipped. Throws DataError naming the first offending line.
std::vector<Example> load_jsonl(const std::filesystem::path& path,
                                const std::optional<LabelManifest>& labels = std::nullopt);
void write_jsonl(const std::filesystem::path& path, const std::vector<Example>& examples);

// k examples without replacement, split across labels as evenly as the data
// allows (counts differ by at most one when every label has enough
// examples). The result is shuffled.
std::vector<Example> few_shot_sample(const std::vector<Example>& examples, std::size_t k,
                                     Rng& rng);

std::size_t count_labels(const std::vector<Example>& examples);

}  // namespace spartan
