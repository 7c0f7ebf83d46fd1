// Copyright 2026 The Spartan Memory Authors.
// SPDX-License-Identifier: Apache-2.0

#include "spartan/data.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <json.hpp>

#include "spartan/errors.hpp"

namespace spartan {

using nlohmann::json;

const std::vector<std::string>& default_topic_names() {
  static const std::vector<std::string> names = {
      "business", "entertainment", "sports", "politics", "tech",
      "science",  "health",        "travel", "food",     "weather"};
  return names;
}

std::vector<std::vector<std::string>> SyntheticTopicTask::pools() const {
  if (!keyword_pools.empty()) return keyword_pools;
  const auto& names = default_topic_names();
  std::vector<std::vector<std::string>> out(num_topics);
  for (std::size_t t = 0; t < num_topics; ++t) {
    const std::string stem = t < names.size() ? names[t] : "topic" + std::to_string(t);
    for (std::size_t k = 0; k < keywords_per_topic; ++k) {
      out[t].push_back(stem + "_" + std::to_string(k));
    }
  }
  return out;
}

void SyntheticTopicTask::validate() const {
  if (num_topics < 1) throw ConfigError("synthetic task needs at least one topic");
  if (!keyword_pools.empty() && keyword_pools.size() != num_topics) {
    throw ConfigError("keyword_pools has " + std::to_string(keyword_pools.size()) +
                      " pools for " + std::to_string(num_topics) + " topics");
  }
  const auto all = pools();
  for (std::size_t t = 0; t < all.size(); ++t) {
    if (all[t].empty()) throw ConfigError("topic " + std::to_string(t) + " has an empty keyword pool");
  }
  for (std::size_t a = 0; a < all.size(); ++a) {
    for (std::size_t b = a + 1; b < all.size(); ++b) {
      for (const auto& w : all[a]) {
        if (std::find(all[b].begin(), all[b].end(), w) != all[b].end()) {
          throw ConfigError("keyword '" + w + "' appears in more than one topic pool");
        }
      }
    }
  }
  if (min_words < 1 || max_words < min_words) throw ConfigError("invalid word-count range");
  if (noise < 0.0 || noise > 1.0) throw ConfigError("noise must lie in [0, 1]");
}

std::vector<Example> generate_topic_dataset(const SyntheticTopicTask& task, Rng& rng) {
  task.validate();
  const auto all = task.pools();
  const std::size_t topics = task.num_topics;
  std::vector<Example> out;
  out.reserve(topics * task.examples_per_topic);
  for (std::size_t n = 0; n < task.examples_per_topic; ++n) {
    for (std::size_t label = 0; label < topics; ++label) {
      const std::size_t words =
          task.min_words + rng.index(task.max_words - task.min_words + 1);
      Example ex;
      ex.label = label;
      for (std::size_t w = 0; w < words; ++w) {
        std::size_t source = label;
        if (topics > 1 && rng.uniform() < task.noise) {
          source = rng.index(topics - 1);
          if (source >= label) ++source;
        }
        const auto& pool = all[source];
        if (!ex.text.empty()) ex.text.push_back(' ');
        ex.text += pool[rng.index(pool.size())];
      }
      out.push_back(std::move(ex));
    }
  }
  return out;
}

LabelManifest load_label_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open label manifest " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("label manifest " + path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw DataError("label manifest " + path.string() + " must be an object");
  LabelManifest labels;
  for (const auto& [name, id] : j.items()) {
    if (!id.is_number_unsigned()) {
      throw DataError("label manifest " + path.string() + ": id for '" + name +
                      "' is not a non-negative integer");
    }
    labels[name] = id.get<std::size_t>();
  }
  return labels;
}

void save_label_manifest(const std::filesystem::path& path, const LabelManifest& labels) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << json(labels).dump(2) << '\n';
}

std::vector<Example> load_jsonl(const std::filesystem::path& path,
                                const std::optional<LabelManifest>& labels) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open data file " + path.string());
  std::vector<Example> out;
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& why) {
    throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) {
      continue;
    }
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      fail(std::string("malformed JSON (") + e.what() + ")");
    }
    if (!j.is_object()) fail("expected a JSON object");
    if (!j.contains("text") || !j["text"].is_string()) fail("missing string field \"text\"");
    if (!j.contains("label")) fail("missing field \"label\"");
    Example ex;
    ex.text = j["text"].get<std::string>();
    const auto& label = j["label"];
    if (label.is_number_unsigned()) {
      ex.label = label.get<std::size_t>();
    } else if (label.is_string()) {
      if (!labels) fail("string label '" + label.get<std::string>() + "' but no label manifest");
      const auto it = labels->find(label.get<std::string>());
      if (it == labels->end()) fail("label '" + label.get<std::string>() + "' not in manifest");
      ex.label = it->second;
    } else {
      fail("\"label\" must be a non-negative integer or a string");
    }
    out.push_back(std::move(ex));
  }
  return out;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<Example>& examples) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& ex : examples) {
    out << json{{"text", ex.text}, {"label", ex.label}}.dump() << '\n';
  }
}

std::size_t count_labels(const std::vector<Example>& examples) {
  std::size_t n = 0;
  for (const auto& ex : examples) n = std::max(n, ex.label + 1);
  return n;
}

std::vector<Example> few_shot_sample(const std::vector<Example>& examples, std::size_t k,
                                     Rng& rng) {
  if (k > examples.size()) {
    throw ParameterError("few-shot sample of " + std::to_string(k) + " from only " +
                         std::to_string(examples.size()) + " examples");
  }
  const std::size_t labels = count_labels(examples);
  std::vector<std::vector<std::size_t>> by_label(labels);
  for (std::size_t i = 0; i < examples.size(); ++i) by_label[examples[i].label].push_back(i);
  for (auto& bucket : by_label) rng.shuffle(bucket);

  // Round-robin over labels keeps counts within one of each other until a
  // label runs dry; its share then goes to the remaining labels.
  std::vector<std::size_t> taken(labels, 0);
  std::vector<std::size_t> picked;
  picked.reserve(k);
  while (picked.size() < k) {
    for (std::size_t l = 0; l < labels && picked.size() < k; ++l) {
      if (taken[l] < by_label[l].size()) picked.push_back(by_label[l][taken[l]++]);
    }
  }
  rng.shuffle(picked);
  std::vector<Example> out;
  out.reserve(k);
  for (auto i : picked) out.push_back(examples[i]);
  return out;
}

}  // namespace spartan
