// Copyright 2026 The Spartan Memory Authors.
// SPDX-License-Identifier: Apache-2.0

#include "spartan/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>

#include "spartan/errors.hpp"

namespace spartan {

using nlohmann::json;

std::vector<SelectionRecord> collect_selections(const Model& model,
                                                const std::vector<Example>& dataset,
                                                std::optional<std::size_t> layer) {
  if (model.plugin.kind != PluginKind::kSpartan) {
    throw ConfigError("parent selection analysis requires the memory plugin");
  }
  if (dataset.empty()) throw DataError("cannot analyze an empty dataset");
  const std::size_t layers = model.backbone.config.layers;
  const std::size_t target = layer.value_or(layers - 1);
  if (target >= layers) {
    throw ParameterError("layer " + std::to_string(target) + " out of range for " +
                         std::to_string(layers) + " layers");
  }

  std::vector<SelectionRecord> out;
  out.reserve(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto ids = tokenize(dataset[i].text, model.backbone.config);
    const EncodeCache cache = encode_traced(model.backbone, ids, model.plugin);
    const ForwardTrace& trace = cache.layers[target].spartan.front();
    SelectionRecord r;
    r.example_index = i;
    r.label = dataset[i].label;
    r.layer = target;
    r.argmax_parent = topk_indices(trace.parent_probs, 1).front();
    r.parent_probs = trace.parent_probs;
    out.push_back(std::move(r));
  }
  return out;
}

namespace {

double entropy(const std::vector<std::size_t>& counts, double total) {
  double h = 0.0;
  for (auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / total;
    h -= p * std::log(p);
  }
  return h;
}

}  // namespace

SpecializationStats specialization_stats(const std::vector<SelectionRecord>& records,
                                         std::size_t num_parents, std::size_t num_labels) {
  if (records.empty()) throw DataError("no selection records");
  SpecializationStats s;
  s.num_parents = num_parents;
  s.num_labels = num_labels;
  s.histogram.assign(num_parents, std::vector<std::size_t>(num_labels, 0));
  s.parent_counts.assign(num_parents, 0);
  std::vector<std::size_t> label_counts(num_labels, 0);
  for (const auto& r : records) {
    if (r.argmax_parent >= num_parents || r.label >= num_labels) {
      throw ParameterError("selection record outside the declared parent/label range");
    }
    ++s.histogram[r.argmax_parent][r.label];
    ++s.parent_counts[r.argmax_parent];
    ++label_counts[r.label];
  }

  s.purity.assign(num_parents, 0.0);
  for (std::size_t p = 0; p < num_parents; ++p) {
    if (s.parent_counts[p] == 0) continue;
    const auto top = *std::max_element(s.histogram[p].begin(), s.histogram[p].end());
    s.purity[p] = static_cast<double>(top) / static_cast<double>(s.parent_counts[p]);
    s.max_purity = std::max(s.max_purity, s.purity[p]);
  }

  const double n = static_cast<double>(records.size());
  double mutual = 0.0;
  for (std::size_t p = 0; p < num_parents; ++p) {
    for (std::size_t l = 0; l < num_labels; ++l) {
      const auto c = s.histogram[p][l];
      if (c == 0) continue;
      const double joint = static_cast<double>(c) / n;
      mutual += joint * std::log(joint * n * n / (static_cast<double>(s.parent_counts[p]) *
                                                  static_cast<double>(label_counts[l])));
    }
  }
  const double h_parent = entropy(s.parent_counts, n);
  const double h_label = entropy(label_counts, n);
  if (h_parent == 0.0 && h_label == 0.0) {
    s.nmi = 1.0;
  } else if (h_parent == 0.0 || h_label == 0.0) {
    s.nmi = 0.0;
  } else {
    s.nmi = std::clamp(mutual / (0.5 * (h_parent + h_label)), 0.0, 1.0);
  }
  return s;
}

void write_selections_csv(const std::filesystem::path& path,
                          const std::vector<SelectionRecord>& records) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out.precision(17);
  out << "example_id,label,layer,argmax_parent";
  const std::size_t n = records.empty() ? 0 : records.front().parent_probs.size();
  for (std::size_t i = 0; i < n; ++i) out << ",p_" << i;
  out << '\n';
  for (const auto& r : records) {
    out << r.example_index << ',' << r.label << ',' << r.layer << ',' << r.argmax_parent;
    for (auto p : r.parent_probs) out << ',' << p;
    out << '\n';
  }
}

std::string specialization_json(const SpecializationStats& s) {
  json j = {{"num_parents", s.num_parents},
            {"num_labels", s.num_labels},
            {"histogram", s.histogram},
            {"parent_counts", s.parent_counts},
            {"purity", s.purity},
            {"max_purity", s.max_purity},
            {"nmi", s.nmi}};
  return j.dump(2);
}

}  // namespace spartan
