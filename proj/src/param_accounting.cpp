// Copyright 2026 The Spartan Memory Authors.
// SPDX-License-Identifier: Apache-2.0

#include "spartan/param_accounting.hpp"

#include <cstdio>
#include <functional>
#include <json.hpp>
#include <numeric>
#include <sstream>

namespace spartan {

using nlohmann::json;

std::uint64_t spartan_formula_total(std::uint64_t base_params, std::uint64_t tasks,
                                    std::uint64_t parents, std::uint64_t children,
                                    std::uint64_t dim, std::uint64_t layers) {
  return base_params + 2 * tasks * (parents + parents * children) * dim * layers;
}

std::size_t TensorShape::count() const {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::vector<TensorShape> model_tensor_shapes(const BackboneConfig& cfg, std::size_t num_labels,
                                             const PluginConfig& plugin) {
  cfg.validate();
  validate_plugin(cfg, plugin);
  const std::size_t d = cfg.dim, f = cfg.ffn_dim;
  std::vector<TensorShape> out;
  auto frozen = [&](std::string name, std::vector<std::size_t> shape) {
    out.push_back({std::move(name), std::move(shape), false});
  };
  auto trained = [&](std::string name, std::vector<std::size_t> shape) {
    out.push_back({std::move(name), std::move(shape), true});
  };
  frozen("embeddings.token", {cfg.vocab_buckets, d});
  frozen("embeddings.position", {cfg.max_seq_len, d});
  frozen("embeddings.norm_gain", {d});
  frozen("embeddings.norm_bias", {d});
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    const std::string b = "layers." + std::to_string(l) + ".";
    for (const char* proj : {"q", "k", "v", "o"}) {
      frozen(b + "w" + proj, {d, d});
      frozen(b + "b" + proj, {d});
    }
    frozen(b + "norm1_gain", {d});
    frozen(b + "norm1_bias", {d});
    frozen(b + "w1", {f, d});
    frozen(b + "b1", {f});
    frozen(b + "w2", {d, f});
    frozen(b + "b2", {d});
    frozen(b + "norm2_gain", {d});
    frozen(b + "norm2_bias", {d});
  }
  if (plugin.kind == PluginKind::kSpartan) {
    const auto& s = plugin.spartan;
    for (std::size_t l = 0; l < cfg.layers; ++l) {
      const std::string b = "plugin." + std::to_string(l) + ".";
      trained(b + "parents", {s.num_parents, d});
      for (std::size_t i = 0; i < s.num_parents; ++i) {
        trained(b + "child_keys." + std::to_string(i), {s.children_per_parent, d});
      }
      for (std::size_t i = 0; i < s.num_parents; ++i) {
        trained(b + "child_values." + std::to_string(i), {s.children_per_parent, d});
      }
    }
  } else if (plugin.kind != PluginKind::kNone) {
    const std::size_t per = plugin.kind == PluginKind::kAdapterPair ? 2 : 1;
    const std::size_t bn = plugin.adapter.bottleneck;
    for (std::size_t l = 0; l < cfg.layers; ++l) {
      for (std::size_t a = 0; a < per; ++a) {
        const std::string b = "plugin." + std::to_string(l) + ".adapter" + std::to_string(a) + ".";
        trained(b + "down", {bn, d});
        trained(b + "down_bias", {bn});
        trained(b + "up", {d, bn});
        trained(b + "up_bias", {d});
        trained(b + "norm_gain", {d});
        trained(b + "norm_bias", {d});
      }
    }
  }
  trained("head.weight", {num_labels, d});
  trained("head.bias", {num_labels});
  return out;
}

std::vector<TensorShape> model_tensor_shapes(const Model& model) {
  std::vector<TensorShape> out;
  for (const auto& t : tensors(model)) out.push_back({t.name, t.shape, t.trainable});
  return out;
}

ParamReport enumerate_params(const std::vector<TensorShape>& shapes,
                             const PluginConfig& plugin, std::size_t layers,
                             std::uint64_t tasks) {
  ParamReport r;
  r.plugin = std::string(plugin_kind_name(plugin.kind));
  r.tasks = tasks;
  json manifest = json::array();
  for (const auto& t : shapes) {
    const std::uint64_t n = t.count();
    if (t.trainable) {
      r.trainable_params += n;
      if (t.name.rfind("head.", 0) == 0) {
        r.head_params += n;
      } else {
        r.plugin_params_per_task += n;
      }
    } else {
      r.frozen_params += n;
    }
    manifest.push_back({{"name", t.name}, {"shape", t.shape}});
  }
  r.backbone_params = r.frozen_params;
  r.plugin_params_per_layer = layers > 0 ? r.plugin_params_per_task / layers : 0;
  r.added_params_per_task = r.plugin_params_per_task + r.head_params;
  r.total_enumerated = r.backbone_params + tasks * r.added_params_per_task;
  r.storage_bytes = 4 * r.total_enumerated;
  r.manifest_bytes = manifest.dump().size();

  if (plugin.kind == PluginKind::kSpartan) {
    const auto& s = plugin.spartan;
    r.formula_added_per_task =
        spartan_formula_total(0, 1, s.num_parents, s.children_per_parent, s.dim, layers);
    r.total_formula = spartan_formula_total(r.backbone_params, tasks, s.num_parents,
                                            s.children_per_parent, s.dim, layers);
    if (r.plugin_params_per_task > 0) {
      r.formula_gap = (static_cast<double>(r.formula_added_per_task) -
                       static_cast<double>(r.plugin_params_per_task)) /
                      static_cast<double>(r.plugin_params_per_task);
    }
  }
  return r;
}

ParamReport enumerate_params(const Model& model, const PluginConfig& plugin,
                             std::uint64_t tasks) {
  return enumerate_params(model_tensor_shapes(model), plugin, model.backbone.config.layers,
                          tasks);
}

std::string report_json(const ParamReport& r) {
  json j = {{"plugin", r.plugin},
            {"tasks", r.tasks},
            {"backbone_params", r.backbone_params},
            {"head_params", r.head_params},
            {"plugin_params_per_layer", r.plugin_params_per_layer},
            {"plugin_params_per_task", r.plugin_params_per_task},
            {"added_params_per_task", r.added_params_per_task},
            {"frozen_params", r.frozen_params},
            {"trainable_params", r.trainable_params},
            {"total_enumerated", r.total_enumerated},
            {"storage_bytes", r.storage_bytes},
            {"manifest_bytes", r.manifest_bytes}};
  if (r.plugin == "spartan") {
    j["formula_added_per_task"] = r.formula_added_per_task;
    j["total_formula"] = r.total_formula;
    j["formula_gap"] = r.formula_gap;
    j["formula_mismatch"] = r.formula_added_per_task != r.plugin_params_per_task;
  }
  return j.dump(2);
}

std::string report_table(const ParamReport& r) {
  std::ostringstream os;
  auto row = [&](const char* label, std::uint64_t v) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "  %-34s %16llu\n", label,
                  static_cast<unsigned long long>(v));
    os << buf;
  };
  os << "plugin: " << r.plugin << "  tasks: " << r.tasks << '\n';
  row("backbone (frozen)", r.backbone_params);
  row("plugin per layer", r.plugin_params_per_layer);
  row("plugin per task (enumerated)", r.plugin_params_per_task);
  row("head per task", r.head_params);
  row("added per task", r.added_params_per_task);
  row("total (enumerated)", r.total_enumerated);
  if (r.plugin == "spartan") {
    row("plugin per task (closed form)", r.formula_added_per_task);
    row("total (closed form)", r.total_formula);
    char buf[128];
    std::snprintf(buf, sizeof(buf), "  %-34s %+15.2f%%%s\n", "closed form vs enumerated",
                  100.0 * r.formula_gap,
                  r.formula_added_per_task != r.plugin_params_per_task ? "  [MISMATCH]" : "");
    os << buf;
  }
  row("storage bytes (fp32)", r.storage_bytes);
  row("manifest bytes", r.manifest_bytes);
  return os.str();
}

}  // namespace spartan
