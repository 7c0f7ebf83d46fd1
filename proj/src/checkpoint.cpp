// Copyright 2026 The Spartan Memory Authors.
// SPDX-License-Identifier: Apache-2.0

#include "spartan/checkpoint.hpp"

#include <fstream>
#include <sstream>
#include <unordered_map>

#include "spartan/errors.hpp"

namespace spartan {

using nlohmann::json;

namespace {

template <typename T>
void read_field(const json& obj, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field '") + key + "': " + e.what());
  }
}

std::string pooling_name(Pooling p) { return p == Pooling::kMean ? "mean" : "first"; }

Pooling parse_pooling(const std::string& name) {
  if (name == "first") return Pooling::kFirstToken;
  if (name == "mean") return Pooling::kMean;
  throw ConfigError("unknown pooling '" + name + "' (valid: first, mean)");
}

}  // namespace

void RunConfig::validate() const {
  backbone.validate();
  validate_plugin(backbone, plugin);
  train.validate();
}

RunConfig run_config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig cfg;
  read_field(j, "seed", cfg.seed);
  read_field(j, "num_labels", cfg.num_labels);

  if (j.contains("backbone")) {
    const auto& b = j["backbone"];
    read_field(b, "dim", cfg.backbone.dim);
    read_field(b, "layers", cfg.backbone.layers);
    read_field(b, "heads", cfg.backbone.heads);
    read_field(b, "ffn_dim", cfg.backbone.ffn_dim);
    read_field(b, "vocab_buckets", cfg.backbone.vocab_buckets);
    read_field(b, "max_seq_len", cfg.backbone.max_seq_len);
    std::string pooling = pooling_name(cfg.backbone.pooling);
    read_field(b, "pooling", pooling);
    cfg.backbone.pooling = parse_pooling(pooling);
  }

  cfg.plugin.spartan.dim = cfg.backbone.dim;
  cfg.plugin.adapter.dim = cfg.backbone.dim;
  if (j.contains("plugin")) {
    const auto& p = j["plugin"];
    std::string kind(plugin_kind_name(cfg.plugin.kind));
    read_field(p, "kind", kind);
    cfg.plugin.kind = parse_plugin_kind(kind);
    read_field(p, "dim", cfg.plugin.spartan.dim);
    cfg.plugin.adapter.dim = cfg.plugin.spartan.dim;
    read_field(p, "num_parents", cfg.plugin.spartan.num_parents);
    read_field(p, "children_per_parent", cfg.plugin.spartan.children_per_parent);
    read_field(p, "top_k", cfg.plugin.spartan.top_k);
    read_field(p, "bottleneck", cfg.plugin.adapter.bottleneck);
  }

  cfg.train.learning_rate = default_learning_rate(cfg.plugin.kind);
  cfg.train.seed = cfg.seed;
  if (j.contains("train")) {
    const auto& t = j["train"];
    read_field(t, "learning_rate", cfg.train.learning_rate);
    read_field(t, "batch_size", cfg.train.batch_size);
    read_field(t, "steps", cfg.train.steps);
    read_field(t, "few_shot_steps", cfg.train.few_shot_steps);
    read_field(t, "beta1", cfg.train.beta1);
    read_field(t, "beta2", cfg.train.beta2);
    read_field(t, "epsilon", cfg.train.epsilon);
    read_field(t, "weight_decay", cfg.train.weight_decay);
    read_field(t, "eval_every", cfg.train.eval_every);
  }
  if (j.contains("data")) {
    const auto& d = j["data"];
    read_field(d, "train", cfg.data.train);
    read_field(d, "eval", cfg.data.eval);
    read_field(d, "labels", cfg.data.labels);
  }
  return cfg;
}

json run_config_to_json(const RunConfig& cfg) {
  const auto& b = cfg.backbone;
  const auto& p = cfg.plugin;
  const auto& t = cfg.train;
  return {
      {"seed", cfg.seed},
      {"num_labels", cfg.num_labels},
      {"backbone",
       {{"dim", b.dim},
        {"layers", b.layers},
        {"heads", b.heads},
        {"ffn_dim", b.ffn_dim},
        {"vocab_buckets", b.vocab_buckets},
        {"max_seq_len", b.max_seq_len},
        {"pooling", pooling_name(b.pooling)}}},
      {"plugin",
       {{"kind", plugin_kind_name(p.kind)},
        {"dim", p.spartan.dim},
        {"num_parents", p.spartan.num_parents},
        {"children_per_parent", p.spartan.children_per_parent},
        {"top_k", p.spartan.top_k},
        {"bottleneck", p.adapter.bottleneck}}},
      {"train",
       {{"learning_rate", t.learning_rate},
        {"batch_size", t.batch_size},
        {"steps", t.steps},
        {"few_shot_steps", t.few_shot_steps},
        {"beta1", t.beta1},
        {"beta2", t.beta2},
        {"epsilon", t.epsilon},
        {"weight_decay", t.weight_decay},
        {"eval_every", t.eval_every}}},
      {"data", {{"train", cfg.data.train}, {"eval", cfg.data.eval}, {"labels", cfg.data.labels}}}};
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config file " + path.string() + ": " + e.what());
  }
  return run_config_from_json(j);
}

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  json tensors_json = json::array();
  for (const auto& t : tensors(ckpt.model)) {
    tensors_json.push_back({{"name", t.name},
                            {"shape", t.shape},
                            {"trainable", t.trainable},
                            {"values", std::vector<Scalar>(t.values.begin(), t.values.end())}});
  }
  json j = {{"format_version", kCheckpointFormatVersion},
            {"config", run_config_to_json(ckpt.config)},
            {"labels", ckpt.labels ? json(*ckpt.labels) : json(nullptr)},
            {"seed", ckpt.config.seed},
            {"tensors", std::move(tensors_json)}};
  return j.dump();
}

Checkpoint deserialize_checkpoint(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || j.value("format_version", -1) != kCheckpointFormatVersion) {
    throw DataError("unsupported checkpoint format version");
  }
  Checkpoint ckpt;
  ckpt.config = run_config_from_json(j.at("config"));
  ckpt.config.validate();
  if (j.contains("labels") && j["labels"].is_object()) {
    ckpt.labels = j["labels"].get<LabelManifest>();
  }

  const auto& entries = j.at("tensors");
  std::unordered_map<std::string, const json*> by_name;
  for (const auto& e : entries) by_name[e.at("name").get<std::string>()] = &e;

  std::size_t num_labels = ckpt.config.num_labels;
  if (const auto it = by_name.find("head.bias"); it != by_name.end()) {
    num_labels = it->second->at("shape").at(0).get<std::size_t>();
  }
  // Shapes come from the config; weights from the tensor map.
  ckpt.model = Model{};
  Rng rng(0);
  ckpt.model.backbone = init_backbone(ckpt.config.backbone, num_labels, rng);
  ckpt.model.plugin = init_plugin(ckpt.config.backbone, ckpt.config.plugin, rng);
  auto views = tensors(ckpt.model);
  if (views.size() != entries.size()) {
    throw DataError("checkpoint holds " + std::to_string(entries.size()) +
                    " tensors, configuration implies " + std::to_string(views.size()));
  }
  for (auto& v : views) {
    const auto it = by_name.find(v.name);
    if (it == by_name.end()) throw DataError("checkpoint is missing tensor " + v.name);
    const json& e = *it->second;
    if (e.at("shape").get<std::vector<std::size_t>>() != v.shape) {
      throw DataError("checkpoint tensor " + v.name + " has an unexpected shape");
    }
    const auto values = e.at("values").get<std::vector<Scalar>>();
    if (values.size() != v.values.size()) {
      throw DataError("checkpoint tensor " + v.name + " has the wrong element count");
    }
    std::copy(values.begin(), values.end(), v.values.begin());
  }
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out << serialize_checkpoint(ckpt);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_checkpoint(buf.str());
}

}  // namespace spartan
