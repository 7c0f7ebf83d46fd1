// Copyright 2026 The Spartan Memory Authors.
// SPDX-License-Identifier: Apache-2.0

// spartan: train, eval, bench, analyze, params, synth, config.
//
// Precedence for train/params: built-in defaults, then --config, then flags.
// Exit codes: 0 success, 1 usage or configuration, 2 data, 3 numerical.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "spartan/analysis.hpp"
#include "spartan/bench.hpp"
#include "spartan/checkpoint.hpp"
#include "spartan/errors.hpp"
#include "spartan/param_accounting.hpp"
#include "spartan/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace spartan;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

// Flags that can override any RunConfig field.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> dim, layers, heads, ffn_dim, max_seq_len;
  std::optional<std::string> plugin;
  std::optional<std::size_t> parents, children, top_k, bottleneck;
  std::optional<double> lr;
  std::optional<std::size_t> batch, steps, few_shot_steps, eval_every;

  void attach(CLI::App& cmd) {
    cmd.add_option("--seed", seed, "Random seed");
    cmd.add_option("--dim", dim, "Backbone hidden size");
    cmd.add_option("--layers", layers, "Encoder layers");
    cmd.add_option("--heads", heads, "Attention heads");
    cmd.add_option("--ffn-dim", ffn_dim, "Feed-forward width");
    cmd.add_option("--max-seq-len", max_seq_len, "Token limit including BOS");
    cmd.add_option("--plugin", plugin, "none | spartan | adapter | adapter2");
    cmd.add_option("--parents", parents, "Memory parent cells N");
    cmd.add_option("--children", children, "Child cells per parent c");
    cmd.add_option("--top-k", top_k, "Selected parents K");
    cmd.add_option("--bottleneck", bottleneck, "Adapter bottleneck b");
    cmd.add_option("--lr", lr, "Learning rate");
    cmd.add_option("--batch", batch, "Batch size");
    cmd.add_option("--steps", steps, "Training steps");
    cmd.add_option("--few-shot-steps", few_shot_steps, "Training steps in few-shot mode");
    cmd.add_option("--eval-every", eval_every, "Held-out evaluation interval");
  }

  void apply(RunConfig& cfg) const {
    if (seed) cfg.seed = cfg.train.seed = *seed;
    if (dim) cfg.backbone.dim = cfg.plugin.spartan.dim = cfg.plugin.adapter.dim = *dim;
    if (layers) cfg.backbone.layers = *layers;
    if (heads) cfg.backbone.heads = *heads;
    if (ffn_dim) cfg.backbone.ffn_dim = *ffn_dim;
    if (max_seq_len) cfg.backbone.max_seq_len = *max_seq_len;
    if (plugin) {
      const bool lr_was_default = cfg.train.learning_rate == default_learning_rate(cfg.plugin.kind);
      cfg.plugin.kind = parse_plugin_kind(*plugin);
      if (lr_was_default) cfg.train.learning_rate = default_learning_rate(cfg.plugin.kind);
    }
    if (parents) cfg.plugin.spartan.num_parents = *parents;
    if (children) cfg.plugin.spartan.children_per_parent = *children;
    if (top_k) cfg.plugin.spartan.top_k = *top_k;
    if (bottleneck) cfg.plugin.adapter.bottleneck = *bottleneck;
    if (lr) cfg.train.learning_rate = *lr;
    if (batch) cfg.train.batch_size = *batch;
    if (steps) cfg.train.steps = *steps;
    if (few_shot_steps) cfg.train.few_shot_steps = *few_shot_steps;
    if (eval_every) cfg.train.eval_every = *eval_every;
  }
};

RunConfig resolve_config(const std::string& config_path, const Overrides& overrides) {
  RunConfig cfg = config_path.empty() ? run_config_from_json(json::object())
                                      : load_run_config(config_path);
  overrides.apply(cfg);
  return cfg;
}

std::optional<LabelManifest> maybe_manifest(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return load_label_manifest(path);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

fs::path with_suffix(const fs::path& prefix, const std::string& suffix) {
  return fs::path(prefix.string() + suffix);
}

int cmd_train(const std::string& config_path, const Overrides& overrides,
              std::string data_path, std::string eval_path, std::string labels_path,
              std::optional<std::size_t> few_shot, const std::string& out_path,
              std::string metrics_path) {
  RunConfig cfg = resolve_config(config_path, overrides);
  if (!data_path.empty()) cfg.data.train = data_path;
  if (!eval_path.empty()) cfg.data.eval = eval_path;
  if (!labels_path.empty()) cfg.data.labels = labels_path;
  if (cfg.data.train.empty()) throw ConfigError("no training data given (--data or data.train)");

  const auto manifest = maybe_manifest(cfg.data.labels);
  std::vector<Example> train_set = load_jsonl(cfg.data.train, manifest);
  std::vector<Example> eval_set;
  if (!cfg.data.eval.empty()) eval_set = load_jsonl(cfg.data.eval, manifest);
  if (train_set.empty()) throw DataError("training data " + cfg.data.train + " is empty");

  std::size_t labels_in_data = count_labels(train_set);
  if (!eval_set.empty()) labels_in_data = std::max(labels_in_data, count_labels(eval_set));
  if (manifest) labels_in_data = std::max(labels_in_data, manifest->size());
  if (cfg.num_labels == 0) {
    cfg.num_labels = labels_in_data;
  } else if (cfg.num_labels < labels_in_data) {
    throw DataError("config declares " + std::to_string(cfg.num_labels) +
                    " labels but the data uses " + std::to_string(labels_in_data));
  }
  cfg.validate();

  TrainConfig train_cfg = cfg.train;
  if (few_shot) {
    Rng sampler = Rng(cfg.seed).fork(5);
    train_set = few_shot_sample(train_set, *few_shot, sampler);
    train_cfg.steps = train_cfg.few_shot_steps;
  }

  Checkpoint ckpt;
  ckpt.config = cfg;
  ckpt.labels = manifest;
  ckpt.model = build_model(cfg.backbone, cfg.num_labels, cfg.plugin, cfg.seed);
  const TrainResult result =
      train(ckpt.model, train_set, train_cfg, eval_set.empty() ? nullptr : &eval_set);

  save_checkpoint(out_path, ckpt);
  if (metrics_path.empty()) metrics_path = with_suffix(out_path, ".metrics.csv").string();
  write_metrics_csv(metrics_path, result.history);

  std::cout << "trained " << train_set.size() << " examples for " << train_cfg.steps << " steps";
  if (!result.history.empty()) {
    const auto& last = result.history.back();
    std::cout << "; final loss " << last.loss;
    if (last.eval_accuracy) std::cout << "; held-out accuracy " << *last.eval_accuracy;
  }
  std::cout << "\ncheckpoint " << out_path << "\nmetrics " << metrics_path << '\n';
  return 0;
}

int cmd_eval(const std::string& model_path, const std::string& data_path,
             const std::string& out_path) {
  const Checkpoint ckpt = load_checkpoint(model_path);
  const auto data = load_jsonl(data_path, ckpt.labels);
  const double acc = evaluate(ckpt.model, data);
  std::printf("accuracy %.6f\n", acc);
  const json report = {{"model", model_path},
                       {"data", data_path},
                       {"examples", data.size()},
                       {"accuracy", acc}};
  if (out_path.empty()) {
    std::cout << report.dump(2) << '\n';
  } else {
    write_text(out_path, report.dump(2) + "\n");
  }
  return 0;
}

int cmd_bench(BenchConfig cfg, const std::string& arch, const std::string& mode,
              std::optional<std::size_t> dim, const std::string& out_prefix) {
  cfg.arch = parse_bench_arch(arch);
  cfg.mode = parse_bench_mode(mode);
  if (dim) cfg.backbone.dim = cfg.spartan.dim = cfg.adapter.dim = *dim;
  cfg.validate();
  TrainConfig train_cfg;
  train_cfg.seed = cfg.seed;
  train_cfg.learning_rate = default_learning_rate(cfg.plugin_config().kind);
  const BenchReport report = run_bench(cfg, train_cfg);
  std::printf("%s %s: %.1f instances/min (%llu macs/instance)\n",
              std::string(bench_arch_name(cfg.arch)).c_str(),
              std::string(bench_mode_name(cfg.mode)).c_str(), report.instances_per_minute,
              static_cast<unsigned long long>(report.macs_per_instance));
  if (!out_prefix.empty()) {
    write_text(with_suffix(out_prefix, ".json"), bench_json(report) + "\n");
    write_text(with_suffix(out_prefix, ".csv"), bench_csv_header() + "\n" + bench_csv_row(report) + "\n");
  }
  return 0;
}

int cmd_analyze(const std::string& model_path, const std::string& data_path,
                const std::string& layer_arg, const std::string& out_prefix) {
  const Checkpoint ckpt = load_checkpoint(model_path);
  const auto data = load_jsonl(data_path, ckpt.labels);
  std::optional<std::size_t> layer;
  if (layer_arg != "last") {
    try {
      std::size_t used = 0;
      layer = std::stoul(layer_arg, &used);
      if (used != layer_arg.size()) throw std::invalid_argument(layer_arg);
    } catch (const std::logic_error&) {
      throw ParameterError("--layer must be 'last' or a non-negative index, got '" + layer_arg + "'");
    }
  }
  const auto records = collect_selections(ckpt.model, data, layer);
  const std::size_t labels = std::max(ckpt.model.backbone.num_labels(), count_labels(data));
  const auto stats =
      specialization_stats(records, ckpt.config.plugin.spartan.num_parents, labels);
  write_selections_csv(with_suffix(out_prefix, ".selections.csv"), records);
  write_text(with_suffix(out_prefix, ".summary.json"), specialization_json(stats) + "\n");
  std::printf("layer %zu: %zu examples, max purity %.4f, nmi %.4f\n", records.front().layer,
              records.size(), stats.max_purity, stats.nmi);
  return 0;
}

int cmd_params(const std::string& config_path, const Overrides& overrides, std::uint64_t tasks,
               std::size_t num_labels, bool as_json) {
  RunConfig cfg;
  if (config_path.empty()) {
    // Base-size shapes (768 wide, 12 layers) unless a config is given.
    const BenchConfig base;
    cfg.backbone = base.backbone;
    cfg.plugin.kind = PluginKind::kSpartan;
    cfg.plugin.spartan = base.spartan;
    cfg.plugin.adapter = base.adapter;
    overrides.apply(cfg);
  } else {
    cfg = resolve_config(config_path, overrides);
  }
  if (cfg.num_labels == 0) cfg.num_labels = num_labels;
  cfg.validate();
  const auto shapes = model_tensor_shapes(cfg.backbone, cfg.num_labels, cfg.plugin);
  const ParamReport report = enumerate_params(shapes, cfg.plugin, cfg.backbone.layers, tasks);
  std::cout << (as_json ? report_json(report) : report_table(report)) << '\n';
  return 0;
}

int cmd_synth(std::size_t topics, std::size_t per_topic, double noise, std::uint64_t seed,
              const std::string& out_path, const std::string& labels_path) {
  SyntheticTopicTask task;
  task.num_topics = topics;
  task.examples_per_topic = per_topic;
  task.noise = noise;
  task.validate();
  Rng rng(seed);
  write_jsonl(out_path, generate_topic_dataset(task, rng));
  if (!labels_path.empty()) {
    LabelManifest manifest;
    const auto& names = default_topic_names();
    for (std::size_t t = 0; t < topics; ++t) {
      manifest[t < names.size() ? names[t] : "topic" + std::to_string(t)] = t;
    }
    save_label_manifest(labels_path, manifest);
  }
  std::printf("wrote %zu examples to %s\n", topics * per_topic, out_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse hierarchical memory for parameter-efficient fine-tuning"};
  app.require_subcommand(1);

  auto* train_cmd = app.add_subcommand("train", "Train plugin and head on a JSONL dataset");
  std::string train_config, train_data, train_eval, train_labels, train_out, train_metrics;
  std::optional<std::size_t> few_shot;
  Overrides train_over;
  train_cmd->add_option("--config", train_config, "JSON run configuration");
  train_cmd->add_option("--data", train_data, "Training JSONL");
  train_cmd->add_option("--eval", train_eval, "Held-out JSONL evaluated during training");
  train_cmd->add_option("--labels", train_labels, "Label manifest for string labels");
  train_cmd->add_option("--few-shot", few_shot, "Train on N stratified samples")
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--out", train_out, "Checkpoint path")->required();
  train_cmd->add_option("--metrics", train_metrics, "Metrics CSV (default <out>.metrics.csv)");
  train_over.attach(*train_cmd);

  auto* eval_cmd = app.add_subcommand("eval", "Accuracy of a checkpoint on a JSONL dataset");
  std::string eval_model, eval_data, eval_out;
  eval_cmd->add_option("--model", eval_model, "Checkpoint")->required();
  eval_cmd->add_option("--data", eval_data, "JSONL dataset")->required();
  eval_cmd->add_option("--out", eval_out, "Write the JSON report here instead of stdout");

  auto* bench_cmd = app.add_subcommand("bench", "Throughput benchmark");
  BenchConfig bench_cfg;
  std::string bench_arch = "spartan", bench_mode = "inference", bench_out;
  std::optional<std::size_t> bench_dim;
  bench_cmd->add_option("--arch", bench_arch, "spartan | adapter | adapter2 | none | spartan-dense");
  bench_cmd->add_option("--mode", bench_mode, "inference | finetune | micro");
  bench_cmd->add_option("--threads", bench_cfg.threads, "Worker thread cap")->capture_default_str();
  bench_cmd->add_option("--batch", bench_cfg.batch_size, "Batch size")->capture_default_str();
  bench_cmd->add_option("--seq-len", bench_cfg.seq_len, "Tokens per instance")->capture_default_str();
  bench_cmd->add_option("--warmup", bench_cfg.warmup_batches, "Warmup batches")->capture_default_str();
  bench_cmd->add_option("--seconds", bench_cfg.measure_seconds, "Measurement window (>= 1)")
      ->capture_default_str();
  bench_cmd->add_option("--seed", bench_cfg.seed, "Random seed");
  bench_cmd->add_option("--dim", bench_dim, "Hidden size for backbone and plugin");
  bench_cmd->add_option("--layers", bench_cfg.backbone.layers, "Encoder layers")->capture_default_str();
  bench_cmd->add_option("--heads", bench_cfg.backbone.heads, "Attention heads")->capture_default_str();
  bench_cmd->add_option("--ffn-dim", bench_cfg.backbone.ffn_dim, "Feed-forward width")
      ->capture_default_str();
  bench_cmd->add_option("--parents", bench_cfg.spartan.num_parents, "N")->capture_default_str();
  bench_cmd->add_option("--children", bench_cfg.spartan.children_per_parent, "c")
      ->capture_default_str();
  bench_cmd->add_option("--top-k", bench_cfg.spartan.top_k, "K")->capture_default_str();
  bench_cmd->add_option("--bottleneck", bench_cfg.adapter.bottleneck, "b")->capture_default_str();
  bench_cmd->add_option("--out", bench_out, "Write PREFIX.json and PREFIX.csv");

  auto* analyze_cmd = app.add_subcommand("analyze", "Parent selection by gold label");
  std::string an_model, an_data, an_layer = "last", an_out;
  analyze_cmd->add_option("--model", an_model, "Checkpoint with the memory plugin")->required();
  analyze_cmd->add_option("--data", an_data, "JSONL dataset")->required();
  analyze_cmd->add_option("--layer", an_layer, "'last' or a layer index")->capture_default_str();
  analyze_cmd->add_option("--out", an_out, "Output prefix")->required();

  auto* params_cmd = app.add_subcommand("params", "Parameter accounting report");
  std::string params_config;
  std::uint64_t tasks = 1;
  std::size_t params_labels = 2;
  bool params_json = false;
  Overrides params_over;
  params_cmd->add_option("--config", params_config, "JSON run configuration (default: base-size shapes)");
  params_cmd->add_option("--tasks", tasks, "Number of tasks sharing the backbone")
      ->check(CLI::PositiveNumber);
  params_cmd->add_option("--num-labels", params_labels, "Head width when the config leaves it open");
  params_cmd->add_flag("--json", params_json, "Emit JSON instead of a table");
  params_over.attach(*params_cmd);

  auto* synth_cmd = app.add_subcommand("synth", "Generate the synthetic topic dataset");
  std::size_t topics = 4, per_topic = 250;
  double noise = 0.05;
  std::uint64_t synth_seed = 0;
  std::string synth_out, synth_labels;
  synth_cmd->add_option("--topics", topics)->capture_default_str();
  synth_cmd->add_option("--per-topic", per_topic)->capture_default_str();
  synth_cmd->add_option("--noise", noise)->capture_default_str();
  synth_cmd->add_option("--seed", synth_seed)->capture_default_str();
  synth_cmd->add_option("--out", synth_out, "JSONL path")->required();
  synth_cmd->add_option("--labels", synth_labels, "Also write a label manifest");

  auto* config_cmd = app.add_subcommand("config", "Print the resolved run configuration");
  std::string show_config;
  Overrides show_over;
  config_cmd->add_option("--config", show_config, "JSON run configuration");
  show_over.attach(*config_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*train_cmd) {
      return cmd_train(train_config, train_over, train_data, train_eval, train_labels, few_shot,
                       train_out, train_metrics);
    }
    if (*eval_cmd) return cmd_eval(eval_model, eval_data, eval_out);
    if (*bench_cmd) return cmd_bench(bench_cfg, bench_arch, bench_mode, bench_dim, bench_out);
    if (*analyze_cmd) return cmd_analyze(an_model, an_data, an_layer, an_out);
    if (*params_cmd) return cmd_params(params_config, params_over, tasks, params_labels, params_json);
    if (*synth_cmd) return cmd_synth(topics, per_topic, noise, synth_seed, synth_out, synth_labels);
    if (*config_cmd) {
      const RunConfig cfg = resolve_config(show_config, show_over);
      cfg.validate();
      std::cout << run_config_to_json(cfg).dump(2) << '\n';
      return 0;
    }
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
