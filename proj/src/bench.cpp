// Copyright 2026 The Spartan Memory Authors.
// SPDX-License-Identifier: Apache-2.0

#include "spartan/bench.hpp"

#include <algorithm>
#include <chrono>
#include <json.hpp>
#include <sstream>
#include <thread>

#include "spartan/errors.hpp"

namespace spartan {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

// Static partition of [0, n) over at most `threads` workers; runs inline for a
// single worker.
template <typename Fn>
void parallel_for(std::size_t threads, std::size_t n, Fn&& fn) {
  const std::size_t workers = std::min(threads, n);
  if (workers <= 1) {
    fn(std::size_t{0}, std::size_t{0}, n);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = n * w / workers, end = n * (w + 1) / workers;
    pool.emplace_back([&fn, w, begin, end] { fn(w, begin, end); });
  }
}

// Warmup, then whole batches until the measurement window has elapsed.
template <typename Batch>
void timed_batches(const BenchConfig& cfg, BenchReport& report, Batch&& run_batch) {
  for (std::size_t i = 0; i < cfg.warmup_batches; ++i) run_batch();
  const auto start = Clock::now();
  std::uint64_t instances = 0;
  double elapsed = 0.0;
  do {
    run_batch();
    instances += cfg.batch_size;
    elapsed = std::chrono::duration<double>(Clock::now() - start).count();
  } while (elapsed < cfg.measure_seconds);
  report.instances = instances;
  report.elapsed_seconds = elapsed;
  report.instances_per_minute = static_cast<double>(instances) * 60.0 / elapsed;
}

BenchReport base_report(const BenchConfig& cfg) {
  BenchReport r;
  r.config = cfg;
  r.hardware_threads = std::thread::hardware_concurrency();
  const auto plugin = cfg.plugin_config();
  r.plugin_macs_per_position = count_macs(cfg.arch, plugin.spartan, plugin.adapter);
  return r;
}

// One plugin "instance" for the micro benchmark: per-layer memory or adapters
// applied to seq_len positions.
struct MicroPlugin {
  BenchArch arch;
  SpartanLayerParams spartan;
  std::vector<AdapterParams> adapters;

  void apply(std::span<const Scalar> x, std::span<Scalar> out, SpartanWorkspace& sws,
             AdapterWorkspace& aws) const {
    switch (arch) {
      case BenchArch::kNone:
        std::copy(x.begin(), x.end(), out.begin());
        return;
      case BenchArch::kSpartan:
      case BenchArch::kSpartanDense:
        forward_inference(spartan, x, out, sws);
        return;
      case BenchArch::kAdapter:
      case BenchArch::kAdapterPair:
        std::copy(x.begin(), x.end(), out.begin());
        for (const auto& a : adapters) adapter_forward_into(a, out, out, aws);
        return;
    }
  }
};

MicroPlugin make_micro_plugin(BenchArch arch, const SpartanConfig& spartan,
                              const AdapterConfig& adapter, Rng& rng) {
  MicroPlugin p{arch, {}, {}};
  if (arch == BenchArch::kSpartan || arch == BenchArch::kSpartanDense) {
    SpartanConfig cfg = spartan;
    if (arch == BenchArch::kSpartanDense) cfg.top_k = cfg.num_parents;
    p.spartan = init_params(cfg, rng);
    // Nonzero values so the layer does real work.
    for (auto& v : p.spartan.child_values) fill_gaussian(rng, v.span(), 0.02);
  } else if (arch == BenchArch::kAdapter || arch == BenchArch::kAdapterPair) {
    const std::size_t n = arch == BenchArch::kAdapterPair ? 2 : 1;
    for (std::size_t i = 0; i < n; ++i) {
      auto a = init_adapter(adapter, rng);
      fill_gaussian(rng, a.up.span(), 0.02);
      p.adapters.push_back(std::move(a));
    }
  }
  return p;
}

std::size_t plugin_dim(const BenchConfig& cfg) {
  if (cfg.mode != BenchMode::kMicro) return cfg.backbone.dim;
  return cfg.arch == BenchArch::kAdapter || cfg.arch == BenchArch::kAdapterPair
             ? cfg.adapter.dim
             : cfg.spartan.dim;
}

BenchReport run_micro(const BenchConfig& cfg) {
  BenchReport report = base_report(cfg);
  Rng rng(cfg.seed);
  const MicroPlugin plugin = make_micro_plugin(cfg.arch, cfg.spartan, cfg.adapter, rng);
  const std::size_t d = plugin_dim(cfg);
  const std::size_t positions = cfg.batch_size * cfg.seq_len;
  Matrix inputs(positions, d);
  fill_gaussian(rng, inputs.span(), 1.0);
  Matrix outputs(positions, d);

  report.macs_per_instance =
      measure_plugin_macs(cfg.arch, cfg.spartan, cfg.adapter, cfg.seed) * cfg.seq_len;

  auto run_batch = [&] {
    parallel_for(cfg.threads, cfg.batch_size, [&](std::size_t, std::size_t begin, std::size_t end) {
      SpartanWorkspace sws;
      AdapterWorkspace aws;
      for (std::size_t b = begin; b < end; ++b) {
        for (std::size_t t = 0; t < cfg.seq_len; ++t) {
          const std::size_t row = b * cfg.seq_len + t;
          plugin.apply(inputs.row(row), outputs.row(row), sws, aws);
        }
      }
    });
  };
  timed_batches(cfg, report, run_batch);
  return report;
}

std::vector<TokenIds> random_batch(const BenchConfig& cfg, Rng& rng) {
  std::vector<TokenIds> batch(cfg.batch_size);
  for (auto& ids : batch) {
    ids.push_back(kBosToken);
    while (ids.size() < cfg.seq_len) {
      ids.push_back(static_cast<std::uint32_t>(1 + rng.index(cfg.backbone.vocab_buckets - 1)));
    }
  }
  return batch;
}

}  // namespace

std::string_view bench_arch_name(BenchArch arch) {
  switch (arch) {
    case BenchArch::kSpartan: return "spartan";
    case BenchArch::kAdapter: return "adapter";
    case BenchArch::kAdapterPair: return "adapter2";
    case BenchArch::kNone: return "none";
    case BenchArch::kSpartanDense: return "spartan-dense";
  }
  return "none";
}

BenchArch parse_bench_arch(std::string_view name) {
  if (name == "spartan") return BenchArch::kSpartan;
  if (name == "adapter" || name == "pfeiffer") return BenchArch::kAdapter;
  if (name == "adapter2" || name == "houlsby") return BenchArch::kAdapterPair;
  if (name == "none") return BenchArch::kNone;
  if (name == "spartan-dense") return BenchArch::kSpartanDense;
  throw ConfigError("unknown architecture '" + std::string(name) +
                    "' (valid: spartan, adapter, adapter2, none, spartan-dense)");
}

std::string_view bench_mode_name(BenchMode mode) {
  switch (mode) {
    case BenchMode::kInference: return "inference";
    case BenchMode::kFinetune: return "finetune";
    case BenchMode::kMicro: return "micro";
  }
  return "inference";
}

BenchMode parse_bench_mode(std::string_view name) {
  if (name == "inference") return BenchMode::kInference;
  if (name == "finetune") return BenchMode::kFinetune;
  if (name == "micro") return BenchMode::kMicro;
  throw ConfigError("unknown bench mode '" + std::string(name) +
                    "' (valid: inference, finetune, micro)");
}

void BenchConfig::validate() const {
  if (threads < 1) throw ConfigError("threads must be >= 1");
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (seq_len < 1) throw ConfigError("seq_len must be >= 1");
  if (!(measure_seconds >= 1.0)) throw ConfigError("measure_seconds must be >= 1");
  if (mode != BenchMode::kMicro) {
    backbone.validate();
    if (seq_len > backbone.max_seq_len) {
      throw ConfigError("seq_len " + std::to_string(seq_len) + " exceeds max_seq_len " +
                        std::to_string(backbone.max_seq_len));
    }
    validate_plugin(backbone, plugin_config());
  } else {
    spartan.validate();
    adapter.validate();
  }
}

PluginConfig BenchConfig::plugin_config() const {
  PluginConfig p;
  p.spartan = spartan;
  p.adapter = adapter;
  switch (arch) {
    case BenchArch::kSpartan: p.kind = PluginKind::kSpartan; break;
    case BenchArch::kSpartanDense:
      p.kind = PluginKind::kSpartan;
      p.spartan.top_k = p.spartan.num_parents;
      break;
    case BenchArch::kAdapter: p.kind = PluginKind::kAdapter; break;
    case BenchArch::kAdapterPair: p.kind = PluginKind::kAdapterPair; break;
    case BenchArch::kNone: p.kind = PluginKind::kNone; break;
  }
  return p;
}

MacCount count_macs(BenchArch arch, const SpartanConfig& s, const AdapterConfig& a) {
  MacCount m;
  switch (arch) {
    case BenchArch::kSpartan:
      m.plugin_macs = s.num_parents * s.dim + 2 * s.top_k * s.children_per_parent * s.dim;
      break;
    case BenchArch::kSpartanDense:
      m.plugin_macs = s.num_parents * s.dim + 2 * s.num_parents * s.children_per_parent * s.dim;
      break;
    case BenchArch::kAdapter:
      m.plugin_macs = 2 * a.dim * a.bottleneck;
      m.norm_ops = 4 * a.dim;
      break;
    case BenchArch::kAdapterPair:
      m.plugin_macs = 4 * a.dim * a.bottleneck;
      m.norm_ops = 8 * a.dim;
      break;
    case BenchArch::kNone:
      break;
  }
  return m;
}

std::uint64_t measure_plugin_macs(BenchArch arch, const SpartanConfig& spartan,
                                  const AdapterConfig& adapter, std::uint64_t seed) {
  Rng rng(seed);
  const MicroPlugin plugin = make_micro_plugin(arch, spartan, adapter, rng);
  const std::size_t d =
      arch == BenchArch::kAdapter || arch == BenchArch::kAdapterPair ? adapter.dim : spartan.dim;
  const Vector x = sample_gaussian(rng, d, 1.0);
  Vector out(d);
  SpartanWorkspace sws;
  AdapterWorkspace aws;
  const std::uint64_t before = mac_count();
  plugin.apply(x, out.span(), sws, aws);
  return mac_count() - before;
}

BenchReport run_inference_bench(const BenchConfig& cfg) {
  cfg.validate();
  if (cfg.mode == BenchMode::kMicro) return run_micro(cfg);

  BenchReport report = base_report(cfg);
  Model model;
  try {
    model = build_model(cfg.backbone, cfg.num_labels, cfg.plugin_config(), cfg.seed);
  } catch (const std::bad_alloc&) {
    throw ConfigError("not enough memory to build the benchmark model");
  }
  Rng rng = Rng(cfg.seed).fork(99);
  const auto batch = random_batch(cfg, rng);
  {
    const std::uint64_t before = mac_count();
    (void)encode(model.backbone, batch.front(), model.plugin);
    report.macs_per_instance = mac_count() - before;
  }
  std::vector<std::size_t> predictions(batch.size());
  auto run_batch = [&] {
    parallel_for(cfg.threads, batch.size(), [&](std::size_t, std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) predictions[i] = predict(model, batch[i]);
    });
  };
  timed_batches(cfg, report, run_batch);
  return report;
}

BenchReport run_finetune_bench(const BenchConfig& cfg, const TrainConfig& train_cfg) {
  cfg.validate();
  train_cfg.validate();
  BenchReport report = base_report(cfg);
  Model model = build_model(cfg.backbone, cfg.num_labels, cfg.plugin_config(), cfg.seed);
  Rng rng = Rng(cfg.seed).fork(98);
  const auto ids = random_batch(cfg, rng);
  std::vector<TokenizedExample> batch;
  for (const auto& seq : ids) batch.push_back({seq, rng.index(cfg.num_labels)});

  auto params = trainable_tensors(model);
  OptimizerState state = make_optimizer_state(params);
  {
    const std::uint64_t before = mac_count();
    (void)compute_batch_gradients(model, std::span(batch).first(1));
    report.macs_per_instance = mac_count() - before;
  }

  auto run_batch = [&] {
    const std::size_t workers = std::min(cfg.threads, batch.size());
    std::vector<BatchGradients> partial(std::max<std::size_t>(workers, 1));
    std::vector<std::size_t> sizes(partial.size(), 0);
    parallel_for(cfg.threads, batch.size(), [&](std::size_t w, std::size_t begin, std::size_t end) {
      partial[w] = compute_batch_gradients(model, std::span(batch).subspan(begin, end - begin));
      sizes[w] = end - begin;
    });
    // Recombine per-worker means into the batch mean.
    ModelGradients total = zeros_like(model);
    auto dst = trainable_tensors(total);
    for (std::size_t w = 0; w < partial.size(); ++w) {
      const Scalar share = static_cast<Scalar>(sizes[w]) / static_cast<Scalar>(batch.size());
      const auto src = trainable_tensors(partial[w].grads);
      for (std::size_t t = 0; t < dst.size(); ++t) axpy(share, src[t].values, dst[t].values);
    }
    adam_step(state, params, dst, train_cfg);
  };
  timed_batches(cfg, report, run_batch);
  return report;
}

BenchReport run_bench(const BenchConfig& cfg, const TrainConfig& train_cfg) {
  if (cfg.mode == BenchMode::kFinetune) return run_finetune_bench(cfg, train_cfg);
  return run_inference_bench(cfg);
}

std::string bench_json(const BenchReport& r) {
  const auto& c = r.config;
  json j = {
      {"architecture", bench_arch_name(c.arch)},
      {"mode", bench_mode_name(c.mode)},
      {"instances_per_minute", r.instances_per_minute},
      {"instances", r.instances},
      {"elapsed_seconds", r.elapsed_seconds},
      {"macs_per_instance", r.macs_per_instance},
      {"plugin_macs_per_position", r.plugin_macs_per_position.plugin_macs},
      {"plugin_norm_ops_per_position", r.plugin_macs_per_position.norm_ops},
      {"config",
       {{"threads", c.threads},
        {"batch_size", c.batch_size},
        {"seq_len", c.seq_len},
        {"warmup_batches", c.warmup_batches},
        {"measure_seconds", c.measure_seconds},
        {"seed", c.seed},
        {"dim", c.backbone.dim},
        {"layers", c.backbone.layers},
        {"heads", c.backbone.heads},
        {"ffn_dim", c.backbone.ffn_dim},
        {"num_parents", c.spartan.num_parents},
        {"children_per_parent", c.spartan.children_per_parent},
        {"top_k", c.spartan.top_k},
        {"bottleneck", c.adapter.bottleneck}}},
      {"environment", {{"hardware_threads", r.hardware_threads}, {"precision", r.precision}}}};
  return j.dump(2);
}

std::string bench_csv_header() {
  return "architecture,mode,threads,batch_size,seq_len,instances,elapsed_seconds,"
         "instances_per_minute,macs_per_instance,plugin_macs_per_position";
}

std::string bench_csv_row(const BenchReport& r) {
  std::ostringstream os;
  os.precision(10);
  const auto& c = r.config;
  os << bench_arch_name(c.arch) << ',' << bench_mode_name(c.mode) << ',' << c.threads << ','
     << c.batch_size << ',' << c.seq_len << ',' << r.instances << ',' << r.elapsed_seconds << ','
     << r.instances_per_minute << ',' << r.macs_per_instance << ','
     << r.plugin_macs_per_position.plugin_macs;
  return os.str();
}

}  // namespace spartan
