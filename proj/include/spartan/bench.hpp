// Copyright 2026 The Spartan Memory Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Throughput harness. Device constraints are modelled only by capping the
// number of worker threads; throughput is instances per minute at a fixed
// batch size.

#include <cstdint>
#include <string>
#include <string_view>

#include "spartan/backbone.hpp"
#include "spartan/training.hpp"

namespace spartan {

enum class BenchArch { kSpartan, kAdapter, kAdapterPair, kNone, kSpartanDense };
enum class BenchMode { kInference, kFinetune, kMicro };

std::string_view bench_arch_name(BenchArch arch);
BenchArch parse_bench_arch(std::string_view name);
std::string_view bench_mode_name(BenchMode mode);
BenchMode parse_bench_mode(std::string_view name);

struct BenchConfig {
  BenchArch arch = BenchArch::kSpartan;
  BenchMode mode = BenchMode::kInference;
  std::size_t threads = 1;
  std::size_t batch_size = 32;
  std::size_t seq_len = 16;
  std::size_t warmup_batches = 1;
  double measure_seconds = 5.0;
  std::uint64_t seed = 0;
  std::size_t num_labels = 2;
  // Base-size shapes (768 wide, 12 layers) by default; tests shrink them.
  BackboneConfig backbone{768, 12, 12, 3072, 2048, 64, Pooling::kFirstToken};
  SpartanConfig spartan{768, 16, 3, 8};
  AdapterConfig adapter{768, 64};

  void validate() const;
  // Plugin configuration implied by `arch` (dense = spartan with K = N).
  PluginConfig plugin_config() const;
};

struct MacCount {
  std::uint64_t plugin_macs = 0;  // matrix-product multiply-accumulates
  std::uint64_t norm_ops = 0;     // elementwise normalization work, 4 d per norm
};

// Per position, plugin only: memory = N d + 2 K c d; adapter = 2 d b;
// adapter pair = twice that; none = 0.
MacCount count_macs(BenchArch arch, const SpartanConfig& spartan, const AdapterConfig& adapter);

// Runs one position through the plugin and reads the instrumented counter.
std::uint64_t measure_plugin_macs(BenchArch arch, const SpartanConfig& spartan,
                                  const AdapterConfig& adapter, std::uint64_t seed = 0);

struct BenchReport {
  BenchConfig config;
  double instances_per_minute = 0.0;
  std::uint64_t instances = 0;
  double elapsed_seconds = 0.0;
  std::uint64_t macs_per_instance = 0;
  MacCount plugin_macs_per_position;
  unsigned hardware_threads = 0;
  std::string precision = "f64";
};

// End-to-end encoder inference (kInference) or plugin-only (kMicro), picked
// by cfg.mode.
BenchReport run_inference_bench(const BenchConfig& cfg);
// Training instances per minute: forward, backward and optimizer update.
BenchReport run_finetune_bench(const BenchConfig& cfg, const TrainConfig& train_cfg);
// Dispatches on cfg.mode.
BenchReport run_bench(const BenchConfig& cfg, const TrainConfig& train_cfg = {});

std::string bench_json(const BenchReport& report);
std::string bench_csv_header();
std::string bench_csv_row(const BenchReport& report);

}  // namespace spartan
