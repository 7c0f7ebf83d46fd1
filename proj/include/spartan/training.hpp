// Copyright 2026 The Spartan Memory Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "spartan/backbone.hpp"
#include "spartan/data.hpp"

namespace spartan {

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 16;
  std::size_t steps = 1000;
  std::size_t few_shot_steps = 1000;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;
  // Evaluate on the held-out set every this many steps (0 = only at the end).
  std::size_t eval_every = 0;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

// 1e-3 for the memory layer and head-only training, 1e-4 for adapters.
double default_learning_rate(PluginKind kind);

struct OptimizerState {
  std::vector<std::vector<Scalar>> first_moment;
  std::vector<std::vector<Scalar>> second_moment;
  std::uint64_t step = 0;
};

OptimizerState make_optimizer_state(std::span<const TensorView> trainable);

// Bias-corrected adaptive-moment update, with decoupled weight decay.
void adam_step(OptimizerState& state, std::span<const TensorView> params,
               std::span<const TensorView> grads, const TrainConfig& cfg);

struct CrossEntropy {
  Scalar loss = 0.0;
  Vector d_logits;
};

// -log softmax(logits)[label] and its gradient softmax(logits) - onehot(label).
CrossEntropy cross_entropy(std::span<const Scalar> logits, std::size_t label);

// Index of the largest logit; ties resolve to the lowest index.
std::size_t argmax(std::span<const Scalar> logits);

struct TokenizedExample {
  TokenIds ids;
  std::size_t label = 0;
};

std::vector<TokenizedExample> tokenize_all(const std::vector<Example>& examples,
                                           const BackboneConfig& cfg);

struct BatchGradients {
  Scalar loss = 0.0;  // mean over the batch
  ModelGradients grads;  // mean over the batch
};

// Forward and backward over a batch; trainable-tensor gradients only.
BatchGradients compute_batch_gradients(const Model& model,
                                       std::span<const TokenizedExample> batch);

struct StepMetrics {
  std::size_t step = 0;
  double loss = 0.0;
  std::optional<double> eval_accuracy;
};

struct TrainResult {
  std::vector<StepMetrics> history;
  OptimizerState optimizer;
};

// Trains the plugin and head of `model` in place; frozen tensors are never
// written. Batches are drawn from successive seeded shuffles of `train_set`.
// Throws NumericalError naming the step if the loss becomes non-finite.
TrainResult train(Model& model, const std::vector<Example>& train_set, const TrainConfig& cfg,
                  const std::vector<Example>* eval_set = nullptr);

std::size_t predict(const Model& model, const TokenIds& ids);
double evaluate(const Model& model, const std::vector<Example>& dataset);

void write_metrics_csv(const std::filesystem::path& path, std::span<const StepMetrics> history);

}  // namespace spartan
