// Copyright 2026 The Spartan Memory Authors.
// SPDX-License-Identifier: Apache-2.0

#include "spartan/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "spartan/errors.hpp"

namespace spartan {

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0)) throw ConfigError("learning_rate must be >= 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) {
    throw ConfigError("optimizer betas must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw ConfigError("optimizer epsilon must be > 0");
}

double default_learning_rate(PluginKind kind) {
  return kind == PluginKind::kAdapter || kind == PluginKind::kAdapterPair ? 1e-4 : 1e-3;
}

OptimizerState make_optimizer_state(std::span<const TensorView> trainable) {
  OptimizerState s;
  for (const auto& t : trainable) {
    s.first_moment.emplace_back(t.values.size(), 0.0);
    s.second_moment.emplace_back(t.values.size(), 0.0);
  }
  return s;
}

void adam_step(OptimizerState& state, std::span<const TensorView> params,
               std::span<const TensorView> grads, const TrainConfig& cfg) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size()) {
    throw ShapeError("adam_step: parameter, gradient and state tensor counts differ");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(cfg.beta1, t);
  const double correction2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i].values;
    const auto g = grads[i].values;
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    if (p.size() != g.size() || p.size() != m.size()) {
      throw ShapeError("adam_step: shape mismatch on " + params[i].name);
    }
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g[j];
      v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g[j] * g[j];
      const double m_hat = m[j] / correction1;
      const double v_hat = v[j] / correction2;
      p[j] -= cfg.learning_rate * (m_hat / (std::sqrt(v_hat) + cfg.epsilon) +
                                   cfg.weight_decay * p[j]);
    }
  }
}

CrossEntropy cross_entropy(std::span<const Scalar> logits, std::size_t label) {
  if (label >= logits.size()) {
    throw ParameterError("label " + std::to_string(label) + " outside " +
                         std::to_string(logits.size()) + " classes");
  }
  CrossEntropy ce;
  ce.d_logits = softmax_stable(logits);
  const Scalar top = *std::max_element(logits.begin(), logits.end());
  Scalar sum = 0.0;
  for (auto l : logits) sum += std::exp(l - top);
  ce.loss = top + std::log(sum) - logits[label];
  ce.d_logits[label] -= 1.0;
  return ce;
}

std::size_t argmax(std::span<const Scalar> logits) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < logits.size(); ++i) {
    if (logits[i] > logits[best]) best = i;
  }
  return best;
}

std::vector<TokenizedExample> tokenize_all(const std::vector<Example>& examples,
                                           const BackboneConfig& cfg) {
  std::vector<TokenizedExample> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) out.push_back({tokenize(ex.text, cfg), ex.label});
  return out;
}

BatchGradients compute_batch_gradients(const Model& model,
                                       std::span<const TokenizedExample> batch) {
  if (batch.empty()) throw ParameterError("empty batch");
  const auto& bb = model.backbone;
  BatchGradients out;
  out.grads = zeros_like(model);
  for (const auto& ex : batch) {
    const EncodeCache cache = encode_traced(bb, ex.ids, model.plugin);
    const Vector pooled = pool(bb.config, cache.output);
    const Vector logits = classify(bb, pooled);
    const CrossEntropy ce = cross_entropy(logits, ex.label);
    out.loss += ce.loss;

    add_outer(out.grads.head, 1.0, ce.d_logits, pooled);
    axpy(1.0, ce.d_logits, out.grads.head_bias.span());
    if (model.plugin.kind == PluginKind::kNone) continue;

    const Vector d_pooled = matvec_transposed(bb.head, ce.d_logits);
    Matrix d_hidden(cache.output.rows(), cache.output.cols());
    if (bb.config.pooling == Pooling::kFirstToken) {
      std::copy(d_pooled.begin(), d_pooled.end(), d_hidden.row(0).begin());
    } else {
      const Scalar share = 1.0 / static_cast<Scalar>(d_hidden.rows());
      for (std::size_t t = 0; t < d_hidden.rows(); ++t) axpy(share, d_pooled, d_hidden.row(t));
    }
    backward_encoder(model, cache, std::move(d_hidden), out.grads);
  }
  const Scalar inv = 1.0 / static_cast<Scalar>(batch.size());
  out.loss *= inv;
  for (auto& t : trainable_tensors(out.grads)) {
    for (auto& v : t.values) v *= inv;
  }
  return out;
}

std::size_t predict(const Model& model, const TokenIds& ids) {
  const Matrix hidden = encode(model.backbone, ids, model.plugin);
  return argmax(classify(model.backbone, pool(model.backbone.config, hidden)));
}

double evaluate(const Model& model, const std::vector<Example>& dataset) {
  if (dataset.empty()) throw DataError("cannot evaluate on an empty dataset");
  std::size_t correct = 0;
  for (const auto& ex : dataset) {
    if (predict(model, tokenize(ex.text, model.backbone.config)) == ex.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(dataset.size());
}

TrainResult train(Model& model, const std::vector<Example>& train_set, const TrainConfig& cfg,
                  const std::vector<Example>* eval_set) {
  cfg.validate();
  if (train_set.empty()) throw DataError("training set is empty");
  const std::size_t labels = model.backbone.num_labels();
  for (const auto& ex : train_set) {
    if (ex.label >= labels) {
      throw DataError("training label " + std::to_string(ex.label) + " outside the head's " +
                      std::to_string(labels) + " classes");
    }
  }

  const auto data = tokenize_all(train_set, model.backbone.config);
  auto params = trainable_tensors(model);
  TrainResult result;
  result.optimizer = make_optimizer_state(params);

  Rng rng = Rng(cfg.seed).fork(17);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t cursor = order.size();
  std::vector<TokenizedExample> batch;

  for (std::size_t step = 1; step <= cfg.steps; ++step) {
    batch.clear();
    while (batch.size() < cfg.batch_size) {
      if (cursor == order.size()) {
        rng.shuffle(order);
        cursor = 0;
      }
      batch.push_back(data[order[cursor++]]);
    }
    BatchGradients bg = compute_batch_gradients(model, batch);
    if (!std::isfinite(bg.loss)) {
      throw NumericalError("non-finite loss at training step " + std::to_string(step));
    }
    const auto grads = trainable_tensors(bg.grads);
    adam_step(result.optimizer, params, grads, cfg);

    StepMetrics m{step, bg.loss, std::nullopt};
    if (eval_set && !eval_set->empty() &&
        ((cfg.eval_every > 0 && step % cfg.eval_every == 0) || step == cfg.steps)) {
      m.eval_accuracy = evaluate(model, *eval_set);
    }
    result.history.push_back(m);
  }
  return result;
}

void write_metrics_csv(const std::filesystem::path& path, std::span<const StepMetrics> history) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out.precision(17);
  out << "step,loss,eval_accuracy\n";
  for (const auto& m : history) {
    out << m.step << ',' << m.loss << ',';
    if (m.eval_accuracy) out << *m.eval_accuracy;
    out << '\n';
  }
}

}  // namespace spartan
