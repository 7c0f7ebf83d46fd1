// Copyright 2026 The Spartan Memory Authors.
// SPDX-License-Identifier: Apache-2.0

#include "spartan/memory.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "spartan/errors.hpp"

namespace spartan {

namespace {

void check_input(const SpartanLayerParams& params, std::size_t n) {
  if (n != params.config.dim) {
    throw ShapeError("memory input has dimension " + std::to_string(n) +
                     ", layer expects " + std::to_string(params.config.dim));
  }
}

}  // namespace

void SpartanConfig::validate() const {
  if (dim < 1) throw ConfigError("memory dim must be >= 1");
  if (children_per_parent < 1) throw ConfigError("children_per_parent must be >= 1");
  if (num_parents < 1) throw ConfigError("num_parents must be >= 1");
  if (top_k < 1 || top_k > num_parents) {
    throw ConfigError("top_k=" + std::to_string(top_k) + " must lie in [1, " +
                      std::to_string(num_parents) + "]");
  }
}

SpartanLayerParams SpartanLayerParams::zeros(const SpartanConfig& cfg) {
  cfg.validate();
  SpartanLayerParams p;
  p.config = cfg;
  p.parents = Matrix(cfg.num_parents, cfg.dim);
  p.child_keys.assign(cfg.num_parents, Matrix(cfg.children_per_parent, cfg.dim));
  p.child_values.assign(cfg.num_parents, Matrix(cfg.children_per_parent, cfg.dim));
  return p;
}

std::size_t SpartanLayerParams::scalar_count() const {
  std::size_t total = parents.size();
  for (const auto& m : child_keys) total += m.size();
  for (const auto& m : child_values) total += m.size();
  return total;
}

SpartanLayerParams init_params(const SpartanConfig& cfg, Rng& rng) {
  auto p = SpartanLayerParams::zeros(cfg);
  const Scalar stddev = 1.0 / std::sqrt(static_cast<Scalar>(cfg.dim));
  fill_gaussian(rng, p.parents.span(), stddev);
  for (auto& keys : p.child_keys) fill_gaussian(rng, keys.span(), stddev);
  return p;
}

ParentChoice choose_parents(const SpartanLayerParams& params,
                            std::span<const Scalar> x, std::size_t k) {
  check_input(params, x.size());
  ParentChoice choice;
  choice.parent_probs = softmax_stable(matvec(params.parents, x));
  choice.selected = topk_indices(choice.parent_probs, k);
  return choice;
}

ChildRepresentation child_representation(const SpartanLayerParams& params,
                                         std::size_t parent,
                                         std::span<const Scalar> x) {
  if (parent >= params.config.num_parents) {
    throw ParameterError("parent index " + std::to_string(parent) +
                         " out of range for " +
                         std::to_string(params.config.num_parents) + " parents");
  }
  check_input(params, x.size());
  ChildRepresentation rep;
  rep.attn = softmax_stable(matvec(params.child_keys[parent], x));
  rep.value = matvec_transposed(params.child_values[parent], rep.attn);
  return rep;
}

Aggregate aggregate(std::span<const Scalar> parent_probs,
                    std::span<const std::size_t> selected,
                    std::span<const Vector> child_outputs) {
  if (selected.empty() || selected.size() != child_outputs.size()) {
    throw ShapeError("aggregate: " + std::to_string(selected.size()) +
                     " selected parents but " + std::to_string(child_outputs.size()) +
                     " child outputs");
  }
  Scalar z = 0.0;
  for (auto i : selected) {
    if (i >= parent_probs.size()) throw ParameterError("aggregate: index out of range");
    z += parent_probs[i];
  }
  if (!(z > 0.0)) {
    throw NumericalError("aggregate: selected parent mass underflowed to zero");
  }
  Aggregate agg;
  agg.weights = Vector(selected.size());
  agg.output = Vector(child_outputs.front().size());
  for (std::size_t s = 0; s < selected.size(); ++s) {
    agg.weights[s] = parent_probs[selected[s]] / z;
    axpy(agg.weights[s], child_outputs[s], agg.output.span());
  }
  return agg;
}

Vector restricted_softmax(std::span<const Scalar> logits,
                          std::span<const std::size_t> selected) {
  Vector picked(selected.size());
  for (std::size_t s = 0; s < selected.size(); ++s) {
    if (selected[s] >= logits.size()) {
      throw ParameterError("restricted_softmax: index out of range");
    }
    picked[s] = logits[selected[s]];
  }
  softmax_inplace(picked.span());
  return picked;
}

ForwardTrace forward_position(const SpartanLayerParams& params,
                              std::span<const Scalar> x) {
  check_input(params, x.size());
  const auto& cfg = params.config;
  ForwardTrace t;
  t.input = Vector(x);

  const Vector logits = matvec(params.parents, x);
  t.parent_probs = softmax_stable(logits);
  t.selected = topk_indices(t.parent_probs, cfg.top_k);
  t.agg_weights = restricted_softmax(logits, t.selected);

  Vector mixed(cfg.dim);
  t.child_attn.reserve(cfg.top_k);
  t.child_outputs.reserve(cfg.top_k);
  for (std::size_t s = 0; s < t.selected.size(); ++s) {
    const std::size_t i = t.selected[s];
    Vector attn = softmax_stable(matvec(params.child_keys[i], x));
    Vector value = matvec_transposed(params.child_values[i], attn);
    axpy(t.agg_weights[s], value, mixed.span());
    t.child_attn.push_back(std::move(attn));
    t.child_outputs.push_back(std::move(value));
  }

  t.output = Vector(cfg.dim);
  for (std::size_t j = 0; j < cfg.dim; ++j) t.output[j] = x[j] + mixed[j];
  return t;
}

void forward_inference(const SpartanLayerParams& params, std::span<const Scalar> x,
                       std::span<Scalar> out, SpartanWorkspace& ws) {
  check_input(params, x.size());
  const auto& cfg = params.config;
  if (out.size() != cfg.dim) throw ShapeError("forward_inference: output size");
  ws.logits.resize(cfg.num_parents);
  ws.attn.resize(cfg.children_per_parent);
  ws.value.resize(cfg.dim);
  ws.mixed.assign(cfg.dim, 0.0);

  matvec_into(params.parents, x, ws.logits);
  ws.probs.assign(ws.logits.begin(), ws.logits.end());
  softmax_inplace(ws.probs);
  const auto selected = topk_indices(ws.probs, cfg.top_k);
  const Vector weights = restricted_softmax(ws.logits, selected);
  for (std::size_t s = 0; s < selected.size(); ++s) {
    const std::size_t i = selected[s];
    matvec_into(params.child_keys[i], x, ws.attn);
    softmax_inplace(ws.attn);
    matvec_transposed_into(params.child_values[i], ws.attn, ws.value);
    axpy(weights[s], ws.value, ws.mixed);
  }
  for (std::size_t j = 0; j < cfg.dim; ++j) out[j] = x[j] + ws.mixed[j];
}

SequenceForward forward_sequence(const SpartanLayerParams& params, const Matrix& xs) {
  SequenceForward result;
  result.outputs = Matrix(xs.rows(), params.config.dim);
  result.traces.reserve(xs.rows());
  for (std::size_t t = 0; t < xs.rows(); ++t) {
    result.traces.push_back(forward_position(params, xs.row(t)));
    const auto& out = result.traces.back().output;
    std::copy(out.begin(), out.end(), result.outputs.row(t).begin());
  }
  return result;
}

std::vector<ForwardTrace> forward_sequence(const SpartanLayerParams& params,
                                           std::span<const Vector> xs) {
  std::vector<ForwardTrace> traces;
  traces.reserve(xs.size());
  for (const auto& x : xs) traces.push_back(forward_position(params, x));
  return traces;
}

void backward_position_accumulate(const SpartanLayerParams& params,
                                  const ForwardTrace& trace,
                                  std::span<const Scalar> d_output,
                                  SpartanLayerParams& grads,
                                  std::span<Scalar> d_input) {
  const auto& cfg = params.config;
  if (trace.input.size() != cfg.dim || trace.parent_probs.size() != cfg.num_parents ||
      trace.selected.size() != cfg.top_k || trace.child_attn.size() != cfg.top_k ||
      trace.child_outputs.size() != cfg.top_k || trace.agg_weights.size() != cfg.top_k) {
    throw ConsistencyError("trace shapes do not match the memory layer");
  }
  if (!(grads.config == cfg)) throw ConsistencyError("gradient buffer shape mismatch");
  if (d_output.size() != cfg.dim || d_input.size() != cfg.dim) {
    throw ShapeError("backward_position: gradient dimension mismatch");
  }
  const auto x = trace.input.span();
  const std::size_t k = cfg.top_k;

  // Residual path.
  std::copy(d_output.begin(), d_output.end(), d_input.begin());

  // Restricted-softmax weights: dl_s = w_s (g_s - sum_t w_t g_t), g_s = <dy, v_s>.
  Vector g(k);
  Scalar mean_g = 0.0;
  for (std::size_t s = 0; s < k; ++s) {
    g[s] = dot(d_output, trace.child_outputs[s]);
    mean_g += trace.agg_weights[s] * g[s];
  }

  Vector d_value(cfg.dim);
  Vector d_attn(cfg.children_per_parent);
  for (std::size_t s = 0; s < k; ++s) {
    const std::size_t i = trace.selected[s];
    const Scalar w = trace.agg_weights[s];
    const Scalar d_logit = w * (g[s] - mean_g);
    axpy(d_logit, x, grads.parents.row(i));
    axpy(d_logit, params.parents.row(i), d_input);

    // v_s = transpose(C^V) a_s
    for (std::size_t j = 0; j < cfg.dim; ++j) d_value[j] = w * d_output[j];
    const auto& attn = trace.child_attn[s];
    add_outer(grads.child_values[i], 1.0, attn, d_value);
    matvec_into(params.child_values[i], d_value, d_attn.span());

    // a_s = softmax(C^K x)
    const Scalar centre = dot(attn, d_attn);
    for (std::size_t j = 0; j < cfg.children_per_parent; ++j) {
      d_attn[j] = attn[j] * (d_attn[j] - centre);
    }
    add_outer(grads.child_keys[i], 1.0, d_attn, x);
    const auto& keys = params.child_keys[i];
    for (std::size_t j = 0; j < cfg.children_per_parent; ++j) {
      axpy(d_attn[j], keys.row(j), d_input);
    }
  }
}

SpartanGradients backward_position(const SpartanLayerParams& params,
                                   const ForwardTrace& trace,
                                   std::span<const Scalar> d_output) {
  SpartanGradients grads;
  grads.params = SpartanLayerParams::zeros(params.config);
  grads.input = Vector(params.config.dim);
  backward_position_accumulate(params, trace, d_output, grads.params,
                               grads.input.span());
  return grads;
}

Vector dense_reference_forward(const SpartanLayerParams& params,
                               std::span<const Scalar> x) {
  check_input(params, x.size());
  const auto& cfg = params.config;
  const std::size_t n = cfg.num_parents, c = cfg.children_per_parent, d = cfg.dim;

  std::vector<Scalar> logits(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) logits[i] += params.parents(i, j) * x[j];
  }
  const Scalar top = *std::max_element(logits.begin(), logits.end());
  std::vector<Scalar> probs(n);
  Scalar z = 0.0;
  for (std::size_t i = 0; i < n; ++i) z += (probs[i] = std::exp(logits[i] - top));
  for (auto& p : probs) p /= z;

  Vector out(x);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<Scalar> key_logits(c, 0.0);
    for (std::size_t r = 0; r < c; ++r) {
      for (std::size_t j = 0; j < d; ++j) key_logits[r] += params.child_keys[i](r, j) * x[j];
    }
    const Scalar kmax = *std::max_element(key_logits.begin(), key_logits.end());
    Scalar kz = 0.0;
    for (auto& l : key_logits) kz += (l = std::exp(l - kmax));
    for (std::size_t r = 0; r < c; ++r) {
      const Scalar w = probs[i] * key_logits[r] / kz;
      for (std::size_t j = 0; j < d; ++j) out[j] += w * params.child_values[i](r, j);
    }
  }
  return out;
}

}  // namespace spartan
