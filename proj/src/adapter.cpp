// Copyright 2026 The Spartan Memory Authors.
// SPDX-License-Identifier: Apache-2.0

#include "spartan/adapter.hpp"

#include <cmath>
#include <string>

#include "spartan/errors.hpp"

namespace spartan {

void AdapterConfig::validate() const {
  if (dim < 1) throw ConfigError("adapter dim must be >= 1");
  if (bottleneck < 1) throw ConfigError("adapter bottleneck must be >= 1");
}

AdapterParams AdapterParams::zeros(const AdapterConfig& cfg) {
  cfg.validate();
  AdapterParams p;
  p.config = cfg;
  p.down = Matrix(cfg.bottleneck, cfg.dim);
  p.down_bias = Vector(cfg.bottleneck);
  p.up = Matrix(cfg.dim, cfg.bottleneck);
  p.up_bias = Vector(cfg.dim);
  p.norm_gain = Vector(cfg.dim);
  p.norm_bias = Vector(cfg.dim);
  return p;
}

std::size_t AdapterParams::scalar_count() const {
  return down.size() + down_bias.size() + up.size() + up_bias.size() + norm_gain.size() +
         norm_bias.size();
}

AdapterParams init_adapter(const AdapterConfig& cfg, Rng& rng) {
  auto p = AdapterParams::zeros(cfg);
  fill_gaussian(rng, p.down.span(), 1.0 / std::sqrt(static_cast<Scalar>(cfg.dim)));
  for (auto& g : p.norm_gain) g = 1.0;
  return p;
}

AdapterTrace adapter_forward_traced(const AdapterParams& params,
                                    std::span<const Scalar> x) {
  const auto& cfg = params.config;
  if (x.size() != cfg.dim) {
    throw ShapeError("adapter input has dimension " + std::to_string(x.size()) +
                     ", adapter expects " + std::to_string(cfg.dim));
  }
  AdapterTrace t;
  t.input = Vector(x);
  t.hidden_pre = matvec(params.down, x);
  t.hidden = Vector(cfg.bottleneck);
  for (std::size_t i = 0; i < cfg.bottleneck; ++i) {
    t.hidden_pre[i] += params.down_bias[i];
    t.hidden[i] = gelu(t.hidden_pre[i]);
  }
  Vector residual = matvec(params.up, t.hidden);
  for (std::size_t j = 0; j < cfg.dim; ++j) residual[j] += params.up_bias[j] + x[j];
  t.normalized = Vector(cfg.dim);
  t.output = Vector(cfg.dim);
  t.norm = layer_norm(residual, params.norm_gain, params.norm_bias, t.normalized.span(),
                      t.output.span());
  return t;
}

Vector adapter_forward(const AdapterParams& params, std::span<const Scalar> x) {
  return adapter_forward_traced(params, x).output;
}

void adapter_forward_into(const AdapterParams& params, std::span<const Scalar> x,
                          std::span<Scalar> out, AdapterWorkspace& ws) {
  const auto& cfg = params.config;
  if (x.size() != cfg.dim || out.size() != cfg.dim) {
    throw ShapeError("adapter input/output dimension mismatch");
  }
  ws.hidden.resize(cfg.bottleneck);
  ws.residual.resize(cfg.dim);
  ws.normalized.resize(cfg.dim);
  matvec_into(params.down, x, ws.hidden);
  for (std::size_t i = 0; i < cfg.bottleneck; ++i) {
    ws.hidden[i] = gelu(ws.hidden[i] + params.down_bias[i]);
  }
  matvec_into(params.up, ws.hidden, ws.residual);
  for (std::size_t j = 0; j < cfg.dim; ++j) ws.residual[j] += params.up_bias[j] + x[j];
  layer_norm(ws.residual, params.norm_gain, params.norm_bias, ws.normalized, out);
}

void adapter_backward_accumulate(const AdapterParams& params, const AdapterTrace& trace,
                                 std::span<const Scalar> d_output, AdapterParams& grads,
                                 std::span<Scalar> d_input) {
  const auto& cfg = params.config;
  if (trace.input.size() != cfg.dim || trace.hidden.size() != cfg.bottleneck) {
    throw ConsistencyError("adapter trace shapes do not match the adapter");
  }
  if (!(grads.config == cfg)) throw ConsistencyError("adapter gradient buffer mismatch");
  if (d_output.size() != cfg.dim || d_input.size() != cfg.dim) {
    throw ShapeError("adapter_backward: gradient dimension mismatch");
  }

  Vector d_residual(cfg.dim);
  layer_norm_backward(trace.normalized, trace.norm, params.norm_gain, d_output,
                      d_residual.span(), grads.norm_gain.span(), grads.norm_bias.span());

  axpy(1.0, d_residual, grads.up_bias.span());
  add_outer(grads.up, 1.0, d_residual, trace.hidden);
  Vector d_hidden = matvec_transposed(params.up, d_residual);
  for (std::size_t i = 0; i < cfg.bottleneck; ++i) {
    d_hidden[i] *= gelu_derivative(trace.hidden_pre[i]);
  }
  axpy(1.0, d_hidden, grads.down_bias.span());
  add_outer(grads.down, 1.0, d_hidden, trace.input);

  matvec_transposed_into(params.down, d_hidden, d_input);
  axpy(1.0, d_residual, d_input);
}

AdapterGradients adapter_backward(const AdapterParams& params, const AdapterTrace& trace,
                                  std::span<const Scalar> d_output) {
  AdapterGradients g;
  g.params = AdapterParams::zeros(params.config);
  g.input = Vector(params.config.dim);
  adapter_backward_accumulate(params, trace, d_output, g.params, g.input.span());
  return g;
}

}  // namespace spartan
