// Copyright 2026 The Spartan Memory Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Bottleneck adapter, the parameter-efficient baseline:
//
//   y = LayerNorm(x + up * gelu(down * x + down_bias) + up_bias)
//
// One adapter per layer is the Pfeiffer arrangement; two stacked per layer is
// the Houlsby arrangement. The normalization sits after the residual add.

#include <cstddef>
#include <span>
#include <vector>

#include "spartan/layers.hpp"
#include "spartan/numerics.hpp"

namespace spartan {

struct AdapterConfig {
  std::size_t dim = 768;
  std::size_t bottleneck = 64;

  void validate() const;
  bool operator==(const AdapterConfig&) const = default;
};

struct AdapterParams {
  AdapterConfig config;
  Matrix down;       // b x d
  Vector down_bias;  // b
  Matrix up;         // d x b
  Vector up_bias;    // d
  Vector norm_gain;  // d
  Vector norm_bias;  // d

  static AdapterParams zeros(const AdapterConfig& cfg);
  // 2 d b + b + d + 2 d
  std::size_t scalar_count() const;
  bool operator==(const AdapterParams&) const = default;
};

// Gaussian `down` (stddev 1/sqrt(d)), zero `up` and biases, unit gain.
AdapterParams init_adapter(const AdapterConfig& cfg, Rng& rng);

struct AdapterTrace {
  Vector input;
  Vector hidden_pre;  // down * x + down_bias
  Vector hidden;      // gelu(hidden_pre)
  Vector normalized;  // pre-affine normalized residual
  LayerNormStats norm;
  Vector output;
};

struct AdapterGradients {
  AdapterParams params;
  Vector input;
};

Vector adapter_forward(const AdapterParams& params, std::span<const Scalar> x);

struct AdapterWorkspace {
  std::vector<Scalar> hidden;
  std::vector<Scalar> residual;
  std::vector<Scalar> normalized;
};

// Trace-free forward with the same arithmetic as adapter_forward. `out` may
// alias `x`.
void adapter_forward_into(const AdapterParams& params, std::span<const Scalar> x,
                          std::span<Scalar> out, AdapterWorkspace& ws);
AdapterTrace adapter_forward_traced(const AdapterParams& params, std::span<const Scalar> x);

AdapterGradients adapter_backward(const AdapterParams& params, const AdapterTrace& trace,
                                  std::span<const Scalar> d_output);
void adapter_backward_accumulate(const AdapterParams& params, const AdapterTrace& trace,
                                 std::span<const Scalar> d_output, AdapterParams& grads,
                                 std::span<Scalar> d_input);

}  // namespace spartan
