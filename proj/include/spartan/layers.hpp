// Copyright 2026 The Spartan Memory Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>

#include "spartan/numerics.hpp"

namespace spartan {

inline constexpr Scalar kLayerNormEps = 1e-5;

// Exact (erf-based) GELU.
Scalar gelu(Scalar x);
Scalar gelu_derivative(Scalar x);

struct LayerNormStats {
  Scalar inv_std = 0.0;
};

// y = gain * (x - mean) / sqrt(var + eps) + bias. Writes the normalized
// pre-affine values to `normalized` for use by the backward pass.
LayerNormStats layer_norm(std::span<const Scalar> x, std::span<const Scalar> gain,
                          std::span<const Scalar> bias, std::span<Scalar> normalized,
                          std::span<Scalar> y);

// Accumulates d_gain/d_bias when those spans are non-empty; writes dL/dx.
void layer_norm_backward(std::span<const Scalar> normalized, LayerNormStats stats,
                         std::span<const Scalar> gain, std::span<const Scalar> dy,
                         std::span<Scalar> dx, std::span<Scalar> d_gain,
                         std::span<Scalar> d_bias);

}  // namespace spartan
