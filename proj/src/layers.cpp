// Copyright 2026 The Spartan Memory Authors.
// SPDX-License-Identifier: Apache-2.0

#include "spartan/layers.hpp"

#include <cmath>
#include <numbers>

#include "spartan/errors.hpp"

namespace spartan {

Scalar gelu(Scalar x) { return 0.5 * x * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0)); }

Scalar gelu_derivative(Scalar x) {
  const Scalar cdf = 0.5 * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0));
  const Scalar pdf = std::exp(-0.5 * x * x) * std::numbers::inv_sqrtpi / std::numbers::sqrt2;
  return cdf + x * pdf;
}

LayerNormStats layer_norm(std::span<const Scalar> x, std::span<const Scalar> gain,
                          std::span<const Scalar> bias, std::span<Scalar> normalized,
                          std::span<Scalar> y) {
  const std::size_t n = x.size();
  if (gain.size() != n || bias.size() != n || normalized.size() != n || y.size() != n) {
    throw ShapeError("layer_norm: inconsistent lengths");
  }
  Scalar mean = 0.0;
  for (auto v : x) mean += v;
  mean /= static_cast<Scalar>(n);
  Scalar var = 0.0;
  for (auto v : x) var += (v - mean) * (v - mean);
  var /= static_cast<Scalar>(n);
  LayerNormStats stats{1.0 / std::sqrt(var + kLayerNormEps)};
  for (std::size_t i = 0; i < n; ++i) {
    normalized[i] = (x[i] - mean) * stats.inv_std;
    y[i] = gain[i] * normalized[i] + bias[i];
  }
  return stats;
}

void layer_norm_backward(std::span<const Scalar> normalized, LayerNormStats stats,
                         std::span<const Scalar> gain, std::span<const Scalar> dy,
                         std::span<Scalar> dx, std::span<Scalar> d_gain,
                         std::span<Scalar> d_bias) {
  const std::size_t n = normalized.size();
  Scalar mean_g = 0.0, mean_gx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Scalar g = dy[i] * gain[i];
    mean_g += g;
    mean_gx += g * normalized[i];
  }
  mean_g /= static_cast<Scalar>(n);
  mean_gx /= static_cast<Scalar>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Scalar g = dy[i] * gain[i];
    dx[i] = stats.inv_std * (g - mean_g - normalized[i] * mean_gx);
  }
  if (!d_gain.empty()) {
    for (std::size_t i = 0; i < n; ++i) d_gain[i] += dy[i] * normalized[i];
  }
  if (!d_bias.empty()) {
    for (std::size_t i = 0; i < n; ++i) d_bias[i] += dy[i];
  }
}

}  // namespace spartan
