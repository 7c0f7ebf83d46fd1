// Copyright 2026 The Spartan Memory Authors.
// SPDX-License-Identifier: Apache-2.0

#include "spartan/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "spartan/errors.hpp"

namespace spartan {

namespace {

thread_local std::uint64_t tls_macs = 0;

std::string dims(std::size_t r, std::size_t c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<Scalar> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
  if (data_.size() != rows * cols) {
    throw ShapeError("matrix " + dims(rows, cols) + " given " +
                     std::to_string(data_.size()) + " elements");
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

void Matrix::fill(Scalar value) { std::fill(data_.begin(), data_.end(), value); }

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

std::size_t Rng::index(std::size_t n) {
  if (n == 0) throw ParameterError("Rng::index requires n >= 1");
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
  std::uint64_t draw = engine_();
  while (draw >= limit) draw = engine_();
  return static_cast<std::size_t>(draw % bound);
}

Rng Rng::fork(std::uint64_t stream) const {
  return Rng(splitmix64(seed_ ^ splitmix64(stream + 1)));
}

std::uint64_t mac_count() { return tls_macs; }
void reset_mac_count() { tls_macs = 0; }
void add_macs(std::uint64_t n) { tls_macs += n; }

Scalar dot(std::span<const Scalar> a, std::span<const Scalar> b) {
  if (a.size() != b.size()) {
    throw ShapeError("dot: lengths " + std::to_string(a.size()) + " and " +
                     std::to_string(b.size()));
  }
  const Scalar* pa = a.data();
  const Scalar* pb = b.data();
  const std::size_t n = a.size();
  Scalar s = 0.0;
#pragma omp simd reduction(+ : s)
  for (std::size_t i = 0; i < n; ++i) s += pa[i] * pb[i];
  return s;
}

void axpy(Scalar alpha, std::span<const Scalar> x, std::span<Scalar> y) {
  if (x.size() != y.size()) {
    throw ShapeError("axpy: lengths " + std::to_string(x.size()) + " and " +
                     std::to_string(y.size()));
  }
  const std::size_t n = x.size();
  const Scalar* src = x.data();
  Scalar* dst = y.data();
#pragma omp simd
  for (std::size_t i = 0; i < n; ++i) dst[i] += alpha * src[i];
}

void matvec_into(const Matrix& m, std::span<const Scalar> v, std::span<Scalar> out) {
  if (m.cols() != v.size() || m.rows() != out.size()) {
    throw ShapeError("matvec: matrix " + dims(m.rows(), m.cols()) + ", vector " +
                     std::to_string(v.size()) + ", output " +
                     std::to_string(out.size()));
  }
  for (std::size_t r = 0; r < m.rows(); ++r) out[r] = dot(m.row(r), v);
  add_macs(static_cast<std::uint64_t>(m.rows()) * m.cols());
}

Vector matvec(const Matrix& m, std::span<const Scalar> v) {
  Vector out(m.rows());
  matvec_into(m, v, out.span());
  return out;
}

void matvec_transposed_into(const Matrix& m, std::span<const Scalar> v,
                            std::span<Scalar> out) {
  if (m.rows() != v.size() || m.cols() != out.size()) {
    throw ShapeError("matvec_transposed: matrix " + dims(m.rows(), m.cols()) +
                     ", vector " + std::to_string(v.size()) + ", output " +
                     std::to_string(out.size()));
  }
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const Scalar w = v[r];
    const Scalar* row = m.row(r).data();
    Scalar* dst = out.data();
#pragma omp simd
    for (std::size_t c = 0; c < m.cols(); ++c) dst[c] += w * row[c];
  }
  add_macs(static_cast<std::uint64_t>(m.rows()) * m.cols());
}

Vector matvec_transposed(const Matrix& m, std::span<const Scalar> v) {
  Vector out(m.cols());
  matvec_transposed_into(m, v, out.span());
  return out;
}

void add_outer(Matrix& m, Scalar alpha, std::span<const Scalar> u,
               std::span<const Scalar> v) {
  if (m.rows() != u.size() || m.cols() != v.size()) {
    throw ShapeError("add_outer: matrix " + dims(m.rows(), m.cols()) + ", u " +
                     std::to_string(u.size()) + ", v " + std::to_string(v.size()));
  }
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const Scalar w = alpha * u[r];
    if (w == 0.0) continue;
    Scalar* row = m.row(r).data();
    const Scalar* src = v.data();
#pragma omp simd
    for (std::size_t c = 0; c < m.cols(); ++c) row[c] += w * src[c];
  }
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: " + dims(a.rows(), a.cols()) + " * " +
                     dims(b.rows(), b.cols()));
  }
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    Scalar* dst = out.row(i).data();
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const Scalar w = a(i, k);
      const Scalar* src = b.row(k).data();
#pragma omp simd
      for (std::size_t j = 0; j < b.cols(); ++j) dst[j] += w * src[j];
    }
  }
  add_macs(static_cast<std::uint64_t>(a.rows()) * a.cols() * b.cols());
  return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_nt: " + dims(a.rows(), a.cols()) + " * T(" +
                     dims(b.rows(), b.cols()) + ")");
  }
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto lhs = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) out(i, j) = dot(lhs, b.row(j));
  }
  add_macs(static_cast<std::uint64_t>(a.rows()) * a.cols() * b.rows());
  return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError("matmul_tn: T(" + dims(a.rows(), a.cols()) + ") * " +
                     dims(b.rows(), b.cols()));
  }
  Matrix out(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const auto lhs = a.row(k);
    const auto rhs = b.row(k);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const Scalar w = lhs[i];
      Scalar* dst = out.row(i).data();
#pragma omp simd
      for (std::size_t j = 0; j < b.cols(); ++j) dst[j] += w * rhs[j];
    }
  }
  add_macs(static_cast<std::uint64_t>(a.rows()) * a.cols() * b.cols());
  return out;
}

void softmax_inplace(std::span<Scalar> values) {
  if (values.empty()) throw ShapeError("softmax of an empty vector");
  const Scalar max = *std::max_element(values.begin(), values.end());
  Scalar total = 0.0;
  for (auto& v : values) {
    v = std::exp(v - max);
    total += v;
  }
  const Scalar inv = 1.0 / total;
  for (auto& v : values) v *= inv;
}

Vector softmax_stable(std::span<const Scalar> logits) {
  Vector out(logits);
  softmax_inplace(out.span());
  return out;
}

std::vector<std::size_t> topk_indices(std::span<const Scalar> p, std::size_t k) {
  if (k < 1 || k > p.size()) {
    throw ParameterError("topk: k=" + std::to_string(k) + " outside [1, " +
                         std::to_string(p.size()) + "]");
  }
  std::vector<std::size_t> order(p.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (k < p.size()) {
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k),
                      order.end(), [&](std::size_t a, std::size_t b) {
                        return p[a] > p[b] || (p[a] == p[b] && a < b);
                      });
    order.resize(k);
    std::sort(order.begin(), order.end());
  }
  return order;
}

void fill_gaussian(Rng& rng, std::span<Scalar> out, Scalar stddev) {
  if (stddev < 0.0) throw ParameterError("gaussian stddev must be >= 0");
  for (auto& v : out) v = stddev == 0.0 ? 0.0 : stddev * rng.normal();
}

Vector sample_gaussian(Rng& rng, std::size_t n, Scalar stddev) {
  if (n < 1) throw ParameterError("sample_gaussian requires n >= 1");
  Vector out(n);
  fill_gaussian(rng, out.span(), stddev);
  return out;
}

bool all_finite(std::span<const Scalar> values) {
  return std::all_of(values.begin(), values.end(),
                     [](Scalar v) { return std::isfinite(v); });
}

}  // namespace spartan
