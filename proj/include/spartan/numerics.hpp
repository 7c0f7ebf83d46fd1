// Copyright 2026 The Spartan Memory Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <vector>

namespace spartan {

using Scalar = double;

// Fixed-dimension dense vector. The dimension is set at construction.
class Vector {
 public:
  Vector() = default;
  explicit Vector(std::size_t n, Scalar fill = 0.0) : data_(n, fill) {}
  Vector(std::initializer_list<Scalar> values) : data_(values) {}
  explicit Vector(std::vector<Scalar> values) : data_(std::move(values)) {}
  explicit Vector(std::span<const Scalar> values)
      : data_(values.begin(), values.end()) {}

  std::size_t size() const { return data_.size(); }
  Scalar& operator[](std::size_t i) { return data_[i]; }
  Scalar operator[](std::size_t i) const { return data_[i]; }

  std::span<Scalar> span() { return data_; }
  std::span<const Scalar> span() const { return data_; }
  operator std::span<const Scalar>() const { return data_; }

  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }
  auto begin() { return data_.begin(); }
  auto end() { return data_.end(); }
  auto begin() const { return data_.begin(); }
  auto end() const { return data_.end(); }

  bool operator==(const Vector&) const = default;

 private:
  std::vector<Scalar> data_;
};

// Row-major dense matrix with explicit dimensions.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, Scalar fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<Scalar> values);

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  Scalar& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  Scalar operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<Scalar> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const Scalar> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<Scalar> span() { return data_; }
  std::span<const Scalar> span() const { return data_; }
  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }

  void fill(Scalar value);

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Scalar> data_;
};

// Deterministic generator shared by every module.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the C++
// standard. Derived draws (uniform reals, Gaussians, bounded integers) are
// computed here rather than through <random> distributions, whose algorithms
// are implementation-defined; a seed therefore reproduces the same stream on
// every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  // Standard normal via Box-Muller; the paired draw is cached.
  double normal();
  // Uniform integer in [0, n), rejection-sampled (no modulo bias).
  std::size_t index(std::size_t n);

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[index(i)]);
    }
  }

  // Independent child stream, mixed from this seed and a stream id.
  Rng fork(std::uint64_t stream) const;

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

// Thread-local multiply-accumulate counter fed by the matrix kernels below.
// Only matrix-product kernels count; elementwise work and axpy do not.
std::uint64_t mac_count();
void reset_mac_count();
void add_macs(std::uint64_t n);

Scalar dot(std::span<const Scalar> a, std::span<const Scalar> b);
// y += alpha * x
void axpy(Scalar alpha, std::span<const Scalar> x, std::span<Scalar> y);

// result = m * v
Vector matvec(const Matrix& m, std::span<const Scalar> v);
void matvec_into(const Matrix& m, std::span<const Scalar> v, std::span<Scalar> out);
// result = transpose(m) * v, i.e. sum_i v[i] * row_i(m)
Vector matvec_transposed(const Matrix& m, std::span<const Scalar> v);
void matvec_transposed_into(const Matrix& m, std::span<const Scalar> v,
                            std::span<Scalar> out);
// m += alpha * u * transpose(v)
void add_outer(Matrix& m, Scalar alpha, std::span<const Scalar> u,
               std::span<const Scalar> v);

// a (m x k) * b (k x n)
Matrix matmul(const Matrix& a, const Matrix& b);
// a (m x k) * transpose(b) where b is (n x k)
Matrix matmul_nt(const Matrix& a, const Matrix& b);
// transpose(a) * b where a is (k x m), b is (k x n)
Matrix matmul_tn(const Matrix& a, const Matrix& b);

Vector softmax_stable(std::span<const Scalar> logits);
void softmax_inplace(std::span<Scalar> values);

// The k largest entries; ties go to the lower index. Returned ascending.
std::vector<std::size_t> topk_indices(std::span<const Scalar> p, std::size_t k);

Vector sample_gaussian(Rng& rng, std::size_t n, Scalar stddev);
void fill_gaussian(Rng& rng, std::span<Scalar> out, Scalar stddev);

bool all_finite(std::span<const Scalar> values);

}  // namespace spartan
