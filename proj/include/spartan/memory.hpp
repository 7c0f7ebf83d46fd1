// Copyright 2026 The Spartan Memory Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Sparse hierarchical memory layer.
//
// A layer holds N parent cells (rows of `parents`) and, for each parent, c
// child cells split into key and value rows. For an input position x:
//
//   1. parent_probs = softmax(P x); the top-K parents are selected.
//   2. each selected parent i emits v_i = transpose(C_i^V) softmax(C_i^K x).
//   3. the selected parent probabilities are renormalized to sum to one and
//      used to average the v_i; the result is added back to x.
//
// Neither softmax is temperature-scaled and no normalization layer follows the
// residual add. Step 3 is computed as a softmax over the selected parent
// logits only, which equals p_i / sum_{j in S} p_j exactly in real arithmetic
// and never divides by an underflowed global denominator.

#include <cstddef>
#include <span>
#include <vector>

#include "spartan/numerics.hpp"

namespace spartan {

struct SpartanConfig {
  std::size_t dim = 768;
  std::size_t num_parents = 16;
  std::size_t children_per_parent = 3;
  std::size_t top_k = 8;

  // Throws ConfigError unless 1 <= top_k <= num_parents, c >= 1, d >= 1.
  void validate() const;
  bool operator==(const SpartanConfig&) const = default;
};

struct SpartanLayerParams {
  SpartanConfig config;
  Matrix parents;                    // N x d
  std::vector<Matrix> child_keys;    // N of c x d
  std::vector<Matrix> child_values;  // N of c x d

  static SpartanLayerParams zeros(const SpartanConfig& cfg);
  // (N + 2 N c) d
  std::size_t scalar_count() const;
  bool operator==(const SpartanLayerParams&) const = default;
};

// Gaussian parents and keys with stddev 1/sqrt(d); zero child values, so the
// freshly initialized layer is the identity map.
SpartanLayerParams init_params(const SpartanConfig& cfg, Rng& rng);

struct ForwardTrace {
  Vector input;
  Vector parent_probs;                // N
  std::vector<std::size_t> selected;  // K, ascending
  std::vector<Vector> child_attn;     // K of c
  std::vector<Vector> child_outputs;  // K of d
  Vector agg_weights;                 // K, aligned with `selected`
  Vector output;                      // d
};

struct SpartanGradients {
  SpartanLayerParams params;  // same shapes as the layer
  Vector input;               // dL/dx
};

struct ParentChoice {
  Vector parent_probs;
  std::vector<std::size_t> selected;
};

struct ChildRepresentation {
  Vector value;  // v_i, d
  Vector attn;   // softmax(C_i^K x), c
};

struct Aggregate {
  Vector output;   // o, without the residual
  Vector weights;  // aligned with `selected`
};

ParentChoice choose_parents(const SpartanLayerParams& params,
                            std::span<const Scalar> x, std::size_t k);

ChildRepresentation child_representation(const SpartanLayerParams& params,
                                         std::size_t parent,
                                         std::span<const Scalar> x);

// Renormalizes `parent_probs` over `selected` (p_i / Z) and averages the child
// outputs. Throws NumericalError when Z == 0.
Aggregate aggregate(std::span<const Scalar> parent_probs,
                    std::span<const std::size_t> selected,
                    std::span<const Vector> child_outputs);

// softmax over logits[selected]; equals aggregate()'s weights.
Vector restricted_softmax(std::span<const Scalar> logits,
                          std::span<const std::size_t> selected);

ForwardTrace forward_position(const SpartanLayerParams& params,
                              std::span<const Scalar> x);

struct SequenceForward {
  Matrix outputs;  // T x d
  std::vector<ForwardTrace> traces;
};

// Each row is routed independently through the shared memory.
SequenceForward forward_sequence(const SpartanLayerParams& params, const Matrix& xs);
std::vector<ForwardTrace> forward_sequence(const SpartanLayerParams& params,
                                           std::span<const Vector> xs);

// Scratch space for trace-free inference.
struct SpartanWorkspace {
  std::vector<Scalar> logits;
  std::vector<Scalar> probs;
  std::vector<Scalar> attn;
  std::vector<Scalar> value;
  std::vector<Scalar> mixed;
};

// Same arithmetic as forward_position without recording a trace. `out` may not
// alias `x`.
void forward_inference(const SpartanLayerParams& params, std::span<const Scalar> x,
                       std::span<Scalar> out, SpartanWorkspace& ws);

SpartanGradients backward_position(const SpartanLayerParams& params,
                                   const ForwardTrace& trace,
                                   std::span<const Scalar> d_output);

// Adds parameter gradients into `grads` and writes dL/dx into `d_input`.
void backward_position_accumulate(const SpartanLayerParams& params,
                                  const ForwardTrace& trace,
                                  std::span<const Scalar> d_output,
                                  SpartanLayerParams& grads,
                                  std::span<Scalar> d_input);

// Unsparsified evaluation with every parent weighted by its full softmax
// probability. Used as a test oracle and as the K = N benchmark arm.
Vector dense_reference_forward(const SpartanLayerParams& params,
                               std::span<const Scalar> x);

}  // namespace spartan
