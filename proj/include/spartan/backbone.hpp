// Copyright 2026 The Spartan Memory Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

// A small post-norm Transformer encoder used as the frozen backbone, with one
// plugin slot after every layer and a trainable linear classification head.
//
// Layer l maps X to
//   H1 = LN(X + MHA(X));  H2 = LN(H1 + W2 gelu(W1 H1 + b1) + b2)
// and the layer's plugin (memory, adapter, two adapters, or nothing) is applied
// to every row of H2 before it feeds layer l + 1.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "spartan/adapter.hpp"
#include "spartan/layers.hpp"
#include "spartan/memory.hpp"
#include "spartan/numerics.hpp"

namespace spartan {

enum class Pooling { kFirstToken, kMean };

struct BackboneConfig {
  std::size_t dim = 128;
  std::size_t layers = 4;
  std::size_t heads = 4;
  std::size_t ffn_dim = 256;
  std::size_t vocab_buckets = 2048;
  std::size_t max_seq_len = 32;
  Pooling pooling = Pooling::kFirstToken;

  void validate() const;
  bool operator==(const BackboneConfig&) const = default;
};

using TokenIds = std::vector<std::uint32_t>;

inline constexpr std::uint32_t kBosToken = 0;

// Lower-cased words and single punctuation marks, each hashed (FNV-1a 64) into
// [1, vocab_buckets); id 0 is the leading BOS marker. Truncated to
// max_seq_len ids including BOS.
TokenIds tokenize(std::string_view text, const BackboneConfig& cfg);

struct EncoderLayerParams {
  Matrix wq, wk, wv, wo;  // d x d, (out x in)
  Vector bq, bk, bv, bo;
  Vector norm1_gain, norm1_bias;
  Matrix w1;  // ffn x d
  Vector b1;
  Matrix w2;  // d x ffn
  Vector b2;
  Vector norm2_gain, norm2_bias;

  bool operator==(const EncoderLayerParams&) const = default;
};

struct BackboneParams {
  BackboneConfig config;
  Matrix token_embedding;     // vocab x d
  Matrix position_embedding;  // max_seq_len x d
  Vector embed_norm_gain, embed_norm_bias;
  std::vector<EncoderLayerParams> layers;
  Matrix head;  // labels x d, trainable
  Vector head_bias;

  std::size_t num_labels() const { return head.rows(); }
  bool operator==(const BackboneParams&) const = default;
};

BackboneParams init_backbone(const BackboneConfig& cfg, std::size_t num_labels, Rng& rng);

enum class PluginKind { kNone, kSpartan, kAdapter, kAdapterPair };

std::string_view plugin_kind_name(PluginKind kind);
PluginKind parse_plugin_kind(std::string_view name);

struct PluginConfig {
  PluginKind kind = PluginKind::kSpartan;
  SpartanConfig spartan;   // dim taken from the backbone
  AdapterConfig adapter;   // dim taken from the backbone

  bool operator==(const PluginConfig&) const = default;
};

// Per-layer plugin parameters. `adapters` holds one entry per layer for
// kAdapter and two (applied in order) for kAdapterPair.
struct PluginSpec {
  PluginKind kind = PluginKind::kNone;
  std::vector<SpartanLayerParams> spartan;
  std::vector<AdapterParams> adapters;

  std::size_t adapters_per_layer() const;
  bool operator==(const PluginSpec&) const = default;
};

// Rejects plugin dims that disagree with the backbone (message names both).
void validate_plugin(const BackboneConfig& backbone, const PluginConfig& plugin);
PluginSpec init_plugin(const BackboneConfig& backbone, const PluginConfig& plugin, Rng& rng);
// Same shapes, all zeros (gradient buffers).
PluginSpec zeros_like(const PluginSpec& plugin);

struct Model {
  BackboneParams backbone;
  PluginSpec plugin;

  bool operator==(const Model&) const = default;
};

// Backbone from seed stream 1, plugin from stream 2, head from stream 3.
Model build_model(const BackboneConfig& backbone, std::size_t num_labels,
                  const PluginConfig& plugin, std::uint64_t seed);

struct LayerCache {
  Matrix input;
  Matrix q, k, v;
  std::vector<Matrix> attn;  // per head, T x T
  Matrix context;
  Matrix norm1_normalized;
  std::vector<LayerNormStats> norm1;
  Matrix hidden1;
  Matrix ffn_pre;  // T x ffn
  Matrix ffn_act;
  Matrix norm2_normalized;
  std::vector<LayerNormStats> norm2;
  Matrix layer_output;  // before the plugin
  std::vector<ForwardTrace> spartan;
  std::vector<std::vector<AdapterTrace>> adapters;  // [instance][position]
  Matrix output;        // after the plugin
};

struct EncodeCache {
  std::vector<LayerCache> layers;
  Matrix output;
};

Matrix embed(const BackboneParams& params, const TokenIds& ids);

// Encoder output, one row per token.
Matrix encode(const BackboneParams& params, const TokenIds& ids, const PluginSpec& plugin);
EncodeCache encode_traced(const BackboneParams& params, const TokenIds& ids,
                          const PluginSpec& plugin);

Vector pool(const BackboneConfig& cfg, const Matrix& hidden);
Vector classify(const BackboneParams& params, std::span<const Scalar> pooled);

struct ModelGradients {
  PluginSpec plugin;
  Matrix head;
  Vector head_bias;
};

ModelGradients zeros_like(const Model& model);

// Backpropagates dL/d(encoder output) through every layer and plugin,
// accumulating plugin gradients into `grads.plugin`. Frozen weights receive no
// gradient.
void backward_encoder(const Model& model, const EncodeCache& cache, Matrix d_output,
                      ModelGradients& grads);

// Input-gradient pass through one frozen encoder layer (no plugin).
Matrix encoder_layer_backward(const EncoderLayerParams& layer, const BackboneConfig& cfg,
                              const LayerCache& cache, const Matrix& d_layer_output);

// Flat views over every tensor of a model, in a fixed order: backbone tensors,
// then plugin tensors, then the head. Trainable = plugin + head.
struct TensorView {
  std::string name;
  std::vector<std::size_t> shape;
  std::span<Scalar> values;
  bool trainable = false;
};

struct ConstTensorView {
  std::string name;
  std::vector<std::size_t> shape;
  std::span<const Scalar> values;
  bool trainable = false;
};

std::vector<TensorView> tensors(Model& model);
std::vector<ConstTensorView> tensors(const Model& model);
// The trainable subset of tensors(model), in the same order and naming.
std::vector<TensorView> trainable_tensors(Model& model);
std::vector<TensorView> trainable_tensors(ModelGradients& grads);

// FNV-1a over the raw bytes of every frozen tensor.
std::uint64_t frozen_checksum(const Model& model);
std::uint64_t checksum(std::span<const Scalar> values);

}  // namespace spartan
