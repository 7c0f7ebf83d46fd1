// Copyright 2026 The Spartan Memory Authors.
// SPDX-License-Identifier: Apache-2.0

#include "spartan/backbone.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>

#include "spartan/errors.hpp"

namespace spartan {

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = kFnvOffset) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= bytes[i];
    h *= kFnvPrime;
  }
  return h;
}

void add_bias_rows(Matrix& m, const Vector& bias) {
  for (std::size_t r = 0; r < m.rows(); ++r) axpy(1.0, bias, m.row(r));
}

Matrix gaussian_matrix(Rng& rng, std::size_t rows, std::size_t cols, Scalar stddev) {
  Matrix m(rows, cols);
  fill_gaussian(rng, m.span(), stddev);
  return m;
}

Vector ones(std::size_t n) { return Vector(n, 1.0); }

void norm_rows(const Matrix& in, const Vector& gain, const Vector& bias, Matrix& normalized,
               std::vector<LayerNormStats>* stats, Matrix& out) {
  normalized = Matrix(in.rows(), in.cols());
  out = Matrix(in.rows(), in.cols());
  if (stats) stats->resize(in.rows());
  for (std::size_t t = 0; t < in.rows(); ++t) {
    const auto s = layer_norm(in.row(t), gain, bias, normalized.row(t), out.row(t));
    if (stats) (*stats)[t] = s;
  }
}

// Multi-head self-attention core: context = concat_h softmax(Q_h K_h^T / sqrt(dh)) V_h.
Matrix attention(const Matrix& q, const Matrix& k, const Matrix& v, std::size_t heads,
                 std::vector<Matrix>* probs_out) {
  const std::size_t t_len = q.rows(), d = q.cols(), dh = d / heads;
  const Scalar scale = 1.0 / std::sqrt(static_cast<Scalar>(dh));
  Matrix context(t_len, d);
  if (probs_out) probs_out->assign(heads, Matrix(t_len, t_len));
  std::vector<Scalar> scores(t_len);
  for (std::size_t h = 0; h < heads; ++h) {
    const std::size_t off = h * dh;
    for (std::size_t i = 0; i < t_len; ++i) {
      const auto qi = q.row(i).subspan(off, dh);
      for (std::size_t j = 0; j < t_len; ++j) {
        scores[j] = scale * dot(qi, k.row(j).subspan(off, dh));
      }
      softmax_inplace(scores);
      auto ci = context.row(i).subspan(off, dh);
      for (std::size_t j = 0; j < t_len; ++j) axpy(scores[j], v.row(j).subspan(off, dh), ci);
      if (probs_out) {
        std::copy(scores.begin(), scores.end(), (*probs_out)[h].row(i).begin());
      }
    }
  }
  add_macs(2ULL * t_len * t_len * d);
  return context;
}

void layer_forward(const EncoderLayerParams& p, const BackboneConfig& cfg, const Matrix& x,
                   LayerCache* cache, Matrix& out) {
  Matrix q = matmul_nt(x, p.wq);
  add_bias_rows(q, p.bq);
  Matrix k = matmul_nt(x, p.wk);
  add_bias_rows(k, p.bk);
  Matrix v = matmul_nt(x, p.wv);
  add_bias_rows(v, p.bv);

  Matrix context = attention(q, k, v, cfg.heads, cache ? &cache->attn : nullptr);
  Matrix residual1 = matmul_nt(context, p.wo);
  for (std::size_t t = 0; t < x.rows(); ++t) {
    auto row = residual1.row(t);
    for (std::size_t j = 0; j < cfg.dim; ++j) row[j] += p.bo[j] + x(t, j);
  }
  Matrix norm1_normalized, hidden1;
  norm_rows(residual1, p.norm1_gain, p.norm1_bias, norm1_normalized,
            cache ? &cache->norm1 : nullptr, hidden1);

  Matrix ffn_pre = matmul_nt(hidden1, p.w1);
  add_bias_rows(ffn_pre, p.b1);
  Matrix ffn_act(ffn_pre.rows(), ffn_pre.cols());
  for (std::size_t i = 0; i < ffn_pre.size(); ++i) ffn_act.span()[i] = gelu(ffn_pre.span()[i]);
  Matrix residual2 = matmul_nt(ffn_act, p.w2);
  for (std::size_t t = 0; t < x.rows(); ++t) {
    auto row = residual2.row(t);
    for (std::size_t j = 0; j < cfg.dim; ++j) row[j] += p.b2[j] + hidden1(t, j);
  }
  Matrix norm2_normalized;
  norm_rows(residual2, p.norm2_gain, p.norm2_bias, norm2_normalized,
            cache ? &cache->norm2 : nullptr, out);

  if (cache) {
    cache->input = x;
    cache->q = std::move(q);
    cache->k = std::move(k);
    cache->v = std::move(v);
    cache->context = std::move(context);
    cache->norm1_normalized = std::move(norm1_normalized);
    cache->hidden1 = std::move(hidden1);
    cache->ffn_pre = std::move(ffn_pre);
    cache->ffn_act = std::move(ffn_act);
    cache->norm2_normalized = std::move(norm2_normalized);
  }
}

Matrix apply_plugin_inference(const PluginSpec& plugin, std::size_t layer, Matrix hidden) {
  switch (plugin.kind) {
    case PluginKind::kNone:
      return hidden;
    case PluginKind::kSpartan: {
      Matrix out(hidden.rows(), hidden.cols());
      SpartanWorkspace ws;
      for (std::size_t t = 0; t < hidden.rows(); ++t) {
        forward_inference(plugin.spartan[layer], hidden.row(t), out.row(t), ws);
      }
      return out;
    }
    case PluginKind::kAdapter:
    case PluginKind::kAdapterPair: {
      const std::size_t per = plugin.adapters_per_layer();
      AdapterWorkspace ws;
      for (std::size_t a = 0; a < per; ++a) {
        const auto& params = plugin.adapters[layer * per + a];
        for (std::size_t t = 0; t < hidden.rows(); ++t) {
          adapter_forward_into(params, hidden.row(t), hidden.row(t), ws);
        }
      }
      return hidden;
    }
  }
  return hidden;
}

void apply_plugin_traced(const PluginSpec& plugin, std::size_t layer, LayerCache& cache) {
  cache.output = cache.layer_output;
  switch (plugin.kind) {
    case PluginKind::kNone:
      return;
    case PluginKind::kSpartan: {
      const auto& params = plugin.spartan[layer];
      cache.spartan.clear();
      cache.spartan.reserve(cache.output.rows());
      for (std::size_t t = 0; t < cache.output.rows(); ++t) {
        cache.spartan.push_back(forward_position(params, cache.layer_output.row(t)));
        const auto& y = cache.spartan.back().output;
        std::copy(y.begin(), y.end(), cache.output.row(t).begin());
      }
      return;
    }
    case PluginKind::kAdapter:
    case PluginKind::kAdapterPair: {
      const std::size_t per = plugin.adapters_per_layer();
      cache.adapters.assign(per, {});
      for (std::size_t a = 0; a < per; ++a) {
        const auto& params = plugin.adapters[layer * per + a];
        for (std::size_t t = 0; t < cache.output.rows(); ++t) {
          cache.adapters[a].push_back(adapter_forward_traced(params, cache.output.row(t)));
          const auto& y = cache.adapters[a].back().output;
          std::copy(y.begin(), y.end(), cache.output.row(t).begin());
        }
      }
      return;
    }
  }
}

bool row_is_zero(std::span<const Scalar> row) {
  return std::all_of(row.begin(), row.end(), [](Scalar v) { return v == 0.0; });
}

void check_plugin_layers(const BackboneParams& params, const PluginSpec& plugin) {
  const std::size_t layers = params.config.layers;
  const bool ok = plugin.kind == PluginKind::kNone ||
                  (plugin.kind == PluginKind::kSpartan && plugin.spartan.size() == layers) ||
                  ((plugin.kind == PluginKind::kAdapter ||
                    plugin.kind == PluginKind::kAdapterPair) &&
                   plugin.adapters.size() == layers * plugin.adapters_per_layer());
  if (!ok) throw ConfigError("plugin does not provide one instance per encoder layer");
}

}  // namespace

void BackboneConfig::validate() const {
  if (dim < 1 || layers < 1 || heads < 1 || ffn_dim < 1) {
    throw ConfigError("backbone dim, layers, heads and ffn_dim must be >= 1");
  }
  if (dim % heads != 0) {
    throw ConfigError("backbone dim " + std::to_string(dim) + " is not divisible by " +
                      std::to_string(heads) + " heads");
  }
  if (vocab_buckets < 2) throw ConfigError("vocab_buckets must be >= 2");
  if (max_seq_len < 1) throw ConfigError("max_seq_len must be >= 1");
}

TokenIds tokenize(std::string_view text, const BackboneConfig& cfg) {
  TokenIds ids{kBosToken};
  const std::uint64_t buckets = cfg.vocab_buckets - 1;
  auto emit = [&](std::string_view token) {
    if (ids.size() < cfg.max_seq_len) {
      ids.push_back(static_cast<std::uint32_t>(1 + fnv1a(token.data(), token.size()) % buckets));
    }
  };
  std::string word;
  auto flush = [&] {
    if (!word.empty()) {
      emit(word);
      word.clear();
    }
  };
  for (const char ch : text) {
    const auto uc = static_cast<unsigned char>(ch);
    if (std::isspace(uc)) {
      flush();
    } else if (uc < 0x80 && std::ispunct(uc)) {
      flush();
      emit(std::string_view(&ch, 1));
    } else {
      word.push_back(static_cast<char>(uc < 0x80 ? std::tolower(uc) : uc));
    }
  }
  flush();
  return ids;
}

BackboneParams init_backbone(const BackboneConfig& cfg, std::size_t num_labels, Rng& rng) {
  cfg.validate();
  if (num_labels < 1) throw ConfigError("num_labels must be >= 1");
  const std::size_t d = cfg.dim;
  const Scalar s_in = 1.0 / std::sqrt(static_cast<Scalar>(d));
  const Scalar s_ffn = 1.0 / std::sqrt(static_cast<Scalar>(cfg.ffn_dim));
  BackboneParams p;
  p.config = cfg;
  p.token_embedding = gaussian_matrix(rng, cfg.vocab_buckets, d, 1.0);
  p.position_embedding = gaussian_matrix(rng, cfg.max_seq_len, d, 0.5);
  p.embed_norm_gain = ones(d);
  p.embed_norm_bias = Vector(d);
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    EncoderLayerParams layer;
    layer.wq = gaussian_matrix(rng, d, d, s_in);
    layer.wk = gaussian_matrix(rng, d, d, s_in);
    layer.wv = gaussian_matrix(rng, d, d, s_in);
    layer.wo = gaussian_matrix(rng, d, d, s_in);
    layer.bq = Vector(d);
    layer.bk = Vector(d);
    layer.bv = Vector(d);
    layer.bo = Vector(d);
    layer.norm1_gain = ones(d);
    layer.norm1_bias = Vector(d);
    layer.w1 = gaussian_matrix(rng, cfg.ffn_dim, d, s_in);
    layer.b1 = Vector(cfg.ffn_dim);
    layer.w2 = gaussian_matrix(rng, d, cfg.ffn_dim, s_ffn);
    layer.b2 = Vector(d);
    layer.norm2_gain = ones(d);
    layer.norm2_bias = Vector(d);
    p.layers.push_back(std::move(layer));
  }
  p.head = Matrix(num_labels, d);
  p.head_bias = Vector(num_labels);
  return p;
}

std::string_view plugin_kind_name(PluginKind kind) {
  switch (kind) {
    case PluginKind::kNone: return "none";
    case PluginKind::kSpartan: return "spartan";
    case PluginKind::kAdapter: return "adapter";
    case PluginKind::kAdapterPair: return "adapter2";
  }
  return "none";
}

PluginKind parse_plugin_kind(std::string_view name) {
  if (name == "none") return PluginKind::kNone;
  if (name == "spartan") return PluginKind::kSpartan;
  if (name == "adapter" || name == "pfeiffer") return PluginKind::kAdapter;
  if (name == "adapter2" || name == "houlsby") return PluginKind::kAdapterPair;
  throw ConfigError("unknown plugin kind '" + std::string(name) +
                    "' (valid: none, spartan, adapter, adapter2)");
}

std::size_t PluginSpec::adapters_per_layer() const {
  return kind == PluginKind::kAdapterPair ? 2 : (kind == PluginKind::kAdapter ? 1 : 0);
}

void validate_plugin(const BackboneConfig& backbone, const PluginConfig& plugin) {
  if (plugin.kind == PluginKind::kSpartan) {
    if (plugin.spartan.dim != backbone.dim) {
      throw ConfigError("memory dim " + std::to_string(plugin.spartan.dim) +
                        " does not match backbone dim " + std::to_string(backbone.dim));
    }
    plugin.spartan.validate();
  } else if (plugin.kind == PluginKind::kAdapter || plugin.kind == PluginKind::kAdapterPair) {
    if (plugin.adapter.dim != backbone.dim) {
      throw ConfigError("adapter dim " + std::to_string(plugin.adapter.dim) +
                        " does not match backbone dim " + std::to_string(backbone.dim));
    }
    plugin.adapter.validate();
  }
}

PluginSpec init_plugin(const BackboneConfig& backbone, const PluginConfig& plugin, Rng& rng) {
  validate_plugin(backbone, plugin);
  PluginSpec spec;
  spec.kind = plugin.kind;
  if (plugin.kind == PluginKind::kSpartan) {
    for (std::size_t l = 0; l < backbone.layers; ++l) {
      spec.spartan.push_back(init_params(plugin.spartan, rng));
    }
  } else if (plugin.kind != PluginKind::kNone) {
    const std::size_t total = backbone.layers * spec.adapters_per_layer();
    for (std::size_t a = 0; a < total; ++a) spec.adapters.push_back(init_adapter(plugin.adapter, rng));
  }
  return spec;
}

PluginSpec zeros_like(const PluginSpec& plugin) {
  PluginSpec z;
  z.kind = plugin.kind;
  for (const auto& p : plugin.spartan) z.spartan.push_back(SpartanLayerParams::zeros(p.config));
  for (const auto& p : plugin.adapters) z.adapters.push_back(AdapterParams::zeros(p.config));
  return z;
}

Model build_model(const BackboneConfig& backbone, std::size_t num_labels,
                  const PluginConfig& plugin, std::uint64_t seed) {
  Rng root(seed);
  Rng backbone_rng = root.fork(1);
  Rng plugin_rng = root.fork(2);
  Rng head_rng = root.fork(3);
  Model model;
  model.backbone = init_backbone(backbone, num_labels, backbone_rng);
  model.plugin = init_plugin(backbone, plugin, plugin_rng);
  fill_gaussian(head_rng, model.backbone.head.span(), 0.02);
  return model;
}

Matrix embed(const BackboneParams& params, const TokenIds& ids) {
  const auto& cfg = params.config;
  if (ids.empty() || ids.size() > cfg.max_seq_len) {
    throw ShapeError("sequence length " + std::to_string(ids.size()) + " outside [1, " +
                     std::to_string(cfg.max_seq_len) + "]");
  }
  Matrix out(ids.size(), cfg.dim);
  Vector sum(cfg.dim), normalized(cfg.dim);
  for (std::size_t t = 0; t < ids.size(); ++t) {
    if (ids[t] >= cfg.vocab_buckets) {
      throw ShapeError("token id " + std::to_string(ids[t]) + " outside vocabulary of " +
                       std::to_string(cfg.vocab_buckets));
    }
    const auto tok = params.token_embedding.row(ids[t]);
    const auto pos = params.position_embedding.row(t);
    for (std::size_t j = 0; j < cfg.dim; ++j) sum[j] = tok[j] + pos[j];
    layer_norm(sum, params.embed_norm_gain, params.embed_norm_bias, normalized.span(),
               out.row(t));
  }
  return out;
}

Matrix encode(const BackboneParams& params, const TokenIds& ids, const PluginSpec& plugin) {
  check_plugin_layers(params, plugin);
  Matrix hidden = embed(params, ids);
  for (std::size_t l = 0; l < params.config.layers; ++l) {
    Matrix out;
    layer_forward(params.layers[l], params.config, hidden, nullptr, out);
    hidden = apply_plugin_inference(plugin, l, std::move(out));
  }
  return hidden;
}

EncodeCache encode_traced(const BackboneParams& params, const TokenIds& ids,
                          const PluginSpec& plugin) {
  check_plugin_layers(params, plugin);
  EncodeCache cache;
  cache.layers.resize(params.config.layers);
  Matrix hidden = embed(params, ids);
  for (std::size_t l = 0; l < params.config.layers; ++l) {
    auto& lc = cache.layers[l];
    layer_forward(params.layers[l], params.config, hidden, &lc, lc.layer_output);
    apply_plugin_traced(plugin, l, lc);
    hidden = lc.output;
  }
  cache.output = std::move(hidden);
  return cache;
}

Vector pool(const BackboneConfig& cfg, const Matrix& hidden) {
  if (cfg.pooling == Pooling::kFirstToken) return Vector(hidden.row(0));
  Vector out(hidden.cols());
  for (std::size_t t = 0; t < hidden.rows(); ++t) axpy(1.0, hidden.row(t), out.span());
  for (auto& v : out) v /= static_cast<Scalar>(hidden.rows());
  return out;
}

Vector classify(const BackboneParams& params, std::span<const Scalar> pooled) {
  if (pooled.size() != params.head.cols()) {
    throw ShapeError("classifier expects dimension " + std::to_string(params.head.cols()) +
                     ", got " + std::to_string(pooled.size()));
  }
  Vector logits = matvec(params.head, pooled);
  axpy(1.0, params.head_bias, logits.span());
  return logits;
}

ModelGradients zeros_like(const Model& model) {
  ModelGradients g;
  g.plugin = zeros_like(model.plugin);
  g.head = Matrix(model.backbone.head.rows(), model.backbone.head.cols());
  g.head_bias = Vector(model.backbone.head_bias.size());
  return g;
}

Matrix encoder_layer_backward(const EncoderLayerParams& p, const BackboneConfig& cfg,
                              const LayerCache& c, const Matrix& d_out) {
  const std::size_t t_len = d_out.rows(), d = cfg.dim, heads = cfg.heads, dh = d / heads;

  // Output normalization, then the FFN branch and its residual.
  Matrix d_hidden1(t_len, d);
  for (std::size_t t = 0; t < t_len; ++t) {
    layer_norm_backward(c.norm2_normalized.row(t), c.norm2[t], p.norm2_gain, d_out.row(t),
                        d_hidden1.row(t), {}, {});
  }
  Matrix d_ffn = matmul(d_hidden1, p.w2);
  for (std::size_t i = 0; i < d_ffn.size(); ++i) {
    d_ffn.span()[i] *= gelu_derivative(c.ffn_pre.span()[i]);
  }
  const Matrix d_from_ffn = matmul(d_ffn, p.w1);
  axpy(1.0, d_from_ffn.span(), d_hidden1.span());

  // First normalization, attention output projection and residual.
  Matrix d_residual1(t_len, d);
  for (std::size_t t = 0; t < t_len; ++t) {
    layer_norm_backward(c.norm1_normalized.row(t), c.norm1[t], p.norm1_gain,
                        d_hidden1.row(t), d_residual1.row(t), {}, {});
  }
  const Matrix d_context = matmul(d_residual1, p.wo);

  Matrix dq(t_len, d), dk(t_len, d), dv(t_len, d);
  const Scalar scale = 1.0 / std::sqrt(static_cast<Scalar>(dh));
  std::vector<Scalar> d_scores(t_len);
  for (std::size_t h = 0; h < heads; ++h) {
    const std::size_t off = h * dh;
    const Matrix& a = c.attn[h];
    for (std::size_t i = 0; i < t_len; ++i) {
      const auto dci = d_context.row(i).subspan(off, dh);
      Scalar centre = 0.0;
      for (std::size_t j = 0; j < t_len; ++j) {
        d_scores[j] = dot(dci, c.v.row(j).subspan(off, dh));
        centre += a(i, j) * d_scores[j];
        axpy(a(i, j), dci, dv.row(j).subspan(off, dh));
      }
      auto dqi = dq.row(i).subspan(off, dh);
      const auto qi = c.q.row(i).subspan(off, dh);
      for (std::size_t j = 0; j < t_len; ++j) {
        const Scalar ds = scale * a(i, j) * (d_scores[j] - centre);
        axpy(ds, c.k.row(j).subspan(off, dh), dqi);
        axpy(ds, qi, dk.row(j).subspan(off, dh));
      }
    }
  }

  Matrix d_input = d_residual1;
  axpy(1.0, matmul(dq, p.wq).span(), d_input.span());
  axpy(1.0, matmul(dk, p.wk).span(), d_input.span());
  axpy(1.0, matmul(dv, p.wv).span(), d_input.span());
  return d_input;
}

void backward_encoder(const Model& model, const EncodeCache& cache, Matrix d_output,
                      ModelGradients& grads) {
  const auto& cfg = model.backbone.config;
  const auto& plugin = model.plugin;
  for (std::size_t l = cfg.layers; l-- > 0;) {
    const auto& lc = cache.layers[l];
    const std::size_t t_len = d_output.rows();

    Matrix d_layer(t_len, cfg.dim);
    switch (plugin.kind) {
      case PluginKind::kNone:
        d_layer = std::move(d_output);
        break;
      case PluginKind::kSpartan:
        for (std::size_t t = 0; t < t_len; ++t) {
          if (row_is_zero(d_output.row(t))) continue;
          backward_position_accumulate(plugin.spartan[l], lc.spartan[t], d_output.row(t),
                                       grads.plugin.spartan[l], d_layer.row(t));
        }
        break;
      case PluginKind::kAdapter:
      case PluginKind::kAdapterPair: {
        const std::size_t per = plugin.adapters_per_layer();
        for (std::size_t a = per; a-- > 0;) {
          const std::size_t idx = l * per + a;
          for (std::size_t t = 0; t < t_len; ++t) {
            if (row_is_zero(d_output.row(t))) {
              std::fill(d_layer.row(t).begin(), d_layer.row(t).end(), 0.0);
              continue;
            }
            adapter_backward_accumulate(plugin.adapters[idx], lc.adapters[a][t],
                                        d_output.row(t), grads.plugin.adapters[idx],
                                        d_layer.row(t));
          }
          if (a > 0) d_output = d_layer;
        }
        break;
      }
    }
    if (l == 0) break;  // nothing trainable below the first layer
    d_output = encoder_layer_backward(model.backbone.layers[l], cfg, lc, d_layer);
  }
}

namespace {

template <typename Plugin, typename Sink>
void walk_plugin(Plugin& plugin, Sink&& sink) {
  for (std::size_t l = 0; l < plugin.spartan.size(); ++l) {
    auto& p = plugin.spartan[l];
    const std::string base = "plugin." + std::to_string(l) + ".";
    const std::size_t n = p.config.num_parents, c = p.config.children_per_parent,
                      d = p.config.dim;
    sink(base + "parents", {n, d}, p.parents.span(), true);
    for (std::size_t i = 0; i < n; ++i) {
      sink(base + "child_keys." + std::to_string(i), {c, d}, p.child_keys[i].span(), true);
    }
    for (std::size_t i = 0; i < n; ++i) {
      sink(base + "child_values." + std::to_string(i), {c, d}, p.child_values[i].span(), true);
    }
  }
  const std::size_t per = plugin.adapters_per_layer();
  for (std::size_t a = 0; a < plugin.adapters.size(); ++a) {
    auto& p = plugin.adapters[a];
    const std::string base =
        "plugin." + std::to_string(a / per) + ".adapter" + std::to_string(a % per) + ".";
    const std::size_t b = p.config.bottleneck, d = p.config.dim;
    sink(base + "down", {b, d}, p.down.span(), true);
    sink(base + "down_bias", {b}, p.down_bias.span(), true);
    sink(base + "up", {d, b}, p.up.span(), true);
    sink(base + "up_bias", {d}, p.up_bias.span(), true);
    sink(base + "norm_gain", {d}, p.norm_gain.span(), true);
    sink(base + "norm_bias", {d}, p.norm_bias.span(), true);
  }
}

template <typename M, typename Sink>
void walk_model(M& model, Sink&& sink) {
  auto& bb = model.backbone;
  const std::size_t d = bb.config.dim, ffn = bb.config.ffn_dim;
  sink("embeddings.token", {bb.token_embedding.rows(), d}, bb.token_embedding.span(), false);
  sink("embeddings.position", {bb.position_embedding.rows(), d},
       bb.position_embedding.span(), false);
  sink("embeddings.norm_gain", {d}, bb.embed_norm_gain.span(), false);
  sink("embeddings.norm_bias", {d}, bb.embed_norm_bias.span(), false);
  for (std::size_t l = 0; l < bb.layers.size(); ++l) {
    auto& p = bb.layers[l];
    const std::string base = "layers." + std::to_string(l) + ".";
    sink(base + "wq", {d, d}, p.wq.span(), false);
    sink(base + "bq", {d}, p.bq.span(), false);
    sink(base + "wk", {d, d}, p.wk.span(), false);
    sink(base + "bk", {d}, p.bk.span(), false);
    sink(base + "wv", {d, d}, p.wv.span(), false);
    sink(base + "bv", {d}, p.bv.span(), false);
    sink(base + "wo", {d, d}, p.wo.span(), false);
    sink(base + "bo", {d}, p.bo.span(), false);
    sink(base + "norm1_gain", {d}, p.norm1_gain.span(), false);
    sink(base + "norm1_bias", {d}, p.norm1_bias.span(), false);
    sink(base + "w1", {ffn, d}, p.w1.span(), false);
    sink(base + "b1", {ffn}, p.b1.span(), false);
    sink(base + "w2", {d, ffn}, p.w2.span(), false);
    sink(base + "b2", {d}, p.b2.span(), false);
    sink(base + "norm2_gain", {d}, p.norm2_gain.span(), false);
    sink(base + "norm2_bias", {d}, p.norm2_bias.span(), false);
  }
  walk_plugin(model.plugin, sink);
  sink("head.weight", {bb.head.rows(), d}, bb.head.span(), true);
  sink("head.bias", {bb.head_bias.size()}, bb.head_bias.span(), true);
}

}  // namespace

std::vector<TensorView> tensors(Model& model) {
  std::vector<TensorView> out;
  walk_model(model, [&](std::string name, std::vector<std::size_t> shape,
                        std::span<Scalar> values, bool trainable) {
    out.push_back({std::move(name), std::move(shape), values, trainable});
  });
  return out;
}

std::vector<ConstTensorView> tensors(const Model& model) {
  std::vector<ConstTensorView> out;
  walk_model(model, [&](std::string name, std::vector<std::size_t> shape,
                        std::span<const Scalar> values, bool trainable) {
    out.push_back({std::move(name), std::move(shape), values, trainable});
  });
  return out;
}

std::vector<TensorView> trainable_tensors(Model& model) {
  auto all = tensors(model);
  std::erase_if(all, [](const TensorView& t) { return !t.trainable; });
  return all;
}

std::vector<TensorView> trainable_tensors(ModelGradients& grads) {
  std::vector<TensorView> out;
  walk_plugin(grads.plugin, [&](std::string name, std::vector<std::size_t> shape,
                                std::span<Scalar> values, bool) {
    out.push_back({std::move(name), std::move(shape), values, true});
  });
  out.push_back({"head.weight", {grads.head.rows(), grads.head.cols()}, grads.head.span(), true});
  out.push_back({"head.bias", {grads.head_bias.size()}, grads.head_bias.span(), true});
  return out;
}

std::uint64_t checksum(std::span<const Scalar> values) {
  return fnv1a(values.data(), values.size_bytes());
}

std::uint64_t frozen_checksum(const Model& model) {
  std::uint64_t h = kFnvOffset;
  for (const auto& t : tensors(model)) {
    if (!t.trainable) h = fnv1a(t.values.data(), t.values.size_bytes(), h);
  }
  return h;
}

}  // namespace spartan
