#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "posetraj/autodiff.hpp"
#include "posetraj/embedding.hpp"
#include "posetraj/error.hpp"
#include "posetraj/params.hpp"
#include "posetraj/skeleton.hpp"
#include "posetraj/transform.hpp"
#include "posetraj/types.hpp"

namespace posetraj {

struct ModelConfig {
  int num_joints = 17;
  int j_dim = 32;
  int gat_heads = 1;
  double leaky_slope = 0.2;
  int num_layers = 4;
  int num_heads = 8;
  int ffn_dim = 2048;
  int rel_clip = 0;  // 0 selects input_len + output_len
  double dropout = 0.1;
  int input_len = 5;
  int output_len = 20;
  int delta = 1;
  bool use_transform = true;
  // Component switches for ablation studies.
  bool use_gat = true;
  bool relative_attention = true;
  bool cross_attention = true;
  bool shared_attention = true;
  std::uint64_t seed = 0;

  int model_dim() const { return num_joints * j_dim; }
  int effective_rel_clip() const { return rel_clip > 0 ? rel_clip : input_len + output_len; }
  HorizonSpec horizon() const { return {input_len, output_len}; }

  void validate() const {
    if (num_joints < 1) throw InvalidArgument("num_joints must be positive");
    if (j_dim < 2 || j_dim % 2 != 0) throw InvalidArgument("j_dim must be even and positive");
    if (gat_heads < 1) throw InvalidArgument("gat_heads must be positive");
    if (num_layers < 0) throw InvalidArgument("num_layers must be >= 0");
    if (num_heads < 1 || model_dim() % num_heads != 0) {
      throw InvalidArgument("model dim " + std::to_string(model_dim()) + " not divisible by " +
                            std::to_string(num_heads) + " heads");
    }
    if (ffn_dim < 1) throw InvalidArgument("ffn_dim must be positive");
    if (rel_clip < 0) throw InvalidArgument("rel_clip must be >= 1 (or 0 for the default)");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw InvalidArgument("dropout must lie in [0, 1)");
    horizon().validate();
    if (delta < 1 || delta >= input_len) throw InvalidArgument("delta must satisfy 1 <= delta < input_len");
  }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Exact learnable-scalar count for a config, derived from the layer shapes.
inline std::size_t count_params(const ModelConfig& cfg) {
  const std::size_t n = static_cast<std::size_t>(cfg.num_joints);
  const std::size_t j = static_cast<std::size_t>(cfg.j_dim);
  const std::size_t d = n * j;
  const std::size_t dh = d / static_cast<std::size_t>(cfg.num_heads);
  const std::size_t f = static_cast<std::size_t>(cfg.ffn_dim);
  const std::size_t slots = 2 * static_cast<std::size_t>(cfg.effective_rel_clip()) + 1;

  const std::size_t embed =
      cfg.use_gat ? static_cast<std::size_t>(cfg.gat_heads) * (3 * j + 2 * j) + j : 3 * n * d + d;
  const std::size_t attn = 4 * (d * d + d);
  const std::size_t self_attn = attn + (cfg.relative_attention ? 2 * slots * dh : 0);
  const std::size_t norm = 2 * d;
  const std::size_t ffn = d * f + f + f * d + d;
  const std::size_t encoder_layer = self_attn + norm + ffn + norm;
  const std::size_t decoder_layer = self_attn + norm + (cfg.cross_attention ? attn + norm : 0) +
                                    (cfg.shared_attention ? attn + norm : 0) + ffn + norm;
  const std::size_t output = d * 3 * n + 3 * n;
  return embed + static_cast<std::size_t>(cfg.num_layers) * (encoder_layer + decoder_layer) + output;
}

struct AttentionParams {
  ad::Var wq, bq, wk, bk, wv, bv, wo, bo;
  ad::Var rel_key, rel_value;  // undefined unless relative

  static AttentionParams create(ParameterStore& store, const std::string& prefix, int model_dim,
                                int head_dim, int rel_clip) {
    AttentionParams p;
    p.wq = store.create(prefix + ".wq", model_dim, model_dim, Init::kXavier);
    p.bq = store.create(prefix + ".bq", 1, model_dim, Init::kZeros);
    p.wk = store.create(prefix + ".wk", model_dim, model_dim, Init::kXavier);
    p.bk = store.create(prefix + ".bk", 1, model_dim, Init::kZeros);
    p.wv = store.create(prefix + ".wv", model_dim, model_dim, Init::kXavier);
    p.bv = store.create(prefix + ".bv", 1, model_dim, Init::kZeros);
    p.wo = store.create(prefix + ".wo", model_dim, model_dim, Init::kXavier);
    p.bo = store.create(prefix + ".bo", 1, model_dim, Init::kZeros);
    if (rel_clip > 0) {
      p.rel_key = store.create(prefix + ".rel_key", 2 * rel_clip + 1, head_dim, Init::kXavier);
      p.rel_value = store.create(prefix + ".rel_value", 2 * rel_clip + 1, head_dim, Init::kXavier);
    }
    return p;
  }

  bool relative() const { return rel_key.defined(); }
};

struct LayerNormParams {
  ad::Var gamma, beta;

  static LayerNormParams create(ParameterStore& store, const std::string& prefix, int dim) {
    return {store.create(prefix + ".gamma", 1, dim, Init::kOnes),
            store.create(prefix + ".beta", 1, dim, Init::kZeros)};
  }
};

struct FeedForwardParams {
  ad::Var w1, b1, w2, b2;

  static FeedForwardParams create(ParameterStore& store, const std::string& prefix, int dim, int hidden) {
    return {store.create(prefix + ".w1", dim, hidden, Init::kXavier),
            store.create(prefix + ".b1", 1, hidden, Init::kZeros),
            store.create(prefix + ".w2", hidden, dim, Init::kXavier),
            store.create(prefix + ".b2", 1, dim, Init::kZeros)};
  }
};

struct EncoderLayerParams {
  AttentionParams self_attn;
  LayerNormParams norm1;
  FeedForwardParams ffn;
  LayerNormParams norm2;
};

struct DecoderLayerParams {
  AttentionParams self_attn;
  LayerNormParams norm1;
  std::optional<AttentionParams> cross_attn;
  LayerNormParams norm2;
  std::optional<AttentionParams> shared_attn;
  LayerNormParams norm3;
  FeedForwardParams ffn;
  LayerNormParams norm4;
};

struct OutputParams {
  ad::Var weight;  // D x 3N
  ad::Var bias;    // 1 x 3N

  static OutputParams create(ParameterStore& store, int model_dim, int out_dim) {
    return {store.create("output.weight", model_dim, out_dim, Init::kXavier),
            store.create("output.bias", 1, out_dim, Init::kZeros)};
  }
};

struct ForwardContext {
  bool training = false;
  std::mt19937_64* rng = nullptr;
};

// Projects query/key/value inputs, attends, and applies the output projection.
inline ad::Var attention_block(const ad::Var& query_in, const ad::Var& kv_in, const AttentionParams& p,
                               int heads, bool causal, int rel_clip,
                               std::vector<Matrix>* weights_out = nullptr) {
  const ad::Var q = ad::linear(query_in, p.wq, p.bq);
  const ad::Var k = ad::linear(kv_in, p.wk, p.bk);
  const ad::Var v = ad::linear(kv_in, p.wv, p.bv);
  ad::AttentionOptions opt;
  opt.heads = heads;
  opt.causal = causal;
  opt.rel_clip = rel_clip;
  const ad::Var ctx = p.relative() ? ad::attention(q, k, v, opt, &p.rel_key, &p.rel_value, weights_out)
                                   : ad::attention(q, k, v, opt, nullptr, nullptr, weights_out);
  return ad::linear(ctx, p.wo, p.bo);
}

// Temporal self-attention over T x D frames with clipped relative-position
// embeddings (when the params carry them) and an optional causal mask.
inline ad::Var relative_self_attention(const ad::Var& x, const AttentionParams& p, int heads, bool causal,
                                       int rel_clip, std::vector<Matrix>* weights_out = nullptr) {
  if (x.rows() < 1) throw DimensionMismatch("self-attention needs at least one frame");
  return attention_block(x, x, p, heads, causal, rel_clip, weights_out);
}

namespace detail {

inline ad::Var maybe_dropout(const ad::Var& x, double p, const ForwardContext& ctx) {
  if (!ctx.training || p <= 0.0 || ctx.rng == nullptr) return x;
  return ad::dropout(x, p, *ctx.rng);
}

inline ad::Var add_norm(const ad::Var& x, const ad::Var& sub, const LayerNormParams& norm, double p,
                        const ForwardContext& ctx) {
  return ad::layer_norm(ad::add(x, maybe_dropout(sub, p, ctx)), norm.gamma, norm.beta);
}

inline ad::Var feed_forward(const ad::Var& x, const FeedForwardParams& p) {
  return ad::linear(ad::relu(ad::linear(x, p.w1, p.b1)), p.w2, p.b2);
}

}  // namespace detail

// Nx layers of (causal relative self-attention -> add&norm -> FFN -> add&norm).
inline ad::Var encode(const ad::Var& embedded, const std::vector<EncoderLayerParams>& layers,
                      const ModelConfig& cfg, const ForwardContext& ctx = {}) {
  if (embedded.cols() != cfg.model_dim()) throw DimensionMismatch("encode: width != model dim");
  const bool masked = cfg.relative_attention;
  ad::Var x = embedded;
  for (const EncoderLayerParams& layer : layers) {
    x = detail::add_norm(
        x, relative_self_attention(x, layer.self_attn, cfg.num_heads, masked, cfg.effective_rel_clip()),
        layer.norm1, cfg.dropout, ctx);
    x = detail::add_norm(x, detail::feed_forward(x, layer.ffn), layer.norm2, cfg.dropout, ctx);
  }
  return x;
}

// The last embedded input frame repeated t2 times, plus the temporal encoding
// of the target positions that follow the observed ones.
inline ad::Var init_queries(const ad::Var& embedded, int t2) {
  if (t2 < 1) throw InvalidArgument("init_queries: output length must be >= 1");
  const auto t1 = static_cast<int>(embedded.rows());
  if (t1 < 1) throw DimensionMismatch("init_queries: no embedded frames");
  const ad::Var repeated = ad::repeat_row(embedded, t1 - 1, t2);
  return ad::add_const(repeated, temporal_encoding(t2, static_cast<int>(embedded.cols()), t1));
}

// One non-autoregressive pass producing every target row at once.
inline ad::Var decode(const ad::Var& queries, const ad::Var& z, const ad::Var& graph_flat,
                      const std::vector<DecoderLayerParams>& layers, const ModelConfig& cfg,
                      const ForwardContext& ctx = {}) {
  const int d = cfg.model_dim();
  if (queries.cols() != d || z.cols() != d || graph_flat.cols() != d) {
    throw DimensionMismatch("decode: width != model dim");
  }
  const bool masked = cfg.relative_attention;
  ad::Var x = queries;
  for (const DecoderLayerParams& layer : layers) {
    x = detail::add_norm(
        x, relative_self_attention(x, layer.self_attn, cfg.num_heads, masked, cfg.effective_rel_clip()),
        layer.norm1, cfg.dropout, ctx);
    if (layer.cross_attn) {
      x = detail::add_norm(x, attention_block(x, z, *layer.cross_attn, cfg.num_heads, false, 0), layer.norm2,
                           cfg.dropout, ctx);
    }
    if (layer.shared_attn) {
      x = detail::add_norm(x, attention_block(x, graph_flat, *layer.shared_attn, cfg.num_heads, false, 0),
                           layer.norm3, cfg.dropout, ctx);
    }
    x = detail::add_norm(x, detail::feed_forward(x, layer.ffn), layer.norm4, cfg.dropout, ctx);
  }
  return x;
}

// T2 x D -> T2 x 3N canonical joint coordinates.
inline ad::Var project_output(const ad::Var& h, const OutputParams& p) {
  return ad::linear(h, p.weight, p.bias);
}

struct Prediction {
  MotionSequence global;
  Matrix canonical;  // T2 x 3N, model output before the inverse transform
  TransformParams params;
};

class Model {
 public:
  Model(Skeleton skeleton, ModelConfig cfg)
      : skeleton_(std::make_shared<const Skeleton>(std::move(skeleton))),
        cfg_(cfg),
        store_(cfg.seed),
        decoder_passes_(std::make_unique<std::atomic<std::size_t>>(0)) {
    cfg_.validate();
    if (cfg_.num_joints != skeleton_->num_joints()) {
      throw SkeletonMismatch("config has " + std::to_string(cfg_.num_joints) + " joints, skeleton has " +
                             std::to_string(skeleton_->num_joints()));
    }
    adjacency_ = build_adjacency(*skeleton_);
    build();
  }

  const ModelConfig& config() const { return cfg_; }
  const Skeleton& skeleton() const { return *skeleton_; }
  const SkeletonPtr& skeleton_ptr() const { return skeleton_; }
  const Adjacency& adjacency() const { return adjacency_; }
  ParameterStore& parameters() { return store_; }
  const ParameterStore& parameters() const { return store_; }
  const GatParams& gat() const { return gat_; }
  const std::vector<EncoderLayerParams>& encoder_layers() const { return encoder_; }
  const std::vector<DecoderLayerParams>& decoder_layers() const { return decoder_; }
  const OutputParams& output() const { return output_; }

  EmbeddingConfig embedding_config() const { return {cfg_.num_joints, cfg_.j_dim}; }

  std::size_t decoder_passes() const { return decoder_passes_->load(); }

  TransformParams transform_params(const Matrix& input_frames) const {
    if (!cfg_.use_transform) return TransformParams::identity();
    return compute_params(input_frames, skeleton_->root_index(), cfg_.delta);
  }

  EmbeddedSequence embed(const Matrix& canonical_input) const {
    return cfg_.use_gat ? embed_sequence(canonical_input, adjacency_, gat_, embedding_config())
                        : embed_sequence_linear(canonical_input, linear_embed_, embedding_config());
  }

  // Canonical T1 x 3N input -> canonical T2 x 3N prediction.
  ad::Var forward_canonical(const Matrix& canonical_input, const ForwardContext& ctx = {}) const {
    if (canonical_input.rows() != cfg_.input_len || canonical_input.cols() != 3 * cfg_.num_joints) {
      throw DimensionMismatch("model expects " + std::to_string(cfg_.input_len) + " x " +
                              std::to_string(3 * cfg_.num_joints) + " input frames, got " +
                              std::to_string(canonical_input.rows()) + " x " +
                              std::to_string(canonical_input.cols()));
    }
    const EmbeddedSequence e = embed(canonical_input);
    const ad::Var z = encode(e.embedded, encoder_, cfg_, ctx);
    const ad::Var queries = init_queries(e.embedded, cfg_.output_len);
    decoder_passes_->fetch_add(1);
    const ad::Var h = decode(queries, z, e.graph_flat, decoder_, cfg_, ctx);
    return project_output(h, output_);
  }

  Prediction predict(const MotionSequence& s_in) const {
    if (!(s_in.skeleton() == *skeleton_)) throw SkeletonMismatch("input skeleton differs from the model's");
    if (s_in.num_frames() != cfg_.input_len) {
      throw SequenceTooShort("model expects " + std::to_string(cfg_.input_len) + " input frames, got " +
                             std::to_string(s_in.num_frames()));
    }
    ad::NoGradGuard no_grad;
    const TransformParams params = transform_params(s_in.frames());
    Matrix canonical = forward_canonical(canonicalize(s_in.frames(), params)).value();
    MotionSequence global = s_in.with_frames(decanonicalize(canonical, params));
    return {std::move(global), std::move(canonical), params};
  }

  MotionSequence forward(const MotionSequence& s_in) const { return predict(s_in).global; }

 private:
  void build() {
    const int d = cfg_.model_dim();
    const int dh = d / cfg_.num_heads;
    const int self_clip = cfg_.relative_attention ? cfg_.effective_rel_clip() : 0;
    if (cfg_.use_gat) {
      gat_ = GatParams::create(store_, cfg_.j_dim, cfg_.gat_heads, cfg_.leaky_slope);
    } else {
      linear_embed_ = LinearEmbeddingParams::create(store_, cfg_.num_joints, d);
    }
    for (int l = 0; l < cfg_.num_layers; ++l) {
      const std::string tag = "encoder" + std::to_string(l);
      encoder_.push_back({AttentionParams::create(store_, tag + ".self_attn", d, dh, self_clip),
                          LayerNormParams::create(store_, tag + ".norm1", d),
                          FeedForwardParams::create(store_, tag + ".ffn", d, cfg_.ffn_dim),
                          LayerNormParams::create(store_, tag + ".norm2", d)});
    }
    for (int l = 0; l < cfg_.num_layers; ++l) {
      const std::string tag = "decoder" + std::to_string(l);
      DecoderLayerParams layer;
      layer.self_attn = AttentionParams::create(store_, tag + ".self_attn", d, dh, self_clip);
      layer.norm1 = LayerNormParams::create(store_, tag + ".norm1", d);
      if (cfg_.cross_attention) {
        layer.cross_attn = AttentionParams::create(store_, tag + ".cross_attn", d, dh, 0);
        layer.norm2 = LayerNormParams::create(store_, tag + ".norm2", d);
      }
      if (cfg_.shared_attention) {
        layer.shared_attn = AttentionParams::create(store_, tag + ".shared_attn", d, dh, 0);
        layer.norm3 = LayerNormParams::create(store_, tag + ".norm3", d);
      }
      layer.ffn = FeedForwardParams::create(store_, tag + ".ffn", d, cfg_.ffn_dim);
      layer.norm4 = LayerNormParams::create(store_, tag + ".norm4", d);
      decoder_.push_back(std::move(layer));
    }
    output_ = OutputParams::create(store_, d, 3 * cfg_.num_joints);
  }

  SkeletonPtr skeleton_;
  ModelConfig cfg_;
  Adjacency adjacency_;
  ParameterStore store_;
  GatParams gat_;
  LinearEmbeddingParams linear_embed_;
  std::vector<EncoderLayerParams> encoder_;
  std::vector<DecoderLayerParams> decoder_;
  OutputParams output_;
  std::unique_ptr<std::atomic<std::size_t>> decoder_passes_;
};

}  // namespace posetraj
