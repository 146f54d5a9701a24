#pragma once

// Graph-free forward pass over a snapshot of a model's weights, templated on
// the arithmetic type. InferenceEngine<double> reproduces Model::predict to
// rounding; InferenceEngine<float> halves the memory traffic of the weights,
// which dominates single-sample latency for the larger presets.

#include <atomic>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <optional>
#include <vector>

#include "posetraj/embedding.hpp"
#include "posetraj/model.hpp"
#include "posetraj/transform.hpp"
#include "posetraj/types.hpp"

namespace posetraj {

template <class Scalar>
class InferenceEngine {
 public:
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using Row = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

  explicit InferenceEngine(const Model& model)
      : cfg_(model.config()),
        skeleton_(model.skeleton_ptr()),
        adjacency_(model.adjacency()),
        passes_(std::make_unique<std::atomic<std::size_t>>(0)) {
    const int d = cfg_.model_dim();
    spatial_ = spatial_encoding(cfg_.num_joints, cfg_.j_dim).cast<Scalar>();
    temporal_in_ = temporal_encoding(cfg_.input_len, d).cast<Scalar>();
    temporal_out_ = temporal_encoding(cfg_.output_len, d, cfg_.input_len).cast<Scalar>();
    if (cfg_.use_gat) {
      for (const GatHead& h : model.gat().heads) gat_heads_.push_back({cast(h.weight), cast_row(h.attn)});
      gat_bias_ = cast_row(model.gat().bias);
    } else {
      // the linear embedding parameters are only reachable by name
      embed_weight_ = model.parameters().get("embed.weight").value().cast<Scalar>();
      embed_bias_ = model.parameters().get("embed.bias").value().cast<Scalar>();
    }
    for (const EncoderLayerParams& l : model.encoder_layers()) {
      encoder_.push_back({attention(l.self_attn), norm(l.norm1), ffn(l.ffn), norm(l.norm2)});
    }
    for (const DecoderLayerParams& l : model.decoder_layers()) {
      DecoderLayer layer{attention(l.self_attn), norm(l.norm1), std::nullopt, {}, std::nullopt, {}, ffn(l.ffn),
                         norm(l.norm4)};
      if (l.cross_attn) {
        layer.cross = attention(*l.cross_attn);
        layer.norm2 = norm(l.norm2);
      }
      if (l.shared_attn) {
        layer.shared = attention(*l.shared_attn);
        layer.norm3 = norm(l.norm3);
      }
      decoder_.push_back(std::move(layer));
    }
    out_w_ = cast(model.output().weight);
    out_b_ = cast_row(model.output().bias);
  }

  const ModelConfig& config() const { return cfg_; }
  std::size_t decoder_passes() const { return passes_->load(); }

  Matrix forward_canonical(const Matrix& canonical_input) const {
    if (canonical_input.rows() != cfg_.input_len || canonical_input.cols() != 3 * cfg_.num_joints) {
      throw DimensionMismatch("inference engine: unexpected input shape");
    }
    const Mat input = canonical_input.cast<Scalar>();
    Mat graph_flat = cfg_.use_gat ? embed_gat(input) : embed_linear(input);
    Mat embedded = graph_flat + temporal_in_;

    const bool masked = cfg_.relative_attention;
    const int clip = cfg_.effective_rel_clip();
    Mat z = embedded;
    for (const EncoderLayer& l : encoder_) {
      z = layer_norm(z + attend(z, z, l.self_attn, masked, clip), l.norm1);
      z = layer_norm(z + feed_forward(z, l.ffn), l.norm2);
    }

    Mat x = embedded.row(embedded.rows() - 1).replicate(cfg_.output_len, 1) + temporal_out_;
    passes_->fetch_add(1);
    for (const DecoderLayer& l : decoder_) {
      x = layer_norm(x + attend(x, x, l.self_attn, masked, clip), l.norm1);
      if (l.cross) x = layer_norm(x + attend(x, z, *l.cross, false, 0), l.norm2);
      if (l.shared) x = layer_norm(x + attend(x, graph_flat, *l.shared, false, 0), l.norm3);
      x = layer_norm(x + feed_forward(x, l.ffn), l.norm4);
    }
    Mat out = x * out_w_;
    out.rowwise() += out_b_;
    return out.template cast<double>();
  }

  Prediction predict(const MotionSequence& s_in) const {
    if (!(s_in.skeleton() == *skeleton_)) throw SkeletonMismatch("input skeleton differs from the model's");
    if (s_in.num_frames() != cfg_.input_len) {
      throw SequenceTooShort("model expects " + std::to_string(cfg_.input_len) + " input frames, got " +
                             std::to_string(s_in.num_frames()));
    }
    const TransformParams params = cfg_.use_transform
                                       ? compute_params(s_in.frames(), skeleton_->root_index(), cfg_.delta)
                                       : TransformParams::identity();
    Matrix canonical = forward_canonical(canonicalize(s_in.frames(), params));
    MotionSequence global = s_in.with_frames(decanonicalize(canonical, params));
    return {std::move(global), std::move(canonical), params};
  }

 private:
  struct Attention {
    Mat wq, wk, wv, wo;
    Row bq, bk, bv, bo;
    Mat rel_key, rel_value;  // empty unless relative
  };
  struct Norm {
    Row gamma, beta;
  };
  struct FeedForward {
    Mat w1, w2;
    Row b1, b2;
  };
  struct EncoderLayer {
    Attention self_attn;
    Norm norm1;
    FeedForward ffn;
    Norm norm2;
  };
  struct DecoderLayer {
    Attention self_attn;
    Norm norm1;
    std::optional<Attention> cross;
    Norm norm2;
    std::optional<Attention> shared;
    Norm norm3;
    FeedForward ffn;
    Norm norm4;
  };
  struct GatHeadWeights {
    Mat weight;
    Row attn;
  };

  static Mat cast(const ad::Var& v) { return v.value().cast<Scalar>(); }
  static Row cast_row(const ad::Var& v) { return v.value().row(0).cast<Scalar>(); }

  static Attention attention(const AttentionParams& p) {
    Attention a{cast(p.wq), cast(p.wk), cast(p.wv), cast(p.wo), cast_row(p.bq), cast_row(p.bk), cast_row(p.bv),
                cast_row(p.bo), Mat(), Mat()};
    if (p.relative()) {
      a.rel_key = cast(p.rel_key);
      a.rel_value = cast(p.rel_value);
    }
    return a;
  }
  static Norm norm(const LayerNormParams& p) { return {cast_row(p.gamma), cast_row(p.beta)}; }
  static FeedForward ffn(const FeedForwardParams& p) { return {cast(p.w1), cast(p.w2), cast_row(p.b1), cast_row(p.b2)}; }

  static Mat affine(const Mat& x, const Mat& w, const Row& b) {
    Mat y = x * w;
    y.rowwise() += b;
    return y;
  }

  static Mat layer_norm(const Mat& x, const Norm& n) {
    Mat y(x.rows(), x.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      const Scalar mu = x.row(r).mean();
      const Scalar var = (x.row(r).array() - mu).square().mean();
      const Scalar inv = Scalar(1) / std::sqrt(var + Scalar(1e-5));
      y.row(r) = ((x.row(r).array() - mu) * inv * n.gamma.array() + n.beta.array()).matrix();
    }
    return y;
  }

  static Mat feed_forward(const Mat& x, const FeedForward& f) {
    return affine(affine(x, f.w1, f.b1).cwiseMax(Scalar(0)), f.w2, f.b2);
  }

  Mat attend(const Mat& query_in, const Mat& kv_in, const Attention& a, bool causal, int clip) const {
    const Mat q = affine(query_in, a.wq, a.bq);
    const Mat k = affine(kv_in, a.wk, a.bk);
    const Mat v = affine(kv_in, a.wv, a.bv);
    const Eigen::Index tq = q.rows();
    const Eigen::Index tk = k.rows();
    const Eigen::Index dh = q.cols() / cfg_.num_heads;
    const bool relative = a.rel_key.size() > 0;
    const Scalar inv = Scalar(1) / std::sqrt(static_cast<Scalar>(dh));
    Mat ctx(tq, q.cols());
    for (int h = 0; h < cfg_.num_heads; ++h) {
      const auto qh = q.middleCols(h * dh, dh);
      Mat s = (qh * k.middleCols(h * dh, dh).transpose()) * inv;
      Mat qr;
      if (relative) qr = (qh * a.rel_key.transpose()) * inv;
      for (Eigen::Index i = 0; i < tq; ++i) {
        for (Eigen::Index j = 0; j < tk; ++j) {
          if (causal && j > i) {
            s(i, j) = -std::numeric_limits<Scalar>::infinity();
          } else if (relative) {
            s(i, j) += qr(i, ad::relative_slot(i, j, clip));
          }
        }
        const Scalar m = s.row(i).maxCoeff();
        s.row(i) = (s.row(i).array() - m).exp();
        s.row(i) /= s.row(i).sum();
      }
      Mat oh = s * v.middleCols(h * dh, dh);
      if (relative) {
        Mat arel = Mat::Zero(tq, a.rel_value.rows());
        for (Eigen::Index i = 0; i < tq; ++i)
          for (Eigen::Index j = 0; j < tk; ++j) arel(i, ad::relative_slot(i, j, clip)) += s(i, j);
        oh += arel * a.rel_value;
      }
      ctx.middleCols(h * dh, dh) = oh;
    }
    return affine(ctx, a.wo, a.bo);
  }

  Mat embed_gat(const Mat& input) const {
    const int n = cfg_.num_joints;
    const Eigen::Index t1 = input.rows();
    const Eigen::Map<const Mat> joints(input.data(), t1 * n, 3);
    Mat acc = Mat::Zero(t1 * n, cfg_.j_dim);
    for (const GatHeadWeights& head : gat_heads_) {
      const Mat hfeat = joints * head.weight;
      const auto a_src = head.attn.leftCols(cfg_.j_dim);
      const auto a_dst = head.attn.rightCols(cfg_.j_dim);
      const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> sl = hfeat * a_src.transpose();
      const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> sr = hfeat * a_dst.transpose();
      const Scalar slope = static_cast<Scalar>(cfg_.leaky_slope);
      for (Eigen::Index f = 0; f < t1; ++f) {
        const Eigen::Index base = f * n;
        for (int i = 0; i < n; ++i) {
          Scalar mx = -std::numeric_limits<Scalar>::infinity();
          Row w = Row::Zero(n);
          for (int j = 0; j < n; ++j) {
            if (!adjacency_(i, j)) continue;
            const Scalar e = sl(base + i) + sr(base + j);
            w(j) = e > Scalar(0) ? e : slope * e;
            mx = std::max(mx, w(j));
          }
          Scalar z = 0;
          for (int j = 0; j < n; ++j) {
            if (!adjacency_(i, j)) continue;
            w(j) = std::exp(w(j) - mx);
            z += w(j);
          }
          acc.row(base + i) += (w / z) * hfeat.middleRows(base, n);
        }
      }
    }
    if (gat_heads_.size() > 1) acc /= static_cast<Scalar>(gat_heads_.size());
    acc.rowwise() += gat_bias_;
    acc += spatial_.replicate(t1, 1);
    return Eigen::Map<const Mat>(acc.data(), t1, static_cast<Eigen::Index>(n) * cfg_.j_dim);
  }

  Mat embed_linear(const Mat& input) const {
    Mat flat = affine(input, embed_weight_, embed_bias_);
    flat.rowwise() += Eigen::Map<const Row>(spatial_.data(), spatial_.size());
    return flat;
  }

  ModelConfig cfg_;
  SkeletonPtr skeleton_;
  Adjacency adjacency_;
  Mat spatial_, temporal_in_, temporal_out_;
  std::vector<GatHeadWeights> gat_heads_;
  Row gat_bias_;
  Mat embed_weight_;
  Row embed_bias_;
  std::vector<EncoderLayer> encoder_;
  std::vector<DecoderLayer> decoder_;
  Mat out_w_;
  Row out_b_;
  std::unique_ptr<std::atomic<std::size_t>> passes_;
};

}  // namespace posetraj
