#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "posetraj/autodiff.hpp"
#include "posetraj/error.hpp"
#include "posetraj/params.hpp"
#include "posetraj/skeleton.hpp"
#include "posetraj/types.hpp"

namespace posetraj {

struct EmbeddingConfig {
  int num_joints = 17;
  int j_dim = 32;

  int model_dim() const { return num_joints * j_dim; }
};

// Standard sinusoid table: row p, column 2i -> sin(p / 10000^(2i/d)),
// column 2i+1 -> cos(same). Rows cover positions first .. first+count-1.
inline Matrix sinusoid_table(int count, int dim, int first = 0) {
  if (dim <= 0 || dim % 2 != 0) {
    throw InvalidArgument("sinusoidal encoding needs an even width, got " + std::to_string(dim));
  }
  Matrix table(count, dim);
  for (int r = 0; r < count; ++r) {
    const double pos = static_cast<double>(first + r);
    for (int i = 0; i < dim; i += 2) {
      const double angle = pos / std::pow(10000.0, static_cast<double>(i) / dim);
      table(r, i) = std::sin(angle);
      table(r, i + 1) = std::cos(angle);
    }
  }
  return table;
}

// N x j_dim, indexed by joint.
inline Matrix spatial_encoding(int num_joints, int j_dim) { return sinusoid_table(num_joints, j_dim); }

// T x D, indexed by frame; `first_frame` offsets the positions (decoder
// queries continue after the observed frames).
inline Matrix temporal_encoding(int t_len, int model_dim, int first_frame = 0) {
  return sinusoid_table(t_len, model_dim, first_frame);
}

struct GatHead {
  ad::Var weight;  // 3 x j_dim
  ad::Var attn;    // 1 x 2*j_dim, [source | neighbour]
};

struct GatParams {
  std::vector<GatHead> heads;
  ad::Var bias;  // 1 x j_dim
  double leaky_slope = 0.2;

  static GatParams create(ParameterStore& store, int j_dim, int num_heads, double leaky_slope,
                          const std::string& prefix = "gat") {
    if (num_heads < 1) throw InvalidArgument("GAT needs at least one head");
    GatParams p;
    p.leaky_slope = leaky_slope;
    for (int h = 0; h < num_heads; ++h) {
      const std::string tag = prefix + ".head" + std::to_string(h);
      p.heads.push_back({store.create(tag + ".weight", 3, j_dim, Init::kXavier),
                         store.create(tag + ".attn", 1, 2 * j_dim, Init::kXavier)});
    }
    p.bias = store.create(prefix + ".bias", 1, j_dim, Init::kZeros);
    return p;
  }

  int j_dim() const { return static_cast<int>(bias.cols()); }
};

// Joint rows ((T*N) x 3) -> joint embeddings ((T*N) x j_dim). Heads are
// averaged. `attention_out`, if set, receives each head's attention rows.
inline ad::Var gat_forward(const ad::Var& joints, const Adjacency& adj, const GatParams& params,
                           std::vector<Matrix>* attention_out = nullptr) {
  if (joints.cols() != 3) throw DimensionMismatch("gat_forward: expected 3 features per joint");
  if (adj.rows() == 0 || joints.rows() % adj.rows() != 0) {
    throw DimensionMismatch("gat_forward: joint rows not a multiple of the adjacency size");
  }
  if (attention_out) attention_out->clear();
  ad::Var acc;
  for (const GatHead& head : params.heads) {
    Matrix weights;
    ad::Var h = ad::matmul(joints, head.weight);
    ad::Var out = ad::graph_attention(h, head.attn, adj, params.leaky_slope,
                                      attention_out ? &weights : nullptr);
    if (attention_out) attention_out->push_back(std::move(weights));
    acc = acc.defined() ? ad::add(acc, out) : out;
  }
  if (params.heads.size() > 1) acc = ad::scale(acc, 1.0 / static_cast<double>(params.heads.size()));
  return ad::add_row(acc, params.bias);
}

// Convenience overload on a T x 3N frame block.
inline ad::Var gat_forward(const Matrix& frames, const Adjacency& adj, const GatParams& params,
                           std::vector<Matrix>* attention_out = nullptr) {
  const auto n = adj.rows();
  if (frames.cols() != 3 * n) throw DimensionMismatch("gat_forward: frame width vs adjacency");
  return gat_forward(ad::constant(Eigen::Map<const Matrix>(frames.data(), frames.rows() * n, 3)), adj,
                     params, attention_out);
}

// (T*N) x j_dim -> T x (N*j_dim); frame row = joints 0..N-1 concatenated.
inline ad::Var flatten_pose(const ad::Var& joints, int num_joints) {
  if (joints.rows() % num_joints != 0) throw DimensionMismatch("flatten_pose: rows not a multiple of N");
  return ad::reshape(joints, joints.rows() / num_joints, num_joints * joints.cols());
}

inline ad::Var unflatten_pose(const ad::Var& flat, int num_joints) {
  if (flat.cols() % num_joints != 0) throw DimensionMismatch("unflatten_pose: width not a multiple of N");
  return ad::reshape(flat, flat.rows() * num_joints, flat.cols() / num_joints);
}

// Stand-in for the GAT when it is ablated: one linear map 3N -> D per frame.
struct LinearEmbeddingParams {
  ad::Var weight;  // 3N x D
  ad::Var bias;    // 1 x D

  static LinearEmbeddingParams create(ParameterStore& store, int num_joints, int model_dim) {
    return {store.create("embed.weight", 3 * num_joints, model_dim, Init::kXavier),
            store.create("embed.bias", 1, model_dim, Init::kZeros)};
  }
};

struct EmbeddedSequence {
  ad::Var embedded;    // T1 x D: graph embedding + spatial + temporal encodings
  ad::Var graph_flat;  // T1 x D: graph embedding + spatial encoding (no temporal)
};

// GAT -> + spatial encoding (per joint) -> flatten -> + temporal encoding.
inline EmbeddedSequence embed_sequence(const Matrix& canonical_frames, const Adjacency& adj,
                                       const GatParams& params, const EmbeddingConfig& cfg) {
  const auto t1 = static_cast<int>(canonical_frames.rows());
  if (adj.rows() != cfg.num_joints) throw DimensionMismatch("embed_sequence: adjacency vs joint count");
  if (params.j_dim() != cfg.j_dim) throw DimensionMismatch("embed_sequence: GAT width vs j_dim");
  ad::Var joints = gat_forward(canonical_frames, adj, params);
  const Matrix spatial = spatial_encoding(cfg.num_joints, cfg.j_dim).replicate(t1, 1);
  ad::Var positioned = ad::add_const(joints, spatial);
  ad::Var flat = flatten_pose(positioned, cfg.num_joints);
  return {ad::add_const(flat, temporal_encoding(t1, cfg.model_dim())), flat};
}

inline EmbeddedSequence embed_sequence_linear(const Matrix& canonical_frames,
                                              const LinearEmbeddingParams& params,
                                              const EmbeddingConfig& cfg) {
  const auto t1 = static_cast<int>(canonical_frames.rows());
  if (canonical_frames.cols() != 3 * cfg.num_joints) throw DimensionMismatch("embed_sequence: frame width");
  ad::Var flat = ad::linear(ad::constant(canonical_frames), params.weight, params.bias);
  const Matrix spatial = spatial_encoding(cfg.num_joints, cfg.j_dim);
  const Matrix spatial_row = Eigen::Map<const Matrix>(spatial.data(), 1, cfg.model_dim()).replicate(t1, 1);
  flat = ad::add_const(flat, spatial_row);
  return {ad::add_const(flat, temporal_encoding(t1, cfg.model_dim())), flat};
}

}  // namespace posetraj
