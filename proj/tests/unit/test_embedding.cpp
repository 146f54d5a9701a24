#include <gtest/gtest.h>

#include <algorithm>
#include <numbers>

#include "fixtures.hpp"
#include "oracles.hpp"

using namespace posetraj;
using fixtures::max_abs;

namespace {

std::vector<std::vector<int>> dense(const Adjacency& a) {
  std::vector<std::vector<int>> out(static_cast<std::size_t>(a.rows()));
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) out[static_cast<std::size_t>(i)].push_back(a(i, j));
  return out;
}

GatParams random_gat(std::uint64_t seed, int j_dim, int heads = 1) {
  ParameterStore store(seed);
  GatParams p = GatParams::create(store, j_dim, heads, 0.2);
  // a nonzero bias so that term is exercised too
  p.bias.mutable_value().setConstant(0.05);
  return p;
}

}  // namespace

TEST(Gat, ThreeNodeChainMatchesScalarOracle) {
  const Skeleton sk = skeletons::chain(3);
  const Adjacency adj = build_adjacency(sk);
  const GatParams p = random_gat(4, 32);
  std::mt19937_64 rng(8);
  const Matrix x = fixtures::random_frames(rng, 1, 3, 1.0);
  const Matrix got = gat_forward(x, adj, p).value();
  Matrix want = oracle::gat(Eigen::Map<const Matrix>(x.data(), 3, 3), dense(adj), p.heads[0].weight.value(),
                            p.heads[0].attn.value(), 0.2);
  want.rowwise() += p.bias.value().row(0);
  EXPECT_LT(max_abs(got - want), 1e-12);
}

TEST(Gat, MultiHeadAveragesHeads) {
  const Adjacency adj = build_adjacency(skeletons::h36m17());
  const GatParams p = random_gat(5, 8, 3);
  std::mt19937_64 rng(2);
  const Matrix x = fixtures::random_frames(rng, 2, 17, 1.0);
  const Matrix got = gat_forward(x, adj, p).value();
  for (int f = 0; f < 2; ++f) {
    const Matrix joints = Eigen::Map<const Matrix>(x.row(f).data(), 17, 3);
    Matrix want = Matrix::Zero(17, 8);
    for (const GatHead& h : p.heads) want += oracle::gat(joints, dense(adj), h.weight.value(), h.attn.value(), 0.2);
    want /= 3.0;
    want.rowwise() += p.bias.value().row(0);
    EXPECT_LT(max_abs(got.middleRows(17 * f, 17) - want), 1e-12);
  }
}

TEST(Gat, OutputDependsOnlyOnNeighbours) {
  const Skeleton sk = skeletons::h36m17();
  const Adjacency adj = build_adjacency(sk);
  const GatParams p = random_gat(6, 8);
  std::mt19937_64 rng(3);
  const Matrix x = fixtures::random_frames(rng, 1, 17, 1.0);
  const Matrix base = gat_forward(x, adj, p).value();
  for (int moved = 0; moved < 17; ++moved) {
    Matrix y = x;
    y(0, 3 * moved) += 0.7;
    const Matrix out = gat_forward(y, adj, p).value();
    for (int i = 0; i < 17; ++i) {
      if (adj(i, moved)) continue;
      EXPECT_EQ(out.row(i), base.row(i)) << "joint " << i << " saw joint " << moved;
    }
  }
}

TEST(Gat, GradientsMatchFiniteDifferences) {
  const Adjacency adj = build_adjacency(skeletons::h36m17());
  GatParams p = random_gat(7, 8, 2);
  std::mt19937_64 rng(4);
  const Matrix x = fixtures::random_frames(rng, 2, 17, 1.0);
  ad::Var joints(Eigen::Map<const Matrix>(x.data(), 34, 3), true);
  Matrix c(34, 8);
  for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] = std::sin(0.37 * static_cast<double>(i));
  auto loss = [&] { return ad::weighted_sum(gat_forward(joints, adj, p), c); };
  const double err = fixtures::gradcheck({p.heads[0].weight, p.heads[0].attn, p.heads[1].weight, p.heads[1].attn,
                                          p.bias, joints},
                                         loss);
  EXPECT_LT(err, 1e-4);
}

TEST(Encoding, SinusoidValues) {
  const Matrix t = sinusoid_table(3, 4, 2);
  EXPECT_DOUBLE_EQ(t(0, 0), std::sin(2.0));
  EXPECT_DOUBLE_EQ(t(0, 1), std::cos(2.0));
  EXPECT_DOUBLE_EQ(t(1, 2), std::sin(3.0 / 100.0));
  EXPECT_DOUBLE_EQ(t(2, 3), std::cos(4.0 / 100.0));
  EXPECT_THROW(sinusoid_table(3, 5), InvalidArgument);
  EXPECT_EQ(temporal_encoding(4, 8, 5).row(0), temporal_encoding(10, 8).row(5));
}

TEST(Encoding, DistinctRowsUpToTenThousand) {
  const Matrix t = spatial_encoding(10000, 32);
  std::vector<std::vector<double>> rows;
  rows.reserve(10000);
  for (Eigen::Index r = 0; r < t.rows(); ++r) rows.emplace_back(t.row(r).data(), t.row(r).data() + t.cols());
  std::sort(rows.begin(), rows.end());
  EXPECT_EQ(std::adjacent_find(rows.begin(), rows.end()), rows.end());
}

TEST(Encoding, ModelDimensionFacts) {
  EXPECT_EQ((EmbeddingConfig{17, 32}.model_dim()), 544);
  EXPECT_EQ((EmbeddingConfig{31, 32}.model_dim()), 992);
  EXPECT_EQ((EmbeddingConfig{30, 32}.model_dim()), 960);
}

TEST(Embedding, FlattenRoundTrip) {
  std::mt19937_64 rng(5);
  const ad::Var joints(fixtures::random_frames(rng, 12, 2, 1.0));  // 12 x 6 -> reuse as (T*N) x J
  const ad::Var flat = flatten_pose(joints, 4);
  EXPECT_EQ(flat.rows(), 3);
  EXPECT_EQ(flat.cols(), 24);
  EXPECT_EQ(flat.value()(1, 6), joints.value()(5, 0));
  EXPECT_EQ(unflatten_pose(flat, 4).value(), joints.value());
}

TEST(Embedding, SequenceAddsSpatialAndTemporalEncodings) {
  const Skeleton sk = skeletons::chain(3);
  const Adjacency adj = build_adjacency(sk);
  const GatParams p = random_gat(9, 4);
  std::mt19937_64 rng(6);
  const Matrix x = fixtures::random_frames(rng, 5, 3, 1.0);
  const EmbeddedSequence e = embed_sequence(x, adj, p, {3, 4});
  const Matrix g = gat_forward(x, adj, p).value();
  const Matrix sp = spatial_encoding(3, 4);
  const Matrix tp = temporal_encoding(5, 12);
  for (int f = 0; f < 5; ++f)
    for (int j = 0; j < 3; ++j)
      for (int c = 0; c < 4; ++c) {
        const double graph = g(3 * f + j, c) + sp(j, c);
        EXPECT_DOUBLE_EQ(e.graph_flat.value()(f, 4 * j + c), graph);
        EXPECT_DOUBLE_EQ(e.embedded.value()(f, 4 * j + c), graph + tp(f, 4 * j + c));
      }
}
