#include <gtest/gtest.h>

#include "fixtures.hpp"

using namespace posetraj;
using fixtures::gradcheck;

namespace {

ad::Var param(std::mt19937_64& rng, int r, int c, double range = 1.0) {
  std::uniform_real_distribution<double> u(-range, range);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return ad::Var(std::move(m), true);
}

Matrix weights_like(std::mt19937_64& rng, const ad::Var& v) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix m(v.rows(), v.cols());
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

}  // namespace

TEST(Autodiff, ElementaryOpsMatchFiniteDifferences) {
  std::mt19937_64 rng(1);
  ad::Var a = param(rng, 3, 4), b = param(rng, 4, 2), row = param(rng, 1, 2);
  const Matrix c = weights_like(rng, ad::Var(Matrix::Zero(3, 2)));
  auto loss = [&] { return ad::weighted_sum(ad::relu(ad::add_row(ad::matmul(a, b), row)), c); };
  EXPECT_LT(gradcheck({a, b, row}, loss), 1e-6);
}

TEST(Autodiff, LayerNormMatchesFiniteDifferences) {
  std::mt19937_64 rng(2);
  ad::Var x = param(rng, 3, 6), g = param(rng, 1, 6), b = param(rng, 1, 6);
  const Matrix c = weights_like(rng, x);
  auto loss = [&] { return ad::weighted_sum(ad::layer_norm(x, g, b), c); };
  EXPECT_LT(gradcheck({x, g, b}, loss), 1e-6);
}

TEST(Autodiff, ShapeOpsMatchFiniteDifferences) {
  std::mt19937_64 rng(3);
  ad::Var x = param(rng, 4, 6), y = param(rng, 2, 6);
  const Matrix c = weights_like(rng, ad::Var(Matrix::Zero(5, 12)));
  auto loss = [&] {
    const ad::Var joined = ad::concat_rows({ad::rows(x, 1, 3), y, ad::repeat_row(x, 0, 5)});  // 10 x 6
    return ad::weighted_sum(ad::reshape(joined, 5, 12), c);
  };
  EXPECT_LT(gradcheck({x, y}, loss), 1e-6);
}

TEST(Autodiff, MeanRowDistance) {
  ad::Var p(Matrix::Zero(1, 3), true);
  Matrix gt(1, 3);
  gt << 3.0, 4.0, 0.0;
  EXPECT_DOUBLE_EQ(ad::mean_row_distance(p, gt).item(), 5.0);
  std::mt19937_64 rng(4);
  ad::Var q = param(rng, 4, 6);
  const Matrix target = weights_like(rng, q);
  EXPECT_LT(gradcheck({q}, [&] { return ad::mean_row_distance(q, target); }), 1e-6);
}

TEST(Autodiff, AttentionWithRelativeTablesMatchesFiniteDifferences) {
  std::mt19937_64 rng(5);
  ad::Var q = param(rng, 4, 6), k = param(rng, 4, 6), v = param(rng, 4, 6);
  ad::Var rk = param(rng, 5, 3), rv = param(rng, 5, 3);
  const Matrix c = weights_like(rng, q);
  ad::AttentionOptions opt;
  opt.heads = 2;
  opt.causal = true;
  opt.rel_clip = 2;
  auto loss = [&] { return ad::weighted_sum(ad::attention(q, k, v, opt, &rk, &rv), c); };
  EXPECT_LT(gradcheck({q, k, v, rk, rv}, loss), 1e-6);
  opt.causal = false;
  EXPECT_LT(gradcheck({q, k, v, rk, rv}, loss), 1e-6);
}

TEST(Autodiff, CrossAttentionShapes) {
  std::mt19937_64 rng(6);
  ad::Var q = param(rng, 2, 4), k = param(rng, 5, 4), v = param(rng, 5, 4);
  ad::AttentionOptions opt;
  opt.heads = 2;
  const Matrix c = weights_like(rng, q);
  EXPECT_LT(gradcheck({q, k, v}, [&] { return ad::weighted_sum(ad::attention(q, k, v, opt), c); }), 1e-6);
  opt.causal = true;
  EXPECT_THROW(ad::attention(q, k, v, opt), DimensionMismatch);
}

TEST(Autodiff, GraphAttentionMatchesFiniteDifferences) {
  std::mt19937_64 rng(7);
  const Adjacency adj = build_adjacency(skeletons::chain(4));
  ad::Var h = param(rng, 8, 5), a = param(rng, 1, 10);
  const Matrix c = weights_like(rng, h);
  EXPECT_LT(gradcheck({h, a}, [&] { return ad::weighted_sum(ad::graph_attention(h, a, adj, 0.2), c); }), 1e-6);
}

TEST(Autodiff, NoGradGuardSkipsRecording) {
  ad::Var w(Matrix::Ones(2, 2), true);
  {
    ad::NoGradGuard guard;
    const ad::Var y = ad::matmul(w, w);
    EXPECT_FALSE(y.requires_grad());
  }
  EXPECT_TRUE(ad::matmul(w, w).requires_grad());
}

TEST(Autodiff, GradientsAccumulateAcrossBackwardCalls) {
  ad::Var w(Matrix::Constant(1, 1, 2.0), true);
  ad::backward(ad::sum(ad::scale(w, 3.0)));
  ad::backward(ad::sum(ad::scale(w, 3.0)));
  EXPECT_DOUBLE_EQ(w.grad()(0, 0), 6.0);
  w.zero_grad();
  EXPECT_DOUBLE_EQ(w.grad()(0, 0), 0.0);
}
