#include <gtest/gtest.h>

#include "fixtures.hpp"

using namespace posetraj;

namespace {

// Degrees counted straight from the documented H3.6M edge list.
std::vector<int> listed_degrees() {
  const int edges[][2] = {{0, 1}, {1, 2}, {2, 3}, {0, 4}, {4, 5}, {5, 6}, {0, 7}, {7, 8},
                          {8, 9}, {9, 10}, {8, 11}, {11, 12}, {12, 13}, {8, 14}, {14, 15}, {15, 16}};
  std::vector<int> deg(17, 0);
  for (const auto& e : edges) {
    ++deg[static_cast<std::size_t>(e[0])];
    ++deg[static_cast<std::size_t>(e[1])];
  }
  return deg;
}

}  // namespace

TEST(Skeleton, H36mAdjacencyRowSumsAreDegreePlusOne) {
  const Skeleton sk = skeletons::h36m17();
  const Adjacency a = build_adjacency(sk);
  const auto deg = listed_degrees();
  ASSERT_EQ(a.rows(), 17);
  for (int j = 0; j < 17; ++j) {
    EXPECT_EQ(a.row(j).sum(), deg[static_cast<std::size_t>(j)] + 1) << sk.joint_names()[static_cast<std::size_t>(j)];
    EXPECT_EQ(sk.degree(j), deg[static_cast<std::size_t>(j)]);
  }
  EXPECT_TRUE(a == a.transpose());
}

TEST(Skeleton, RejectsBadGraphs) {
  EXPECT_THROW(Skeleton({"a", "b"}, {{0, 0}}, 0), InvalidSkeleton);
  EXPECT_THROW(Skeleton({"a", "b"}, {{0, 2}}, 0), InvalidSkeleton);
  EXPECT_THROW(Skeleton({"a", "b", "c"}, {{0, 1}}, 0), InvalidSkeleton);  // disconnected
  EXPECT_THROW(Skeleton({"a", "b"}, {{0, 1}, {1, 0}}, 0), InvalidSkeleton);
  EXPECT_THROW(Skeleton({"a", "b"}, {{0, 1}}, 5), InvalidSkeleton);
}

TEST(Skeleton, FactoriesAreConsistent) {
  EXPECT_EQ(skeletons::cmu31().num_joints(), 31);
  EXPECT_EQ(skeletons::cmu31().edges().size(), 30u);
  EXPECT_EQ(skeletons::chain(3).edges().size(), 2u);
  EXPECT_EQ(skeletons::h36m17().joint_index("thorax"), 8);
}

TEST(MotionSequence, ValidatesShapeAndValues) {
  auto sk = fixtures::chain(3);
  EXPECT_THROW(MotionSequence(sk, Matrix::Zero(4, 8), 10.0), DimensionMismatch);
  EXPECT_THROW(MotionSequence(sk, Matrix::Zero(4, 9), 0.0), InvalidArgument);
  Matrix bad = Matrix::Zero(4, 9);
  bad(1, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(MotionSequence(sk, bad, 10.0), NonFiniteValue);
}

TEST(MotionSequence, SplitAndSlidingWindows) {
  std::mt19937_64 rng(3);
  MotionSequence seq(fixtures::chain(3), fixtures::random_frames(rng, 12, 3, 1.0), 10.0);
  const Window w = split_sequence(seq, {5, 4});
  EXPECT_EQ(w.input.num_frames(), 5);
  EXPECT_EQ(w.target.num_frames(), 4);
  EXPECT_EQ(w.target.frames().row(0), seq.frames().row(5));
  EXPECT_EQ(sliding_windows(seq, {5, 4}, 1).size(), 4u);
  EXPECT_EQ(sliding_windows(seq, {5, 4}, 2).size(), 2u);
  EXPECT_THROW(split_sequence(seq, {10, 5}), SequenceTooShort);
  EXPECT_THROW(HorizonSpec({1, 4}).validate(), InvalidArgument);
  const MotionSequence joined = concatenate(w.input, w.target);
  EXPECT_EQ(joined.frames(), seq.slice(0, 9).frames());
}
