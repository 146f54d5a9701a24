#include <gtest/gtest.h>

#include <cstring>
#include <numbers>
#include <sstream>

#include "fixtures.hpp"

using namespace posetraj;

namespace {

MotionSequence parse(const std::string& text) {
  std::istringstream is(text);
  return read_sequence(is);
}

std::string header_for_chain(const std::string& extra = "") {
  return "format_version=1\njoints=a,b\nedges=0-1\nroot=0\nfps=10\nunits=m\n" + extra + "---\n";
}

double bone(const Matrix& f, Eigen::Index t, const Edge& e) {
  return (f.block<1, 3>(t, 3 * e.a) - f.block<1, 3>(t, 3 * e.b)).norm();
}

double path_length(const MotionSequence& s) {
  double total = 0.0;
  for (int t = 1; t < s.num_frames(); ++t) total += (s.root(t) - s.root(t - 1)).norm();
  return total;
}

}  // namespace

TEST(SequenceFile, RoundTripIsBitwise) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> wide(-1e3, 1e3);
  Matrix f = fixtures::random_frames(rng, 13, 17, 20.0);
  f(0, 0) = wide(rng) * 1e-17;
  f(1, 1) = 1.0 / 3.0;
  f(2, 2) = -0.0;
  const MotionSequence seq(fixtures::h36m(), f, 10.0);
  std::stringstream ss;
  write_sequence(ss, seq, {"h36m", "round trip"});
  SequenceFileInfo info;
  const MotionSequence back = read_sequence(ss, &info);
  EXPECT_EQ(std::memcmp(back.frames().data(), f.data(), sizeof(double) * static_cast<std::size_t>(f.size())), 0);
  EXPECT_EQ(back.skeleton(), seq.skeleton());
  EXPECT_EQ(back.fps(), 10.0);
  EXPECT_EQ(info.preset, "h36m");
  EXPECT_EQ(info.name, "round trip");
}

TEST(SequenceFile, DistinctErrors) {
  EXPECT_THROW(parse(header_for_chain() + "1 2 3 4 5\n"), RowLengthError);
  EXPECT_THROW(parse(header_for_chain() + "1 2 3 4 5 nan\n"), NonFiniteValue);
  EXPECT_THROW(parse(header_for_chain() + "1 2 3 4 5 inf\n"), NonFiniteValue);
  EXPECT_THROW(parse("format_version=1\njoints=a,b\nedges=0-1\nroot=0\nfps=10\nunits=mm\n---\n1 2 3 4 5 6\n"),
               UnsupportedUnits);
  EXPECT_THROW(parse(header_for_chain("colour=red\n") + "1 2 3 4 5 6\n"), MalformedHeader);
  EXPECT_THROW(parse(header_for_chain("fps=12\n") + "1 2 3 4 5 6\n"), MalformedHeader);
  EXPECT_THROW(parse(header_for_chain("preset=darko\n") + "1 2 3 4 5 6\n"), MalformedHeader);
  EXPECT_THROW(parse(header_for_chain("frames=2\n") + "1 2 3 4 5 6\n"), MalformedHeader);
  EXPECT_THROW(parse("format_version=1\njoints=a,b\nroot=0\nfps=10\nunits=m\n---\n1 2 3 4 5 6\n"), MalformedHeader);
  EXPECT_THROW(parse("format_version=1\njoints=a,b,c\nedges=0-1\nroot=0\nfps=10\nunits=m\n---\n"), MalformedHeader);
  EXPECT_THROW(parse(header_for_chain()), FormatError);
  EXPECT_NO_THROW(parse(header_for_chain("preset=h36m\n") + "1 2 3 4 5 6\n"));
}

TEST(SequenceFile, SeventeenJointRowOfFiftyNumbers) {
  std::stringstream ss;
  write_sequence(ss, fixtures::synthetic(SyntheticMode::kStraight, 2).slice(0, 1));
  std::string text = ss.str();
  text = text.substr(0, text.rfind(' '));  // drop the last number
  EXPECT_THROW(parse(text + "\n"), RowLengthError);
}

TEST(Synthetic, StraightAdvancesSpeedOverFps) {
  SyntheticSpec sp;
  sp.speed = 1.0;
  sp.fps = 10.0;
  sp.seed = 3;
  const MotionSequence s = generate_synthetic(sp, fixtures::h36m());
  const Vec3 step = s.root(1) - s.root(0);
  EXPECT_NEAR(std::hypot(step.x(), step.y()), 0.1, 1e-12);
  for (int t = 2; t < s.num_frames(); ++t) {
    const Vec3 d = s.root(t) - s.root(t - 1);
    EXPECT_NEAR(std::hypot(d.x(), d.y()), 0.1, 1e-12);
    // same heading every frame
    EXPECT_NEAR(d.x() * step.y() - d.y() * step.x(), 0.0, 1e-12);
  }
}

TEST(Synthetic, BoneLengthsAreConstant) {
  for (SyntheticMode mode : {SyntheticMode::kStraight, SyntheticMode::kWavy, SyntheticMode::kDeviating,
                             SyntheticMode::kRun}) {
    const MotionSequence s = fixtures::synthetic(mode, 4, 1.3, 5.0);
    for (const Edge& e : s.skeleton().edges()) {
      const double l0 = bone(s.frames(), 0, e);
      for (int t = 1; t < s.num_frames(); ++t) EXPECT_NEAR(bone(s.frames(), t, e), l0, 1e-9);
    }
  }
}

TEST(Synthetic, WavyLateralOffsetHasZeroMean) {
  SyntheticSpec sp;
  sp.mode = SyntheticMode::kWavy;
  sp.speed = 1.0;
  sp.heading = 0.4;
  sp.start = Vec3::Zero();
  sp.duration = 6.0;  // three 2 m wavelengths at 1 m/s
  const MotionSequence s = generate_synthetic(sp, fixtures::h36m());
  const Vec3 lateral(-std::sin(0.4), std::cos(0.4), 0.0);
  double sum = 0.0;
  const int frames = 60;  // full periods only
  for (int t = 0; t < frames; ++t) sum += s.root(t).dot(lateral);
  EXPECT_NEAR(sum / frames, 0.0, 1e-3);
}

TEST(Synthetic, DeterministicAndValidated) {
  EXPECT_EQ(fixtures::synthetic(SyntheticMode::kDeviating, 9).frames(),
            fixtures::synthetic(SyntheticMode::kDeviating, 9).frames());
  EXPECT_NE(fixtures::synthetic(SyntheticMode::kDeviating, 9).frames(),
            fixtures::synthetic(SyntheticMode::kDeviating, 10).frames());
  SyntheticSpec sp;
  sp.speed = 2.0;
  EXPECT_THROW(sp.validate(), InvalidArgument);
  sp = {};
  sp.duration = 0.1;
  EXPECT_THROW(sp.validate(25), InvalidArgument);
  EXPECT_THROW(generate_synthetic({}, fixtures::chain(3)), SkeletonMismatch);
  EXPECT_EQ(parse_synthetic_mode("run"), SyntheticMode::kRun);
  EXPECT_THROW(parse_synthetic_mode("jog"), InvalidArgument);
}

TEST(RandomRigid, ZeroRangesAreIdentity) {
  const MotionSequence s = fixtures::synthetic(SyntheticMode::kWavy, 5);
  EXPECT_EQ(apply_random_rigid(s, 0.0, 0.0, 7).sequence.frames(), s.frames());
}

TEST(RandomRigid, IsometryPreservesLengths) {
  const MotionSequence s = fixtures::synthetic(SyntheticMode::kDeviating, 6, 1.0, 5.0);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const RigidPerturbation p = apply_random_rigid(s, 10.0, std::numbers::pi, seed);
    EXPECT_LE(std::abs(p.transform.yaw), std::numbers::pi);
    EXPECT_LE(p.transform.translation.head<2>().cwiseAbs().maxCoeff(), 10.0);
    EXPECT_EQ(p.transform.translation.z(), 0.0);
    EXPECT_NEAR(path_length(p.sequence), path_length(s), 1e-9);
    for (const Edge& e : s.skeleton().edges())
      for (int t = 0; t < s.num_frames(); t += 7) EXPECT_NEAR(bone(p.sequence.frames(), t, e), bone(s.frames(), t, e), 1e-12);
  }
}

TEST(RandomRigid, CommutesWithSlicing) {
  const MotionSequence s = fixtures::synthetic(SyntheticMode::kStraight, 8, 1.0, 4.0);
  const RigidTransform g = random_rigid(10.0, std::numbers::pi, 3);
  const auto moved = sliding_windows(g.apply(s), {5, 10}, 4);
  const auto plain = sliding_windows(s, {5, 10}, 4);
  ASSERT_EQ(moved.size(), plain.size());
  for (std::size_t i = 0; i < plain.size(); ++i) {
    EXPECT_EQ(moved[i].input.frames(), g.apply(plain[i].input).frames());
    EXPECT_EQ(moved[i].target.frames(), g.apply(plain[i].target).frames());
  }
}

TEST(Convert, H36mExportSubsetScaleAndRate) {
  std::ostringstream raw;
  raw << "# exported positions\n";
  for (int f = 0; f < 10; ++f) {
    for (int j = 0; j < 32; ++j) raw << (j ? "," : "") << 1000.0 * j << "," << 10.0 * f << "," << -5.0 * j;
    raw << "\n";
  }
  std::istringstream is(raw.str());
  ConvertOptions opt;
  opt.layout = RawLayout::kH36m32;
  opt.up_axis = 'y';
  const MotionSequence s = convert_raw(is, opt);
  EXPECT_EQ(s.num_frames(), 2);  // 50 Hz -> 10 Hz keeps frames 0 and 5
  EXPECT_EQ(s.fps(), 10.0);
  for (int j = 0; j < 17; ++j) {
    const int src = kH36mSubset[static_cast<std::size_t>(j)];
    // y-up (x, y, z) -> z-up (x, -z, y), mm -> m
    EXPECT_DOUBLE_EQ(s.joint(1, j).x(), 1.0 * src);
    EXPECT_DOUBLE_EQ(s.joint(1, j).y(), 0.005 * src);
    EXPECT_DOUBLE_EQ(s.joint(1, j).z(), 0.05);
  }
}

TEST(Convert, RejectsBadInput) {
  ConvertOptions opt;
  opt.layout = RawLayout::kH36m17;
  std::istringstream short_row("1,2,3\n");
  EXPECT_THROW(convert_raw(short_row, opt), RowLengthError);
  opt.source_fps = 25.0;
  opt.target_fps = 10.0;
  std::istringstream any("1,2,3\n");
  EXPECT_THROW(convert_raw(any, opt), InvalidArgument);
  EXPECT_THROW(parse_raw_layout("kinect"), InvalidArgument);
  EXPECT_THROW(unit_scale("furlong"), InvalidArgument);
}

TEST(Presets, HorizonsAndRates) {
  EXPECT_EQ(find_preset("h36m").fps, 10.0);
  EXPECT_EQ(find_preset("h36m").input_len, 5);
  EXPECT_EQ(find_preset("h36m").output_len, 20);
  EXPECT_EQ(find_preset("h36m").max_epochs, 20);
  EXPECT_EQ(find_preset("cmu").fps, 10.0);
  EXPECT_EQ(find_preset("cmu").input_len, 5);
  EXPECT_EQ(find_preset("cmu").output_len, 10);
  EXPECT_EQ(find_preset("cmu").max_epochs, 50);
  EXPECT_EQ(find_preset("darko").fps, 16.0);
  EXPECT_EQ(find_preset("darko").input_len, 15);
  EXPECT_EQ(find_preset("darko").output_len, 30);
  EXPECT_EQ(find_preset("darko").max_epochs, 125);
  EXPECT_THROW(find_preset("kitti"), InvalidArgument);
}
