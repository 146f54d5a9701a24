#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include "posetraj/error.hpp"
#include "posetraj/skeleton.hpp"
#include "posetraj/types.hpp"

namespace posetraj {

// Root displacement below this (meters) counts as standing still.
inline constexpr double kStationaryEpsilon = 1e-6;

// Maps a sequence into the frame where the root of the last observed pose sits
// at the origin and the observed heading points along +x.
struct TransformParams {
  Vec3 v = Vec3::Zero();  // translation, meters
  double theta = 0.0;     // yaw of observed motion, radians in (-pi, pi]
  int delta = 1;          // frames between the two root samples defining heading

  static TransformParams identity() { return {}; }
};

inline double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * std::numbers::pi);
  if (a <= -std::numbers::pi) a += 2.0 * std::numbers::pi;
  return a;
}

// Frames are T x 3N rows; `root` indexes the joint, `delta` the heading interval.
inline TransformParams compute_params(const Matrix& input_frames, int root, int delta) {
  const auto t1 = static_cast<int>(input_frames.rows());
  if (delta < 1) throw InvalidArgument("delta must be >= 1");
  if (t1 < delta + 1) {
    throw SequenceTooShort("heading estimation with delta=" + std::to_string(delta) +
                           " needs " + std::to_string(delta + 1) + " frames, got " +
                           std::to_string(t1));
  }
  if (root < 0 || 3 * root + 2 >= input_frames.cols()) throw InvalidArgument("root index out of range");
  const Vec3 last = input_frames.block<1, 3>(t1 - 1, 3 * root).transpose();
  const Vec3 prev = input_frames.block<1, 3>(t1 - 1 - delta, 3 * root).transpose();
  TransformParams p;
  p.v = -last;
  p.delta = delta;
  const double dx = last.x() - prev.x();
  const double dy = last.y() - prev.y();
  p.theta = std::hypot(dx, dy) < kStationaryEpsilon ? 0.0 : wrap_angle(std::atan2(dy, dx));
  return p;
}

inline TransformParams compute_params(const MotionSequence& s_in, int root, int delta) {
  return compute_params(s_in.frames(), root, delta);
}

inline TransformParams compute_params(const MotionSequence& s_in, int delta = 1) {
  return compute_params(s_in.frames(), s_in.skeleton().root_index(), delta);
}

// Translate by v, then rotate by R_z(-theta).
inline Matrix canonicalize(const Matrix& frames, const TransformParams& p) {
  const double c = std::cos(p.theta);
  const double s = std::sin(p.theta);
  Matrix out(frames.rows(), frames.cols());
  for (Eigen::Index t = 0; t < frames.rows(); ++t) {
    for (Eigen::Index k = 0; k + 2 < frames.cols(); k += 3) {
      const double x = frames(t, k) + p.v.x();
      const double y = frames(t, k + 1) + p.v.y();
      out(t, k) = c * x + s * y;
      out(t, k + 1) = -s * x + c * y;
      out(t, k + 2) = frames(t, k + 2) + p.v.z();
    }
  }
  return out;
}

// Rotate by R_z(+theta), then translate by -v.
inline Matrix decanonicalize(const Matrix& frames, const TransformParams& p) {
  const double c = std::cos(p.theta);
  const double s = std::sin(p.theta);
  Matrix out(frames.rows(), frames.cols());
  for (Eigen::Index t = 0; t < frames.rows(); ++t) {
    for (Eigen::Index k = 0; k + 2 < frames.cols(); k += 3) {
      const double x = frames(t, k);
      const double y = frames(t, k + 1);
      out(t, k) = c * x - s * y - p.v.x();
      out(t, k + 1) = s * x + c * y - p.v.y();
      out(t, k + 2) = frames(t, k + 2) - p.v.z();
    }
  }
  return out;
}

inline MotionSequence canonicalize(const MotionSequence& seq, const TransformParams& p) {
  return seq.with_frames(canonicalize(seq.frames(), p));
}

inline MotionSequence decanonicalize(const MotionSequence& seq, const TransformParams& p) {
  return seq.with_frames(decanonicalize(seq.frames(), p));
}

// Yaw about the world z axis followed by a translation.
struct RigidTransform {
  double yaw = 0.0;
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& x) const {
    const double c = std::cos(yaw);
    const double s = std::sin(yaw);
    return Vec3(c * x.x() - s * x.y(), s * x.x() + c * x.y(), x.z()) + translation;
  }

  Matrix apply(const Matrix& frames) const {
    Matrix out(frames.rows(), frames.cols());
    for (Eigen::Index t = 0; t < frames.rows(); ++t) {
      for (Eigen::Index k = 0; k + 2 < frames.cols(); k += 3) {
        out.block<1, 3>(t, k) = apply(Vec3(frames.block<1, 3>(t, k).transpose())).transpose();
      }
    }
    return out;
  }

  MotionSequence apply(const MotionSequence& seq) const { return seq.with_frames(apply(seq.frames())); }
};

}  // namespace posetraj
