#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "posetraj/error.hpp"
#include "posetraj/types.hpp"

namespace posetraj {

struct Edge {
  int a = 0;
  int b = 0;
  friend bool operator==(const Edge&, const Edge&) = default;
};

// Kinematic chain: joint names, bones, and the root joint whose path is the
// trajectory. Validated on construction; immutable afterwards.
class Skeleton {
 public:
  Skeleton(std::vector<std::string> joint_names, std::vector<Edge> edges, int root_index)
      : names_(std::move(joint_names)), edges_(std::move(edges)), root_(root_index) {
    validate();
  }

  int num_joints() const { return static_cast<int>(names_.size()); }
  const std::vector<std::string>& joint_names() const { return names_; }
  const std::vector<Edge>& edges() const { return edges_; }
  int root_index() const { return root_; }

  int joint_index(const std::string& name) const {
    const auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) throw InvalidArgument("unknown joint '" + name + "'");
    return static_cast<int>(it - names_.begin());
  }

  int degree(int joint) const {
    int d = 0;
    for (const Edge& e : edges_) d += (e.a == joint) + (e.b == joint);
    return d;
  }

  friend bool operator==(const Skeleton&, const Skeleton&) = default;

 private:
  void validate() const {
    const int n = num_joints();
    if (n <= 0) throw InvalidSkeleton("skeleton needs at least one joint");
    if (root_ < 0 || root_ >= n) {
      throw InvalidSkeleton("root index " + std::to_string(root_) + " out of range");
    }
    std::set<std::pair<int, int>> seen;
    for (const Edge& e : edges_) {
      if (e.a < 0 || e.a >= n || e.b < 0 || e.b >= n) {
        throw InvalidSkeleton("edge (" + std::to_string(e.a) + ", " + std::to_string(e.b) +
                              ") has an endpoint out of range");
      }
      if (e.a == e.b) throw InvalidSkeleton("self-edge at joint " + std::to_string(e.a));
      if (!seen.emplace(std::min(e.a, e.b), std::max(e.a, e.b)).second) {
        throw InvalidSkeleton("duplicate edge (" + std::to_string(e.a) + ", " +
                              std::to_string(e.b) + ")");
      }
    }
    // one body: every joint reachable from the root
    std::vector<std::vector<int>> nbrs(n);
    for (const Edge& e : edges_) {
      nbrs[e.a].push_back(e.b);
      nbrs[e.b].push_back(e.a);
    }
    std::vector<bool> visited(n, false);
    std::vector<int> stack{root_};
    visited[root_] = true;
    int reached = 1;
    while (!stack.empty()) {
      const int j = stack.back();
      stack.pop_back();
      for (int k : nbrs[j]) {
        if (!visited[k]) {
          visited[k] = true;
          ++reached;
          stack.push_back(k);
        }
      }
    }
    if (reached != n) throw InvalidSkeleton("skeleton edges do not connect all joints");
  }

  std::vector<std::string> names_;
  std::vector<Edge> edges_;
  int root_;
};

using SkeletonPtr = std::shared_ptr<const Skeleton>;

namespace skeletons {

// 17-joint Human3.6M layout (z-up after conversion). Joint order:
//  0 hip  1 rhip  2 rknee  3 rfoot  4 lhip  5 lknee  6 lfoot  7 spine
//  8 thorax  9 neck  10 head  11 lshoulder  12 lelbow  13 lwrist
//  14 rshoulder  15 relbow  16 rwrist
inline Skeleton h36m17() {
  return Skeleton({"hip", "rhip", "rknee", "rfoot", "lhip", "lknee", "lfoot", "spine", "thorax",
                   "neck", "head", "lshoulder", "lelbow", "lwrist", "rshoulder", "relbow",
                   "rwrist"},
                  {{0, 1},
                   {1, 2},
                   {2, 3},
                   {0, 4},
                   {4, 5},
                   {5, 6},
                   {0, 7},
                   {7, 8},
                   {8, 9},
                   {9, 10},
                   {8, 11},
                   {11, 12},
                   {12, 13},
                   {8, 14},
                   {14, 15},
                   {15, 16}},
                  0);
}

// 31-joint CMU mocap (ASF hierarchy order).
inline Skeleton cmu31() {
  std::vector<std::string> names{
      "root",      "lhipjoint", "lfemur",    "ltibia",    "lfoot",    "ltoes",    "rhipjoint",
      "rfemur",    "rtibia",    "rfoot",     "rtoes",     "lowerback", "upperback", "thorax",
      "lowerneck", "upperneck", "head",      "lclavicle", "lhumerus", "lradius",  "lwrist",
      "lhand",     "lfingers",  "lthumb",    "rclavicle", "rhumerus", "rradius",  "rwrist",
      "rhand",     "rfingers",  "rthumb"};
  const int parent[31] = {-1, 0,  1,  2,  3,  4,  0,  6,  7,  8,  9,  0,  11, 12, 13, 14,
                          15, 13, 17, 18, 19, 20, 21, 20, 13, 24, 25, 26, 27, 28, 27};
  std::vector<Edge> edges;
  for (int j = 1; j < 31; ++j) edges.push_back({parent[j], j});
  return Skeleton(std::move(names), std::move(edges), 0);
}

// Simple open chain 0-1-...-(n-1), rooted at 0. Used for small test graphs.
inline Skeleton chain(int n) {
  std::vector<std::string> names;
  std::vector<Edge> edges;
  for (int j = 0; j < n; ++j) {
    names.push_back("j" + std::to_string(j));
    if (j > 0) edges.push_back({j - 1, j});
  }
  return Skeleton(std::move(names), std::move(edges), 0);
}

}  // namespace skeletons

// One frame: N joints x (x, y, z) in meters.
class Pose {
 public:
  using Coords = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

  explicit Pose(Coords coords) : coords_(std::move(coords)) {
    if (!coords_.allFinite()) throw NonFiniteValue("pose has non-finite coordinates");
  }

  int num_joints() const { return static_cast<int>(coords_.rows()); }
  Vec3 joint(int j) const { return coords_.row(j).transpose(); }
  const Coords& coords() const { return coords_; }

 private:
  Coords coords_;
};

// Ordered frames of global joint positions. Stored as a T x 3N matrix whose
// row t is (x0 y0 z0 x1 y1 z1 ...) for frame t.
class MotionSequence {
 public:
  MotionSequence(SkeletonPtr skeleton, Matrix frames, double fps)
      : skeleton_(std::move(skeleton)), frames_(std::move(frames)), fps_(fps) {
    if (!skeleton_) throw InvalidArgument("motion sequence needs a skeleton");
    if (frames_.rows() == 0) throw InvalidArgument("motion sequence has no frames");
    if (frames_.cols() != 3 * skeleton_->num_joints()) {
      throw DimensionMismatch("frame width " + std::to_string(frames_.cols()) + " != 3 x " +
                              std::to_string(skeleton_->num_joints()) + " joints");
    }
    if (!(fps_ > 0.0) || !std::isfinite(fps_)) throw InvalidArgument("fps must be positive");
    if (!frames_.allFinite()) throw NonFiniteValue("motion sequence has non-finite coordinates");
  }

  MotionSequence(SkeletonPtr skeleton, const std::vector<Pose>& poses, double fps)
      : MotionSequence(skeleton, stack(skeleton, poses), fps) {}

  const Skeleton& skeleton() const { return *skeleton_; }
  const SkeletonPtr& skeleton_ptr() const { return skeleton_; }
  int num_frames() const { return static_cast<int>(frames_.rows()); }
  int num_joints() const { return skeleton_->num_joints(); }
  double fps() const { return fps_; }
  const Matrix& frames() const { return frames_; }

  Vec3 joint(int frame, int j) const { return frames_.block<1, 3>(frame, 3 * j).transpose(); }
  Vec3 root(int frame) const { return joint(frame, skeleton_->root_index()); }

  Pose pose(int frame) const {
    Pose::Coords c(num_joints(), 3);
    for (int j = 0; j < num_joints(); ++j) c.row(j) = frames_.block<1, 3>(frame, 3 * j);
    return Pose(std::move(c));
  }

  MotionSequence slice(int start, int count) const {
    if (start < 0 || count <= 0 || start + count > num_frames()) {
      throw SequenceTooShort("slice [" + std::to_string(start) + ", " +
                             std::to_string(start + count) + ") exceeds " +
                             std::to_string(num_frames()) + " frames");
    }
    return MotionSequence(skeleton_, frames_.middleRows(start, count), fps_);
  }

  MotionSequence with_frames(Matrix frames) const {
    return MotionSequence(skeleton_, std::move(frames), fps_);
  }

 private:
  static Matrix stack(const SkeletonPtr& skeleton, const std::vector<Pose>& poses) {
    if (!skeleton) throw InvalidArgument("motion sequence needs a skeleton");
    const int n = skeleton->num_joints();
    Matrix m(static_cast<Eigen::Index>(poses.size()), 3 * n);
    for (std::size_t t = 0; t < poses.size(); ++t) {
      if (poses[t].num_joints() != n) {
        throw DimensionMismatch("pose " + std::to_string(t) + " has " +
                                std::to_string(poses[t].num_joints()) + " joints, expected " +
                                std::to_string(n));
      }
      for (int j = 0; j < n; ++j) m.block<1, 3>(t, 3 * j) = poses[t].coords().row(j);
    }
    return m;
  }

  SkeletonPtr skeleton_;
  Matrix frames_;
  double fps_;
};

struct HorizonSpec {
  int input_len = 5;
  int output_len = 20;

  void validate() const {
    if (input_len < 2) throw InvalidArgument("input horizon needs at least 2 frames");
    if (output_len < 1) throw InvalidArgument("output horizon needs at least 1 frame");
  }
  int total() const { return input_len + output_len; }
  friend bool operator==(const HorizonSpec&, const HorizonSpec&) = default;
};

using Adjacency = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Symmetric 0/1 connectivity with self-loops on the diagonal.
inline Adjacency build_adjacency(const Skeleton& skeleton) {
  const int n = skeleton.num_joints();
  Adjacency a = Adjacency::Identity(n, n);
  for (const Edge& e : skeleton.edges()) {
    a(e.a, e.b) = 1;
    a(e.b, e.a) = 1;
  }
  return a;
}

struct Window {
  MotionSequence input;
  MotionSequence target;
};

inline Window split_sequence(const MotionSequence& seq, const HorizonSpec& h) {
  h.validate();
  if (seq.num_frames() < h.total()) {
    throw SequenceTooShort("sequence has " + std::to_string(seq.num_frames()) +
                           " frames, horizon needs " + std::to_string(h.total()));
  }
  return {seq.slice(0, h.input_len), seq.slice(h.input_len, h.output_len)};
}

inline std::vector<Window> sliding_windows(const MotionSequence& seq, const HorizonSpec& h,
                                           int stride) {
  if (stride < 1) throw InvalidArgument("window stride must be >= 1");
  h.validate();
  std::vector<Window> out;
  for (int start = 0; start + h.total() <= seq.num_frames(); start += stride) {
    out.push_back(split_sequence(seq.slice(start, h.total()), h));
  }
  return out;
}

// Frames of `a` followed by frames of `b`; both must share skeleton and fps.
inline MotionSequence concatenate(const MotionSequence& a, const MotionSequence& b) {
  if (!(a.skeleton() == b.skeleton())) throw SkeletonMismatch("cannot join different skeletons");
  Matrix m(a.num_frames() + b.num_frames(), a.frames().cols());
  m << a.frames(), b.frames();
  return a.with_frames(std::move(m));
}

}  // namespace posetraj
