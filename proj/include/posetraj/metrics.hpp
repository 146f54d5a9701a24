#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <thread>
#include <vector>

#include "posetraj/error.hpp"
#include "posetraj/model.hpp"
#include "posetraj/skeleton.hpp"
#include "posetraj/types.hpp"

namespace posetraj {

namespace detail {

inline void check_metric_shapes(const Matrix& pred, const Matrix& gt) {
  if (pred.rows() != gt.rows() || pred.cols() != gt.cols()) {
    throw DimensionMismatch("metric inputs differ in shape: " + std::to_string(pred.rows()) + "x" +
                            std::to_string(pred.cols()) + " vs " + std::to_string(gt.rows()) + "x" +
                            std::to_string(gt.cols()));
  }
  if (pred.rows() == 0) throw DimensionMismatch("metric inputs have no frames");
  if (pred.cols() % 3 != 0) throw DimensionMismatch("metric inputs are not joint triples");
}

inline double root_distance(const Matrix& pred, const Matrix& gt, Eigen::Index t, int root) {
  return (pred.block<1, 3>(t, 3 * root) - gt.block<1, 3>(t, 3 * root)).norm();
}

// Mean over non-root joints of the root-relative displacement at frame t.
inline double pose_distance(const Matrix& pred, const Matrix& gt, Eigen::Index t, int root) {
  const auto n = static_cast<int>(pred.cols() / 3);
  if (n < 2) return 0.0;
  const auto pr = pred.block<1, 3>(t, 3 * root);
  const auto gr = gt.block<1, 3>(t, 3 * root);
  double total = 0.0;
  for (int j = 0; j < n; ++j) {
    if (j == root) continue;
    total += ((pred.block<1, 3>(t, 3 * j) - pr) - (gt.block<1, 3>(t, 3 * j) - gr)).norm();
  }
  return total / static_cast<double>(n - 1);
}

}  // namespace detail

// Frames are T x 3N; errors are in meters.
inline double ade_traj(const Matrix& pred, const Matrix& gt, int root) {
  detail::check_metric_shapes(pred, gt);
  double total = 0.0;
  for (Eigen::Index t = 0; t < pred.rows(); ++t) total += detail::root_distance(pred, gt, t, root);
  return total / static_cast<double>(pred.rows());
}

inline double fde_traj(const Matrix& pred, const Matrix& gt, int root) {
  detail::check_metric_shapes(pred, gt);
  return detail::root_distance(pred, gt, pred.rows() - 1, root);
}

inline double ade_pose(const Matrix& pred, const Matrix& gt, int root) {
  detail::check_metric_shapes(pred, gt);
  double total = 0.0;
  for (Eigen::Index t = 0; t < pred.rows(); ++t) total += detail::pose_distance(pred, gt, t, root);
  return total / static_cast<double>(pred.rows());
}

inline double fde_pose(const Matrix& pred, const Matrix& gt, int root) {
  detail::check_metric_shapes(pred, gt);
  return detail::pose_distance(pred, gt, pred.rows() - 1, root);
}

inline double ade_traj(const MotionSequence& pred, const MotionSequence& gt) {
  return ade_traj(pred.frames(), gt.frames(), gt.skeleton().root_index());
}
inline double fde_traj(const MotionSequence& pred, const MotionSequence& gt) {
  return fde_traj(pred.frames(), gt.frames(), gt.skeleton().root_index());
}
inline double ade_pose(const MotionSequence& pred, const MotionSequence& gt) {
  return ade_pose(pred.frames(), gt.frames(), gt.skeleton().root_index());
}
inline double fde_pose(const MotionSequence& pred, const MotionSequence& gt) {
  return fde_pose(pred.frames(), gt.frames(), gt.skeleton().root_index());
}

struct BenchStats {
  double median_ms = 0.0;
  double p95_ms = 0.0;
  std::vector<double> samples_ms;
};

inline BenchStats summarize_latency(std::vector<double> samples) {
  BenchStats s;
  s.samples_ms = samples;
  if (samples.empty()) return s;
  std::sort(samples.begin(), samples.end());
  const std::size_t n = samples.size();
  s.median_ms = n % 2 == 1 ? samples[n / 2] : 0.5 * (samples[n / 2 - 1] + samples[n / 2]);
  // nearest-rank percentile
  const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(n)));
  s.p95_ms = samples[std::max<std::size_t>(rank, 1) - 1];
  return s;
}

// Single forward passes, batch 1, dropout off. Warmup runs are not timed.
// Works with anything exposing predict(const MotionSequence&).
template <class Predictor>
BenchStats bench_forward(const Predictor& model, const MotionSequence& s_in, int repeats, int warmup = 3) {
  if (repeats < 1) throw InvalidArgument("bench needs at least one repeat");
  if (warmup < 3) throw InvalidArgument("bench needs at least 3 warmup iterations");
  for (int i = 0; i < warmup; ++i) (void)model.predict(s_in);
  std::vector<double> samples;
  samples.reserve(static_cast<std::size_t>(repeats));
  for (int i = 0; i < repeats; ++i) {
    const auto start = std::chrono::steady_clock::now();
    (void)model.predict(s_in);
    const auto stop = std::chrono::steady_clock::now();
    samples.push_back(std::chrono::duration<double, std::milli>(stop - start).count());
  }
  return summarize_latency(std::move(samples));
}

struct EvalReport {
  double ade_pose = 0.0;
  double fde_pose = 0.0;
  double ade_traj = 0.0;
  double fde_traj = 0.0;
  double runtime_ms = 0.0;
  std::size_t num_windows = 0;
};

// Repeats the last observed pose for every future frame.
inline Matrix zero_velocity_prediction(const Matrix& input_frames, int t2) {
  return input_frames.row(input_frames.rows() - 1).replicate(t2, 1);
}

// Averages per-window metrics. `predictor(window)` returns a T2 x 3N global
// prediction; windows are spread over `threads` workers.
template <class Predictor>
EvalReport evaluate_windows(const std::vector<Window>& windows, Predictor&& predictor, int threads = 1) {
  if (windows.empty()) throw InvalidArgument("no windows to evaluate");
  const std::size_t n = windows.size();
  std::vector<std::array<double, 4>> rows(n);
  auto work = [&](std::size_t begin, std::size_t step) {
    for (std::size_t i = begin; i < n; i += step) {
      const Window& w = windows[i];
      const Matrix pred = predictor(w);
      const Matrix& gt = w.target.frames();
      const int root = w.target.skeleton().root_index();
      rows[i] = {ade_pose(pred, gt, root), fde_pose(pred, gt, root), ade_traj(pred, gt, root),
                 fde_traj(pred, gt, root)};
    }
  };
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w, workers);
    for (std::thread& t : pool) t.join();
  }
  EvalReport r;
  for (const auto& m : rows) {
    r.ade_pose += m[0];
    r.fde_pose += m[1];
    r.ade_traj += m[2];
    r.fde_traj += m[3];
  }
  const auto count = static_cast<double>(n);
  r.ade_pose /= count;
  r.fde_pose /= count;
  r.ade_traj /= count;
  r.fde_traj /= count;
  r.num_windows = n;
  return r;
}

inline EvalReport evaluate(const Model& model, const std::vector<Window>& windows, int threads = 1,
                           int bench_repeats = 5) {
  EvalReport r = evaluate_windows(
      windows, [&model](const Window& w) { return Matrix(model.predict(w.input).global.frames()); }, threads);
  if (bench_repeats > 0) r.runtime_ms = bench_forward(model, windows.front().input, bench_repeats).median_ms;
  return r;
}

}  // namespace posetraj
