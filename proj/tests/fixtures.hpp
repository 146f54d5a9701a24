#pragma once

// Shared builders for the test suites: random sequences, tiny model configs
// and synthetic window sets.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "posetraj/posetraj.hpp"

namespace fixtures {

using namespace posetraj;

inline SkeletonPtr h36m() {
  static const SkeletonPtr sk = std::make_shared<const Skeleton>(skeletons::h36m17());
  return sk;
}

inline SkeletonPtr chain(int n) { return std::make_shared<const Skeleton>(skeletons::chain(n)); }

inline Matrix random_frames(std::mt19937_64& rng, int t, int n, double range) {
  std::uniform_real_distribution<double> u(-range, range);
  Matrix m(t, 3 * n);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

inline Matrix random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c, double range = 1.0) {
  std::uniform_real_distribution<double> u(-range, range);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

// Nx=1, one head, N=3 chain, D=96, T1=3, T2=2: the gradient-check model.
inline ModelConfig gradcheck_config() {
  ModelConfig c;
  c.num_joints = 3;
  c.j_dim = 32;
  c.num_layers = 1;
  c.num_heads = 1;
  c.ffn_dim = 16;
  c.dropout = 0.0;
  c.input_len = 3;
  c.output_len = 2;
  c.seed = 11;
  return c;
}

// Small H3.6M-skeleton model used by the training experiments.
inline ModelConfig tiny_config(int t1 = 5, int t2 = 10) {
  ModelConfig c;
  c.num_joints = 17;
  c.j_dim = 4;
  c.num_layers = 1;
  c.num_heads = 1;
  c.ffn_dim = 64;
  c.dropout = 0.0;
  c.input_len = t1;
  c.output_len = t2;
  c.seed = 1;
  return c;
}

inline MotionSequence synthetic(SyntheticMode mode, std::uint64_t seed, double speed = 1.0, double duration = 2.0) {
  SyntheticSpec sp;
  sp.mode = mode;
  sp.seed = seed;
  sp.speed = speed;
  sp.duration = duration;
  return generate_synthetic(sp, h36m());
}

// One window per generated sequence, alternating straight and wavy walks with
// speeds spread over the walking envelope.
inline std::vector<Window> synthetic_windows(int count, std::uint64_t seed, const HorizonSpec& h) {
  std::vector<Window> out;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> speed(0.6, 1.6);
  for (int i = 0; i < count; ++i) {
    const SyntheticMode mode = i % 2 == 0 ? SyntheticMode::kStraight : SyntheticMode::kWavy;
    const double duration = static_cast<double>(h.total()) / 10.0 + 0.2;
    out.push_back(split_sequence(synthetic(mode, rng(), speed(rng), duration), h));
  }
  return out;
}

// Largest relative error between backprop and central differences over the
// given entries of `params` (all entries when `samples` is 0, otherwise that
// many drawn at random across all params).
inline double gradcheck(const std::vector<ad::Var>& params, const std::function<ad::Var()>& loss, int samples = 0,
                        std::uint64_t seed = 0, double step = 1e-5) {
  for (ad::Var p : params) p.zero_grad();
  ad::backward(loss());
  std::vector<std::pair<std::size_t, Eigen::Index>> picks;
  for (std::size_t i = 0; i < params.size(); ++i)
    for (Eigen::Index k = 0; k < params[i].size(); ++k) picks.emplace_back(i, k);
  if (samples > 0 && static_cast<std::size_t>(samples) < picks.size()) {
    std::mt19937_64 rng(seed);
    std::shuffle(picks.begin(), picks.end(), rng);
    picks.resize(static_cast<std::size_t>(samples));
  }
  double worst = 0.0;
  ad::NoGradGuard no_grad;
  for (const auto& [i, k] : picks) {
    ad::Var p = params[i];
    const double analytic = p.grad().data()[k];
    Matrix& value = p.mutable_value();
    const double numeric = oracle::central_difference(value, k / value.cols(), k % value.cols(),
                                                      [&] { return loss().item(); }, step);
    worst = std::max(worst, oracle::relative_error(analytic, numeric));
  }
  return worst;
}

inline double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

}  // namespace fixtures
