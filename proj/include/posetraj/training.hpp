#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "posetraj/autodiff.hpp"
#include "posetraj/error.hpp"
#include "posetraj/metrics.hpp"
#include "posetraj/model.hpp"
#include "posetraj/params.hpp"
#include "posetraj/transform.hpp"

namespace posetraj {

struct TrainConfig {
  double learning_rate = 1e-5;
  double weight_decay = 1e-5;
  int max_epochs = 20;
  int batch_size = 32;
  std::uint64_t seed = 0;
  bool no_gat = false;
  bool no_relative_attn = false;
  bool no_shared_attn = false;
  // Global gradient-norm clip; 0 disables it.
  double grad_clip = 0.0;
  int window_stride = 1;
  // Cosine decay from learning_rate down to this over max_epochs; 0 keeps the rate constant.
  double final_learning_rate = 0.0;

  double learning_rate_at(int epoch) const {
    if (final_learning_rate <= 0.0 || max_epochs < 2) return learning_rate;
    const double progress = static_cast<double>(epoch) / static_cast<double>(max_epochs - 1);
    return final_learning_rate +
           0.5 * (learning_rate - final_learning_rate) * (1.0 + std::cos(std::numbers::pi * progress));
  }

  void validate() const {
    if (!(learning_rate > 0.0)) throw InvalidArgument("learning_rate must be positive");
    if (!(weight_decay >= 0.0)) throw InvalidArgument("weight_decay must be >= 0");
    if (max_epochs < 1) throw InvalidArgument("max_epochs must be >= 1");
    if (batch_size < 1) throw InvalidArgument("batch_size must be >= 1");
    if (!(grad_clip >= 0.0)) throw InvalidArgument("grad_clip must be >= 0");
    if (window_stride < 1) throw InvalidArgument("window_stride must be >= 1");
    if (!(final_learning_rate >= 0.0) || final_learning_rate > learning_rate)
      throw InvalidArgument("final_learning_rate must lie in [0, learning_rate]");
  }

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

// Rewires the architecture according to the ablation switches.
inline ModelConfig apply_ablation(ModelConfig cfg, const TrainConfig& train) {
  if (train.no_gat) cfg.use_gat = false;
  if (train.no_relative_attn) cfg.relative_attention = false;
  if (train.no_shared_attn) cfg.shared_attention = false;
  return cfg;
}

// Mean over predicted frames of the per-frame L2 norm of the pose difference.
inline ad::Var l2_loss(const ad::Var& pred, const Matrix& gt) { return ad::mean_row_distance(pred, gt); }

inline double l2_loss(const Matrix& pred, const Matrix& gt) {
  if (pred.rows() != gt.rows() || pred.cols() != gt.cols()) throw DimensionMismatch("l2_loss: shape mismatch");
  if (pred.rows() == 0) throw DimensionMismatch("l2_loss: no frames");
  return (pred - gt).rowwise().norm().mean();
}

struct AdamWHyper {
  double lr = 1e-5;
  double weight_decay = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamWMoments {
  Matrix m;
  Matrix v;
};

// One decoupled-weight-decay Adam update; `step` is the 1-based step index.
inline void adamw_step(Matrix& param, const Matrix& grad, AdamWMoments& moments, std::int64_t step,
                       const AdamWHyper& hp) {
  if (moments.m.size() == 0) {
    moments.m = Matrix::Zero(param.rows(), param.cols());
    moments.v = Matrix::Zero(param.rows(), param.cols());
  }
  const double bc1 = 1.0 - std::pow(hp.beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(hp.beta2, static_cast<double>(step));
  param *= 1.0 - hp.lr * hp.weight_decay;
  moments.m = hp.beta1 * moments.m + (1.0 - hp.beta1) * grad;
  moments.v = hp.beta2 * moments.v + (1.0 - hp.beta2) * grad.cwiseProduct(grad);
  param.array() -= hp.lr * (moments.m.array() / bc1) / ((moments.v.array() / bc2).sqrt() + hp.eps);
}

class AdamW {
 public:
  AdamW(ParameterStore& store, AdamWHyper hp) : store_(&store), hp_(hp), moments_(store.entries().size()) {}

  void step() {
    auto& entries = store_->entries();
    for (const auto& e : entries) {
      if (e.var.has_grad() && !e.var.grad().allFinite()) {
        throw NumericalError("non-finite gradient in parameter '" + e.name + "' at step " +
                             std::to_string(step_ + 1));
      }
    }
    ++step_;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      ad::Var& var = entries[i].var;
      adamw_step(var.mutable_value(), var.grad(), moments_[i], step_, hp_);
    }
  }

  std::int64_t step_count() const { return step_; }
  void set_step_count(std::int64_t s) { step_ = s; }
  const AdamWHyper& hyper() const { return hp_; }
  void set_learning_rate(double lr) { hp_.lr = lr; }
  std::vector<AdamWMoments>& moments() { return moments_; }
  const std::vector<AdamWMoments>& moments() const { return moments_; }

 private:
  ParameterStore* store_;
  AdamWHyper hp_;
  std::vector<AdamWMoments> moments_;
  std::int64_t step_ = 0;
};

inline double clip_grad_norm(ParameterStore& store, double max_norm) {
  double sq = 0.0;
  for (const auto& e : store.entries()) {
    if (e.var.has_grad()) sq += e.var.node()->grad.squaredNorm();
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    for (auto& e : store.entries()) {
      if (e.var.has_grad()) e.var.node()->grad *= max_norm / norm;
    }
  }
  return norm;
}

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  std::optional<EvalReport> validation;
  double wall_clock_s = 0.0;
  std::string checkpoint;
};

struct TrainLog {
  std::vector<EpochRecord> epochs;
};

// A window mapped into the frame defined by its own observed segment.
struct CanonicalWindow {
  Matrix input;   // T1 x 3N
  Matrix target;  // T2 x 3N
  TransformParams params;
};

inline CanonicalWindow canonical_window(const Model& model, const Window& w) {
  const TransformParams p = model.transform_params(w.input.frames());
  return {canonicalize(w.input.frames(), p), canonicalize(w.target.frames(), p), p};
}

struct TrainHooks {
  // Called after every epoch; may persist the model. Returns the checkpoint
  // path it wrote (empty if none).
  std::function<std::string(const EpochRecord&, const Model&, const AdamW&, bool is_best)> on_epoch;
  std::optional<std::vector<Window>> validation;
  int start_epoch = 0;  // epochs already completed (resume)
};

// Mini-batch AdamW on the canonical-space L2 loss. Deterministic given the
// seed: shuffling and dropout draw from one generator seeded by cfg.seed.
inline TrainLog train(Model& model, AdamW& optimizer, const std::vector<Window>& windows,
                      const TrainConfig& cfg, const TrainHooks& hooks = {}) {
  cfg.validate();
  if (windows.empty()) throw InvalidArgument("training needs at least one window");
  const ModelConfig& mc = model.config();
  std::vector<CanonicalWindow> data;
  data.reserve(windows.size());
  for (const Window& w : windows) {
    if (w.input.num_frames() != mc.input_len || w.target.num_frames() != mc.output_len) {
      throw DimensionMismatch("training window horizon differs from the model's");
    }
    data.push_back(canonical_window(model, w));
  }

  std::mt19937_64 rng(cfg.seed);
  // Shuffles of already-completed epochs are replayed on resume so batch order
  // matches an uninterrupted run (exactly so when dropout is off).
  std::vector<std::size_t> order(data.size());
  TrainLog log;
  double best_val = std::numeric_limits<double>::infinity();
  const auto t0 = std::chrono::steady_clock::now();
  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    if (epoch < hooks.start_epoch) continue;
    if (cfg.final_learning_rate > 0.0) optimizer.set_learning_rate(cfg.learning_rate_at(epoch));
    double loss_sum = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(cfg.batch_size));
      const auto batch = static_cast<double>(end - begin);
      model.parameters().zero_grad();
      for (std::size_t b = begin; b < end; ++b) {
        const CanonicalWindow& w = data[order[b]];
        ForwardContext ctx{true, &rng};
        const ad::Var loss = l2_loss(model.forward_canonical(w.input, ctx), w.target);
        if (!std::isfinite(loss.item())) {
          throw NumericalError("training diverged: non-finite loss in epoch " + std::to_string(epoch + 1));
        }
        loss_sum += loss.item();
        Matrix seed(1, 1);
        seed(0, 0) = 1.0 / batch;
        ad::backward(loss, &seed);
      }
      if (cfg.grad_clip > 0.0) clip_grad_norm(model.parameters(), cfg.grad_clip);
      optimizer.step();
    }
    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.train_loss = loss_sum / static_cast<double>(data.size());
    bool is_best = true;
    if (hooks.validation && !hooks.validation->empty()) {
      rec.validation = evaluate(model, *hooks.validation, 1, 0);
      is_best = rec.validation->ade_traj + rec.validation->ade_pose < best_val;
      if (is_best) best_val = rec.validation->ade_traj + rec.validation->ade_pose;
    }
    rec.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (hooks.on_epoch) rec.checkpoint = hooks.on_epoch(rec, model, optimizer, is_best);
    log.epochs.push_back(std::move(rec));
  }
  return log;
}

}  // namespace posetraj
