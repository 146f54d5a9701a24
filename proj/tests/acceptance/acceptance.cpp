// Runs every acceptance criterion and prints one PASS/FAIL line each.
// Exit status is the number of failures (capped at 1).

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>

#include "fixtures.hpp"
#include "oracles.hpp"

using namespace posetraj;
using fixtures::max_abs;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

void randomize(ParameterStore& store, std::uint64_t seed, double range) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-range, range);
  for (auto& e : store.entries()) {
    Matrix& m = e.var.mutable_value();
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  }
}

// The small model every training criterion uses.
ModelConfig tiny() {
  ModelConfig c = fixtures::tiny_config();
  c.ffn_dim = 512;
  return c;
}

TrainConfig schedule(int epochs, double lr, int batch) {
  TrainConfig t;
  t.learning_rate = lr;
  t.final_learning_rate = 1e-6;
  t.weight_decay = 0.0;
  t.max_epochs = epochs;
  t.batch_size = batch;
  t.seed = 3;
  return t;
}

TrainLog fit(Model& m, const std::vector<Window>& w, const TrainConfig& t) {
  AdamW opt(m.parameters(), AdamWHyper{t.learning_rate, t.weight_decay});
  return train(m, opt, w, t);
}

// ---------------------------------------------------------------------------

Outcome transform_round_trip() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> frames(5, 45);
  std::uniform_int_distribution<int> delta(1, 4);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const int n = i % 2 == 0 ? 3 : 17;
    const Matrix x = fixtures::random_frames(rng, frames(rng), n, 20.0);
    const TransformParams p = compute_params(x, static_cast<int>(rng() % static_cast<unsigned>(n)), delta(rng));
    worst = std::max(worst, max_abs(decanonicalize(canonicalize(x, p), p) - x));
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-9 && secs < 10.0, "max err " + sci(worst) + ", " + sci(secs) + " s"};
}

Outcome rigid_invariance() {
  const auto t0 = Clock::now();
  Model m(skeletons::h36m17(), tiny());
  randomize(m.parameters(), 21, 0.2);
  const auto windows = fixtures::synthetic_windows(100, 5, m.config().horizon());
  std::mt19937_64 rng(6);
  double canon = 0.0;
  double global = 0.0;
  for (const Window& w : windows) {
    const Prediction base = m.predict(w.input);
    for (int k = 0; k < 10; ++k) {
      const RigidTransform g = random_rigid(10.0, std::numbers::pi, rng());
      const Prediction moved = m.predict(g.apply(w.input));
      canon = std::max(canon, max_abs(moved.canonical - base.canonical));
      global = std::max(global, max_abs(moved.global.frames() - g.apply(base.global.frames())));
    }
  }
  const double secs = seconds_since(t0);
  return {canon < 1e-6 && global < 1e-5 && secs < 120.0,
          "canonical " + sci(canon) + ", global " + sci(global) + ", " + sci(secs) + " s"};
}

Outcome no_transform_degradation() {
  const HorizonSpec h = tiny().horizon();
  // untranslated walks: every sequence starts at the world origin
  auto walks = [&](int count, std::uint64_t seed) {
    std::vector<Window> out;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> speed(0.6, 1.6);
    for (int i = 0; i < count; ++i) {
      SyntheticSpec sp;
      sp.mode = i % 2 == 0 ? SyntheticMode::kStraight : SyntheticMode::kWavy;
      sp.seed = rng();
      sp.speed = speed(rng);
      sp.duration = static_cast<double>(h.total()) / sp.fps + 0.2;
      sp.start = Vec3::Zero();
      out.push_back(split_sequence(generate_synthetic(sp, fixtures::h36m()), h));
    }
    return out;
  };
  const auto train_w = walks(32, 1);
  const auto test_w = walks(16, 2);
  std::vector<Window> shifted;
  std::mt19937_64 rng(3);
  for (const Window& w : test_w) {
    const RigidTransform g = random_rigid(10.0, 0.0, rng());
    shifted.push_back({g.apply(w.input), g.apply(w.target)});
  }
  double gaps[2];
  double plain[2];
  for (int use : {0, 1}) {
    ModelConfig c = tiny();
    c.use_transform = use == 1;
    Model m(skeletons::h36m17(), c);
    fit(m, train_w, schedule(60, 1e-3, 8));
    plain[use] = evaluate(m, test_w, 1, 0).ade_traj;
    gaps[use] = evaluate(m, shifted, 1, 0).ade_traj - plain[use];
  }
  return {gaps[0] > 0.0 && std::abs(gaps[1]) < 1e-4,
          "no-transform " + sci(plain[0]) + " -> " + sci(plain[0] + gaps[0]) + " m, transform gap " + sci(gaps[1]) +
              " m"};
}

Outcome gradient_checks() {
  std::mt19937_64 rng(7);
  // GAT layer
  const Adjacency adj = build_adjacency(skeletons::h36m17());
  ParameterStore gs(7);
  GatParams gat = GatParams::create(gs, 8, 2, 0.2);
  gat.bias.mutable_value().setConstant(0.05);
  const Matrix x = fixtures::random_frames(rng, 2, 17, 1.0);
  ad::Var joints(Eigen::Map<const Matrix>(x.data(), 34, 3), true);
  const Matrix cg = fixtures::random_matrix(rng, 34, 8);
  const double e_gat = fixtures::gradcheck(
      {gat.heads[0].weight, gat.heads[0].attn, gat.heads[1].weight, gat.heads[1].attn, gat.bias, joints},
      [&] { return ad::weighted_sum(gat_forward(joints, adj, gat), cg); });

  // relative self-attention, causal, two heads
  ParameterStore as(5);
  const AttentionParams ap = AttentionParams::create(as, "a", 6, 3, 2);
  randomize(as, 6, 0.5);
  ad::Var xa(fixtures::random_matrix(rng, 4, 6), true);
  const Matrix ca = fixtures::random_matrix(rng, 4, 6);
  std::vector<ad::Var> avars{xa};
  for (const auto& e : as.entries()) avars.push_back(e.var);
  const double e_attn = fixtures::gradcheck(
      avars, [&] { return ad::weighted_sum(relative_self_attention(xa, ap, 2, true, 2), ca); });

  // output projection under the training loss
  ParameterStore os(8);
  const OutputParams op = OutputParams::create(os, 6, 9);
  randomize(os, 9, 0.5);
  ad::Var hid(fixtures::random_matrix(rng, 3, 6), true);
  const Matrix target = fixtures::random_frames(rng, 3, 3, 1.0);
  const double e_out =
      fixtures::gradcheck({hid, op.weight, op.bias}, [&] { return l2_loss(project_output(hid, op), target); });

  // whole tiny model, 50 sampled parameters
  const ModelConfig cfg = fixtures::gradcheck_config();
  Model model(skeletons::chain(3), cfg);
  randomize(model.parameters(), 12, 0.3);
  const Matrix in = fixtures::random_frames(rng, 3, 3, 1.0);
  const Matrix gt = fixtures::random_frames(rng, 2, 3, 1.0);
  std::vector<ad::Var> mvars;
  for (const auto& e : model.parameters().entries()) mvars.push_back(e.var);
  const double e_full =
      fixtures::gradcheck(mvars, [&] { return l2_loss(model.forward_canonical(in), gt); }, 50, 14, 1e-5);

  return {e_gat < 1e-4 && e_attn < 1e-4 && e_out < 1e-4 && e_full < 1e-3 && cfg.model_dim() == 96,
          "gat " + sci(e_gat) + ", attention " + sci(e_attn) + ", output " + sci(e_out) + ", full model " +
              sci(e_full)};
}

Outcome attention_oracle() {
  double worst = 0.0;
  for (int clip : {1, 2, 3}) {
    for (bool causal : {false, true}) {
      ParameterStore store(static_cast<std::uint64_t>(clip));
      const AttentionParams p = AttentionParams::create(store, "a", 4, 4, clip);
      randomize(store, 40 + static_cast<std::uint64_t>(clip), 0.5);
      std::mt19937_64 rng(3);
      const Matrix x = fixtures::random_matrix(rng, 3, 4);
      oracle::AttentionWeights w{p.wq.value(), p.wk.value(), p.wv.value(), p.wo.value(),
                                 p.bq.value(), p.bk.value(), p.bv.value(), p.bo.value(),
                                 p.rel_key.value(), p.rel_value.value(), clip};
      const Matrix got = relative_self_attention(ad::constant(x), p, 1, causal, clip).value();
      worst = std::max(worst, max_abs(got - oracle::self_attention(x, w, causal)));
    }
  }
  // causal: perturbing frame t leaves every earlier output bit-identical
  ParameterStore store(1);
  const AttentionParams p = AttentionParams::create(store, "a", 8, 4, 3);
  randomize(store, 2, 0.5);
  std::mt19937_64 rng(4);
  const Matrix x = fixtures::random_matrix(rng, 6, 8);
  const Matrix base = relative_self_attention(ad::constant(x), p, 2, true, 3).value();
  bool exact = true;
  for (int t = 0; t < 6; ++t) {
    Matrix y = x;
    y.row(t).array() += 3.0;
    const Matrix out = relative_self_attention(ad::constant(y), p, 2, true, 3).value();
    exact = exact && out.topRows(t) == base.topRows(t) && max_abs(out.row(t) - base.row(t)) > 0.0;
  }
  return {worst < 1e-12 && exact, "max err " + sci(worst) + ", causal " + (exact ? "exact" : "leaks")};
}

Outcome metric_oracle() {
  std::mt19937_64 rng(11);
  double worst = 0.0;
  double drift = 0.0;
  std::uniform_real_distribution<double> shift(-50.0, 50.0);
  for (int i = 0; i < 100; ++i) {
    const int root = i % 17;
    const Matrix p = fixtures::random_frames(rng, 20, 17, 3.0);
    const Matrix g = fixtures::random_frames(rng, 20, 17, 3.0);
    worst = std::max({worst, std::abs(ade_traj(p, g, root) - oracle::ade_traj(p, g, root)),
                      std::abs(fde_traj(p, g, root) - oracle::fde_traj(p, g, root)),
                      std::abs(ade_pose(p, g, root) - oracle::ade_pose(p, g, root)),
                      std::abs(fde_pose(p, g, root) - oracle::fde_pose(p, g, root))});
    const RigidTransform tp{0.0, Vec3(shift(rng), shift(rng), shift(rng))};
    const RigidTransform tg{0.0, Vec3(shift(rng), shift(rng), shift(rng))};
    drift = std::max(drift, std::abs(ade_pose(tp.apply(p), tg.apply(g), root) - ade_pose(p, g, root)));
  }
  return {worst < 1e-12 && drift < 1e-12, "max err " + sci(worst) + ", translation drift " + sci(drift)};
}

Outcome overfit() {
  const auto t0 = Clock::now();
  Model m(skeletons::h36m17(), tiny());
  const auto windows = fixtures::synthetic_windows(8, 100, m.config().horizon());
  const TrainLog log = fit(m, windows, schedule(6000, 3e-3, 8));
  const double loss = log.epochs.back().train_loss;
  const double ade = evaluate(m, windows, 1, 0).ade_traj;
  const double secs = seconds_since(t0);
  return {ade < 0.05 && loss < 1e-2 && secs < 300.0,
          "ADE_Tr " + sci(ade) + " m, loss " + sci(loss) + ", " + sci(secs) + " s"};
}

Outcome learning_sanity() {
  const auto t0 = Clock::now();
  Model m(skeletons::h36m17(), tiny());
  const HorizonSpec h = m.config().horizon();
  const auto train_w = fixtures::synthetic_windows(200, 200, h);
  const auto test_w = fixtures::synthetic_windows(50, 300, h);
  fit(m, train_w, schedule(80, 1e-3, 8));
  const double ours = evaluate(m, test_w, 1, 0).ade_traj;
  const double zv =
      evaluate_windows(test_w, [&](const Window& w) { return zero_velocity_prediction(w.input.frames(), h.output_len); })
          .ade_traj;
  const double secs = seconds_since(t0);
  const double gain = 1.0 - ours / zv;
  return {gain >= 0.30 && secs < 900.0,
          "ADE_Tr " + sci(ours) + " vs zero-velocity " + sci(zv) + " (" + sci(100.0 * gain) + "% better), " +
              sci(secs) + " s"};
}

Outcome dimension_facts() {
  auto d = [](int n) { return EmbeddingConfig{n, 32}.model_dim(); };
  bool ok = d(17) == 544 && d(31) == 992 && d(30) == 960;
  ModelConfig c;
  c.num_joints = 31;
  ok = ok && c.model_dim() == 992;
  const DatasetPreset& h36m = find_preset("h36m");
  const DatasetPreset& cmu = find_preset("cmu");
  const DatasetPreset& darko = find_preset("darko");
  ok = ok && h36m.input_len == 5 && h36m.output_len == 20 && h36m.fps == 10.0;
  ok = ok && cmu.input_len == 5 && cmu.output_len == 10 && cmu.fps == 10.0;
  ok = ok && darko.input_len == 15 && darko.output_len == 30 && darko.fps == 16.0;
  ok = ok && skeletons::h36m17().num_joints() == 17 && skeletons::cmu31().num_joints() == 31;
  return {ok, "D = " + std::to_string(d(17)) + "/" + std::to_string(d(31)) + "/" + std::to_string(d(30)) +
                  ", horizons 5->20@10, 5->10@10, 15->30@16"};
}

Outcome one_pass_and_latency() {
  ModelConfig c;  // H3.6M-sized defaults: N=17, D=544, Nx=4, T1=5, T2=20
  c.dropout = 0.0;
  Model m(skeletons::h36m17(), c);
  SyntheticSpec sp;
  sp.duration = 1.0;
  const MotionSequence input = generate_synthetic(sp, fixtures::h36m()).slice(0, c.input_len);
  const Prediction p = m.predict(input);
  const InferenceEngine<float> engine(m);
  (void)engine.predict(input);
  const bool one = m.decoder_passes() == 1 && engine.decoder_passes() == 1 && p.global.num_frames() == 20;
  const BenchStats s = bench_forward(engine, input, 30);
  return {one && s.median_ms < 100.0, std::string("decoder passes ") + std::to_string(m.decoder_passes()) +
                                          ", median " + sci(s.median_ms) + " ms, p95 " + sci(s.p95_ms) + " ms, " +
                                          std::to_string(count_params(c)) + " params"};
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"transform round-trip", transform_round_trip},
      {"rigid invariance", rigid_invariance},
      {"degradation without transform", no_transform_degradation},
      {"gradient checks", gradient_checks},
      {"attention oracle", attention_oracle},
      {"metric oracle", metric_oracle},
      {"overfit smoke test", overfit},
      {"learning sanity", learning_sanity},
      {"dimension facts", dimension_facts},
      {"non-autoregression and latency", one_pass_and_latency},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << name << "  (" << o.detail << ")" << std::endl;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << '\n';
  return failures == 0 ? 0 : 1;
}
