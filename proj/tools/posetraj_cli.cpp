// posetraj command-line tool. Every subcommand writes manifest.json into its
// output directory. Exit codes: 0 ok, 1 internal error, 2 bad input.

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "posetraj/posetraj.hpp"

namespace fs = std::filesystem;
using namespace posetraj;

namespace {

// Options shared by every subcommand. Each one can also come from the
// environment as POSETRAJ_<NAME>.
struct Common {
  std::optional<std::string> preset;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  bool no_transform = false;
  std::optional<std::string> ablation;
  std::optional<int> delta;
  std::string out = ".";
};

struct Manifest {
  std::string command;
  std::vector<std::string> argv;
  Json config = Json::object();
  Json inputs = Json::object();
  Json outputs = Json::object();
  std::uint64_t seed = 0;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  std::string started_at;

  Manifest() {
    const std::time_t now = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    started_at = buf;
  }

  void write(const fs::path& dir) const {
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::error_code ec;
    fs::create_directories(dir, ec);
    write_json_file(dir / "manifest.json", Json{{"command", command},
                                                {"argv", argv},
                                                {"config", config},
                                                {"inputs", inputs},
                                                {"outputs", outputs},
                                                {"seed", seed},
                                                {"version", kVersion},
                                                {"started_at", started_at},
                                                {"wall_clock_s", wall}});
  }
};

std::string env_name(const std::string& flag) {
  std::string name = "POSETRAJ_";
  for (char ch : flag) name += ch == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  return name;
}

template <class T>
CLI::Option* option(CLI::App* app, const std::string& flag, T& target, const std::string& help) {
  return app->add_option("--" + flag, target, help)->envname(env_name(flag));
}

void add_common(CLI::App* app, Common& c) {
  option(app, "preset", c.preset, "dataset preset: h36m, cmu or darko (fps, horizons, epochs)")
      ->check(CLI::IsMember({"h36m", "cmu", "darko"}));
  option(app, "config", c.config_path, "JSON file with optional \"model\" and \"train\" sections");
  option(app, "seed", c.seed, "random seed");
  option(app, "threads", c.threads, "worker cap for evaluation")->check(CLI::PositiveNumber);
  app->add_flag("--no-transform", c.no_transform, "skip canonicalization (for robustness comparisons)")
      ->envname(env_name("no-transform"));
  option(app, "ablation", c.ablation, "drop one component: no_gat, no_relative_attn or no_shared_attn")
      ->check(CLI::IsMember({"no_gat", "no_relative_attn", "no_shared_attn"}));
  option(app, "delta", c.delta, "frame interval for the heading estimate");
  option(app, "out", c.out, "output directory (manifest and reports go here)");
}

const DatasetPreset& preset_of(const Common& c) { return find_preset(c.preset.value_or("h36m")); }

struct Resolved {
  ModelConfig model;
  TrainConfig train;
};

Resolved resolve(const Common& c, std::optional<int> epochs) {
  const DatasetPreset& p = preset_of(c);
  Resolved r;
  r.model.input_len = p.input_len;
  r.model.output_len = p.output_len;
  r.train.max_epochs = p.max_epochs;
  if (!c.config_path.empty()) {
    const Json j = read_json_file(c.config_path);
    detail::reject_unknown_keys(j, {"model", "train"}, "config file");
    if (j.contains("model")) r.model = model_config_from_json(j.at("model"), r.model);
    if (j.contains("train")) r.train = train_config_from_json(j.at("train"), r.train);
  }
  if (epochs) r.train.max_epochs = *epochs;
  if (c.seed) r.model.seed = r.train.seed = *c.seed;
  if (c.delta) r.model.delta = *c.delta;
  if (c.no_transform) r.model.use_transform = false;
  if (c.ablation) {
    r.train.no_gat = *c.ablation == "no_gat";
    r.train.no_relative_attn = *c.ablation == "no_relative_attn";
    r.train.no_shared_attn = *c.ablation == "no_shared_attn";
  }
  r.model = apply_ablation(r.model, r.train);
  return r;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir)) throw InputError("cannot create output directory '" + dir.string() + "'");
}

std::vector<MotionSequence> load_sequences(const fs::path& dir, Json* listed = nullptr) {
  const auto files = list_sequence_files(dir);
  if (files.empty()) throw InputError("no sequences found in '" + dir.string() + "'");
  std::vector<MotionSequence> out;
  for (const fs::path& f : files) {
    out.push_back(read_sequence(f));
    if (!(out.back().skeleton() == out.front().skeleton())) {
      throw SkeletonMismatch("'" + f.string() + "' uses a different skeleton than '" + files.front().string() + "'");
    }
    if (listed) listed->push_back(f.string());
  }
  return out;
}

std::vector<Window> windows_of(const std::vector<MotionSequence>& seqs, const HorizonSpec& h, int stride) {
  std::vector<Window> out;
  for (const MotionSequence& s : seqs) {
    if (s.num_frames() < h.input_len + h.output_len) continue;
    for (Window& w : sliding_windows(s, h, stride)) out.push_back(std::move(w));
  }
  if (out.empty()) {
    throw SequenceTooShort("no sequence has the " + std::to_string(h.input_len + h.output_len) +
                           " frames one window needs");
  }
  return out;
}

// Loads a checkpoint and applies the flags that may legitimately differ at
// inference time (transform switch and heading interval).
Model load_model(const fs::path& path, const Common& c) {
  Checkpoint ck = read_checkpoint(path);
  if (c.no_transform) ck.model_config.use_transform = false;
  if (c.delta) ck.model_config.delta = *c.delta;
  if (c.ablation) {
    TrainConfig t;
    t.no_gat = *c.ablation == "no_gat";
    t.no_relative_attn = *c.ablation == "no_relative_attn";
    t.no_shared_attn = *c.ablation == "no_shared_attn";
    if (!(apply_ablation(ck.model_config, t) == ck.model_config)) {
      throw InvalidArgument("--ablation " + *c.ablation + " does not match the checkpoint's architecture");
    }
  }
  if (c.preset) {
    const DatasetPreset& p = find_preset(*c.preset);
    if (p.input_len != ck.model_config.input_len || p.output_len != ck.model_config.output_len) {
      throw InvalidArgument("preset '" + *c.preset + "' horizon differs from the checkpoint's");
    }
  }
  ck.model_config.validate();
  return model_from_checkpoint(ck);
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << v;
  return os.str();
}

void print_table(const std::vector<std::pair<std::string, EvalReport>>& rows) {
  std::cout << std::left << std::setw(18) << "" << std::right << std::setw(10) << "ADE_Po" << std::setw(10)
            << "FDE_Po" << std::setw(10) << "ADE_Tr" << std::setw(10) << "FDE_Tr" << std::setw(10) << "windows"
            << '\n';
  for (const auto& [name, r] : rows) {
    std::cout << std::left << std::setw(18) << name << std::right << std::setw(10) << fmt(r.ade_pose)
              << std::setw(10) << fmt(r.fde_pose) << std::setw(10) << fmt(r.ade_traj) << std::setw(10)
              << fmt(r.fde_traj) << std::setw(10) << r.num_windows << '\n';
  }
}

// ---------------------------------------------------------------------------

#if POSETRAJ_WITH_CONVERTERS
struct ConvertArgs {
  std::string input, output, layout = "h36m32", units = "mm", skeleton_path;
  char up_axis = 'z';
  std::optional<double> source_fps, target_fps;
};

int cmd_convert(const Common& c, const ConvertArgs& a, Manifest& m) {
  ConvertOptions opt;
  opt.layout = parse_raw_layout(a.layout);
  opt.units = a.units;
  if (a.up_axis != 'y' && a.up_axis != 'z') throw InvalidArgument("--up-axis must be y or z");
  opt.up_axis = a.up_axis;
  opt.source_fps = a.source_fps;
  opt.target_fps = a.target_fps.value_or(preset_of(c).fps);
  if (!a.skeleton_path.empty()) {
    opt.generic_skeleton = std::make_shared<const Skeleton>(skeleton_from_json(read_json_file(a.skeleton_path)));
  }
  std::ifstream is(a.input);
  if (!is) throw InputError("cannot open '" + a.input + "'");
  const MotionSequence seq = convert_raw(is, opt);
  write_sequence(seq, a.output, {c.preset.value_or(""), fs::path(a.input).filename().string()});
  m.config = {{"layout", a.layout}, {"units", a.units}, {"up_axis", std::string(1, a.up_axis)},
              {"target_fps", opt.target_fps}};
  if (opt.source_fps) m.config["source_fps"] = *opt.source_fps;
  m.inputs["raw"] = a.input;
  m.outputs["sequence"] = a.output;
  std::cout << "wrote " << seq.num_frames() << " frames of " << seq.num_joints() << " joints to " << a.output << '\n';
  return 0;
}
#endif

struct GenerateArgs {
  int count = 8;
  std::string mode = "mixed";
  std::optional<double> speed;
  double duration = 4.0;
};

int cmd_generate(const Common& c, const GenerateArgs& a, Manifest& m) {
  if (a.count < 1) throw InvalidArgument("--count must be positive");
  const DatasetPreset& p = preset_of(c);
  const fs::path out(c.out);
  ensure_dir(out);
  const auto skeleton = std::make_shared<const Skeleton>(skeletons::h36m17());
  const std::uint64_t seed = c.seed.value_or(0);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> speeds(0.6, 1.6);
  const SyntheticMode cycle[] = {SyntheticMode::kStraight, SyntheticMode::kWavy, SyntheticMode::kDeviating};
  Json files = Json::array();
  for (int i = 0; i < a.count; ++i) {
    SyntheticSpec spec;
    spec.mode = a.mode == "mixed" ? cycle[i % 3] : parse_synthetic_mode(a.mode);
    spec.speed = a.speed ? *a.speed : speeds(rng);
    spec.duration = a.duration;
    spec.fps = p.fps;
    spec.seed = seed * 1000003u + static_cast<std::uint64_t>(i);
    spec.validate(p.input_len + p.output_len);
    char name[32];
    std::snprintf(name, sizeof(name), "synthetic_%04d.seq", i);
    write_sequence(generate_synthetic(spec, skeleton), out / name,
                   {std::string(p.name), std::string(to_string(spec.mode)) + " " + fmt(spec.speed, 3) + " m/s"});
    files.push_back((out / name).string());
  }
  m.config = {{"preset", p.name}, {"count", a.count}, {"mode", a.mode}, {"duration", a.duration}, {"fps", p.fps}};
  if (a.speed) m.config["speed"] = *a.speed;
  m.outputs["sequences"] = files;
  std::cout << "wrote " << a.count << " sequences to " << out.string() << '\n';
  return 0;
}

struct PerturbArgs {
  std::string data;
  double translation = 10.0;
  double yaw = std::numbers::pi;
};

int cmd_perturb(const Common& c, const PerturbArgs& a, Manifest& m) {
  if (!(a.translation >= 0.0) || !(a.yaw >= 0.0)) throw InvalidArgument("perturbation ranges must be >= 0");
  const auto files = list_sequence_files(a.data);
  if (files.empty()) throw InputError("no sequences found in '" + a.data + "'");
  const fs::path out(c.out);
  if (fs::exists(out) && fs::equivalent(out, a.data)) throw InvalidArgument("--out must differ from --data");
  ensure_dir(out);
  const std::uint64_t seed = c.seed.value_or(0);
  Json transforms = Json::array();
  for (std::size_t i = 0; i < files.size(); ++i) {
    SequenceFileInfo info;
    const MotionSequence s = read_sequence(files[i], &info);
    const RigidPerturbation p = apply_random_rigid(s, a.translation, a.yaw, seed + i);
    write_sequence(p.sequence, out / files[i].filename(), info);
    const Vec3& t = p.transform.translation;
    transforms.push_back({{"file", files[i].filename().string()}, {"yaw", p.transform.yaw}, {"translation", {t.x(), t.y(), t.z()}}});
  }
  m.config = {{"translation_range", a.translation}, {"yaw_range", a.yaw}};
  m.inputs["data"] = a.data;
  m.outputs["sequences"] = out.string();
  m.outputs["transforms"] = transforms;
  std::cout << "perturbed " << files.size() << " sequences into " << out.string() << '\n';
  return 0;
}

struct TrainArgs {
  std::string data, val, resume;
  std::optional<int> epochs;
};

int cmd_train(const Common& c, const TrainArgs& a, Manifest& m) {
  Resolved r = resolve(c, a.epochs);
  Json data_files = Json::array();
  const auto seqs = load_sequences(a.data, &data_files);
  r.model.num_joints = seqs.front().num_joints();
  r.model.validate();
  r.train.validate();
  const fs::path out(c.out);
  ensure_dir(out);

  std::optional<Model> model;
  int start_epoch = 0;
  std::optional<Checkpoint> resume;
  if (!a.resume.empty()) {
    resume = read_checkpoint(a.resume);
    model.emplace(model_from_checkpoint(*resume));
    require_skeleton(model->skeleton(), seqs.front().skeleton(), "training data");
    if (resume->extra.contains("train")) {
      const int epochs = r.train.max_epochs;
      r.train = train_config_from_json(resume->extra.at("train"));
      if (a.epochs) r.train.max_epochs = epochs;
    }
    r.model = model->config();
    start_epoch = resume->extra.value("epoch", 0);
    if (start_epoch >= r.train.max_epochs) {
      throw InvalidArgument("checkpoint already completed " + std::to_string(start_epoch) + " of " +
                            std::to_string(r.train.max_epochs) + " epochs");
    }
  } else {
    model.emplace(seqs.front().skeleton(), r.model);
  }
  AdamW opt(model->parameters(), AdamWHyper{r.train.learning_rate, r.train.weight_decay});
  if (resume) restore_optimizer(*resume, *model, opt);

  const auto windows = windows_of(seqs, r.model.horizon(), r.train.window_stride);
  TrainHooks hooks;
  hooks.start_epoch = start_epoch;
  if (!a.val.empty()) {
    const auto val = load_sequences(a.val);
    require_skeleton(model->skeleton(), val.front().skeleton(), "validation data");
    hooks.validation = windows_of(val, r.model.horizon(), 1);
  }

  m.seed = r.train.seed;
  m.config = {{"preset", preset_of(c).name}, {"model", to_json(r.model)}, {"train", to_json(r.train)},
              {"count_params", count_params(r.model)}, {"windows", windows.size()}};
  m.inputs["data"] = data_files;
  if (!a.val.empty()) m.inputs["validation"] = a.val;
  if (!a.resume.empty()) m.inputs["resume"] = a.resume;
  const fs::path last = out / "checkpoint_last.ckpt";
  const fs::path best = out / "checkpoint_best.ckpt";
  const fs::path log_path = out / "train_log.jsonl";
  m.outputs = {{"checkpoint_last", last.string()}, {"checkpoint_best", best.string()}, {"log", log_path.string()}};

  std::ofstream log(log_path, resume ? std::ios::app : std::ios::trunc);
  if (!log) throw InputError("cannot write '" + log_path.string() + "'");
  hooks.on_epoch = [&](const EpochRecord& rec, const Model& mdl, const AdamW& o, bool is_best) {
    const Json extra{{"epoch", rec.epoch}, {"train", to_json(r.train)}};
    save_checkpoint(last, mdl, &o, extra);
    if (is_best) save_checkpoint(best, mdl, nullptr, extra);
    EpochRecord shown = rec;
    shown.checkpoint = last.string();
    log << to_json(shown).dump() << '\n' << std::flush;
    std::cout << "epoch " << rec.epoch << "/" << r.train.max_epochs << "  loss " << fmt(rec.train_loss, 6);
    if (rec.validation) std::cout << "  val ADE_Tr " << fmt(rec.validation->ade_traj);
    std::cout << '\n';
    return last.string();
  };
  const TrainLog result = train(*model, opt, windows, r.train, hooks);
  if (!result.epochs.empty()) m.config["final_train_loss"] = result.epochs.back().train_loss;
  return 0;
}

struct PredictArgs {
  std::string checkpoint, input, output;
};

int cmd_predict(const Common& c, const PredictArgs& a, Manifest& m) {
  const Model model = load_model(a.checkpoint, c);
  SequenceFileInfo info;
  const MotionSequence s = read_sequence(a.input, &info);
  require_skeleton(model.skeleton(), s.skeleton(), "input");
  const int t1 = model.config().input_len;
  if (s.num_frames() < t1) {
    throw SequenceTooShort("input has " + std::to_string(s.num_frames()) + " frames, the model needs " +
                           std::to_string(t1));
  }
  const Prediction p = model.predict(s.slice(s.num_frames() - t1, t1));
  fs::path output = a.output.empty() ? fs::path(c.out) / "prediction.seq" : fs::path(a.output);
  if (output.has_parent_path()) ensure_dir(output.parent_path());
  write_sequence(p.global, output, {info.preset, "prediction from " + fs::path(a.input).filename().string()});
  m.config = {{"model", to_json(model.config())}};
  m.inputs = {{"checkpoint", a.checkpoint}, {"sequence", a.input}};
  m.outputs = {{"prediction", output.string()}, {"transform", to_json(p.params)}};
  std::cout << "wrote " << p.global.num_frames() << " predicted frames to " << output.string() << '\n';
  return 0;
}

struct EvalArgs {
  std::string checkpoint, data, report;
  int stride = 1;
  int bench_repeats = 0;
};

int cmd_eval(const Common& c, const EvalArgs& a, Manifest& m) {
  const Model model = load_model(a.checkpoint, c);
  Json files = Json::array();
  const auto seqs = load_sequences(a.data, &files);
  require_skeleton(model.skeleton(), seqs.front().skeleton(), "test data");
  if (a.stride < 1) throw InvalidArgument("--stride must be positive");
  const auto windows = windows_of(seqs, model.config().horizon(), a.stride);
  EvalReport ours = evaluate(model, windows, c.threads, 0);
  if (a.bench_repeats > 0) {
    const InferenceEngine<float> engine(model);
    ours.runtime_ms = bench_forward(engine, windows.front().input, a.bench_repeats).median_ms;
  }
  const int t2 = model.config().output_len;
  const EvalReport zv = evaluate_windows(
      windows, [t2](const Window& w) { return zero_velocity_prediction(w.input.frames(), t2); }, c.threads);
  print_table({{"posetraj", ours}, {"zero-velocity", zv}});
  if (a.bench_repeats > 0) std::cout << "median latency " << fmt(ours.runtime_ms, 3) << " ms\n";

  const fs::path out(c.out);
  ensure_dir(out);
  const fs::path report = a.report.empty() ? out / "eval_report.json" : fs::path(a.report);
  write_json_file(report, Json{{"model", to_json(ours)}, {"zero_velocity", to_json(zv)},
                               {"checkpoint", a.checkpoint}, {"data", a.data}});
  m.config = {{"model", to_json(model.config())}, {"stride", a.stride}, {"threads", c.threads}};
  m.inputs = {{"checkpoint", a.checkpoint}, {"data", files}};
  m.outputs = {{"report", report.string()}};
  return 0;
}

struct AblateArgs {
  std::string checkpoint, data, report;
  double translation = 10.0;
  double yaw = std::numbers::pi;
  int stride = 1;
};

int cmd_ablate(const Common& c, const AblateArgs& a, Manifest& m) {
  const Model model = load_model(a.checkpoint, c);
  const auto seqs = load_sequences(a.data);
  require_skeleton(model.skeleton(), seqs.front().skeleton(), "test data");
  if (a.stride < 1) throw InvalidArgument("--stride must be positive");
  const std::uint64_t seed = c.seed.value_or(0);
  struct Mode {
    const char* name;
    double translation, yaw;
  };
  const Mode modes[] = {{"original", 0.0, 0.0},
                        {"translate", a.translation, 0.0},
                        {"rotate", 0.0, a.yaw},
                        {"translate+rotate", a.translation, a.yaw}};
  std::vector<std::pair<std::string, EvalReport>> rows;
  Json report = Json::array();
  for (const Mode& mode : modes) {
    std::vector<MotionSequence> moved;
    for (std::size_t i = 0; i < seqs.size(); ++i) {
      moved.push_back(apply_random_rigid(seqs[i], mode.translation, mode.yaw, seed + i).sequence);
    }
    const EvalReport r = evaluate(model, windows_of(moved, model.config().horizon(), a.stride), c.threads, 0);
    rows.emplace_back(mode.name, r);
    Json row = to_json(r);
    row["mode"] = mode.name;
    report.push_back(row);
  }
  std::cout << "transform " << (model.config().use_transform ? "on" : "off") << '\n';
  print_table(rows);

  const fs::path out(c.out);
  ensure_dir(out);
  const fs::path path = a.report.empty() ? out / "ablate_report.json" : fs::path(a.report);
  write_json_file(path, Json{{"rows", report}, {"use_transform", model.config().use_transform},
                             {"checkpoint", a.checkpoint}, {"data", a.data}});
  m.config = {{"model", to_json(model.config())}, {"translation_range", a.translation}, {"yaw_range", a.yaw},
              {"stride", a.stride}};
  m.inputs = {{"checkpoint", a.checkpoint}, {"data", a.data}};
  m.outputs = {{"report", path.string()}};
  return 0;
}

struct BenchArgs {
  std::string checkpoint, engine = "float";
  int repeats = 10;
  int warmup = 3;
};

int cmd_bench(const Common& c, const BenchArgs& a, Manifest& m) {
  const Model model = load_model(a.checkpoint, c);
  const ModelConfig& cfg = model.config();
  Matrix frames;
  if (model.skeleton() == skeletons::h36m17()) {
    SyntheticSpec spec;
    spec.seed = c.seed.value_or(0);
    spec.duration = static_cast<double>(cfg.input_len + 1) / spec.fps;
    frames = generate_synthetic(spec, model.skeleton_ptr()).frames().topRows(cfg.input_len);
  } else {
    std::mt19937_64 rng(c.seed.value_or(0));
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    frames = Matrix::NullaryExpr(cfg.input_len, 3 * cfg.num_joints, [&] { return u(rng); });
  }
  const MotionSequence input(model.skeleton_ptr(), frames, 10.0);
  BenchStats s;
  if (a.engine == "float") {
    s = bench_forward(InferenceEngine<float>(model), input, a.repeats, a.warmup);
  } else if (a.engine == "double") {
    s = bench_forward(InferenceEngine<double>(model), input, a.repeats, a.warmup);
  } else {
    s = bench_forward(model, input, a.repeats, a.warmup);
  }
  const std::size_t params = count_params(cfg);
  std::cout << "params      " << params << '\n'
            << "engine      " << a.engine << '\n'
            << "samples     " << s.samples_ms.size() << '\n'
            << "median_ms   " << fmt(s.median_ms, 3) << '\n'
            << "p95_ms      " << fmt(s.p95_ms, 3) << '\n';
  const fs::path out(c.out);
  ensure_dir(out);
  const fs::path path = out / "bench_report.json";
  write_json_file(path, Json{{"count_params", params}, {"engine", a.engine}, {"median_ms", s.median_ms},
                             {"p95_ms", s.p95_ms}, {"samples_ms", s.samples_ms}, {"warmup", a.warmup}});
  m.config = {{"model", to_json(cfg)}, {"repeats", a.repeats}, {"warmup", a.warmup}, {"engine", a.engine}};
  m.inputs = {{"checkpoint", a.checkpoint}};
  m.outputs = {{"report", path.string()}};
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"posetraj: 3D pose and trajectory forecasting"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  Common common;
  Manifest manifest;
  for (int i = 0; i < argc; ++i) manifest.argv.emplace_back(argv[i]);

#if POSETRAJ_WITH_CONVERTERS
  ConvertArgs conv;
  auto* convert = app.add_subcommand("convert", "convert a raw joint-position dump into a sequence file");
  add_common(convert, common);
  option(convert, "input", conv.input, "raw CSV/whitespace file")->required()->check(CLI::ExistingFile);
  option(convert, "output", conv.output, "sequence file to write")->required();
  option(convert, "layout", conv.layout, "h36m32, h36m17, cmu31 or generic")
      ->check(CLI::IsMember({"h36m32", "h36m17", "cmu31", "generic"}));
  option(convert, "units", conv.units, "source units: m, cm or mm");
  option(convert, "up-axis", conv.up_axis, "source up axis: y or z");
  option(convert, "source-fps", conv.source_fps, "source frame rate (defaults per layout)");
  option(convert, "target-fps", conv.target_fps, "output frame rate (defaults to the preset's)");
  option(convert, "skeleton", conv.skeleton_path, "skeleton JSON for the generic layout");
#endif

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "write synthetic walking sequences");
  add_common(generate, common);
  option(generate, "count", gen.count, "number of sequences");
  option(generate, "mode", gen.mode, "straight, wavy, deviating, run or mixed")
      ->check(CLI::IsMember({"straight", "wavy", "deviating", "run", "mixed"}));
  option(generate, "speed", gen.speed, "walking speed in m/s (random in [0.6, 1.6] if unset)");
  option(generate, "duration", gen.duration, "seconds per sequence");

  PerturbArgs pert;
  auto* perturb = app.add_subcommand("perturb", "apply one random rigid motion to each sequence");
  add_common(perturb, common);
  option(perturb, "data", pert.data, "directory of sequence files")->required();
  option(perturb, "translation", pert.translation, "planar translation range in m");
  option(perturb, "yaw", pert.yaw, "yaw range in radians");

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "train a model");
  add_common(train_cmd, common);
  option(train_cmd, "data", tr.data, "directory of training sequences")->required();
  option(train_cmd, "val", tr.val, "directory of validation sequences");
  option(train_cmd, "epochs", tr.epochs, "override the preset's epoch count");
  option(train_cmd, "resume", tr.resume, "continue from a checkpoint_last.ckpt");

  PredictArgs pr;
  auto* predict = app.add_subcommand("predict", "forecast from the last observed frames of a sequence");
  add_common(predict, common);
  option(predict, "checkpoint", pr.checkpoint, "model checkpoint")->required();
  option(predict, "input", pr.input, "observed sequence file")->required();
  option(predict, "output", pr.output, "where to write the forecast (default <out>/prediction.seq)");

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "report ADE/FDE on a test set");
  add_common(eval, common);
  option(eval, "checkpoint", ev.checkpoint, "model checkpoint")->required();
  option(eval, "data", ev.data, "directory of test sequences")->required();
  option(eval, "report", ev.report, "JSON report path (default <out>/eval_report.json)");
  option(eval, "stride", ev.stride, "window stride in frames");
  option(eval, "bench-repeats", ev.bench_repeats, "also time this many forward passes");

  AblateArgs ab;
  auto* ablate = app.add_subcommand("ablate", "evaluate on rigidly perturbed copies of a test set");
  add_common(ablate, common);
  option(ablate, "checkpoint", ab.checkpoint, "model checkpoint")->required();
  option(ablate, "data", ab.data, "directory of test sequences")->required();
  option(ablate, "report", ab.report, "JSON report path (default <out>/ablate_report.json)");
  option(ablate, "translation", ab.translation, "planar translation range in m");
  option(ablate, "yaw", ab.yaw, "yaw range in radians");
  option(ablate, "stride", ab.stride, "window stride in frames");

  BenchArgs be;
  auto* bench = app.add_subcommand("bench", "time single forward passes");
  add_common(bench, common);
  option(bench, "checkpoint", be.checkpoint, "model checkpoint")->required();
  option(bench, "repeats", be.repeats, "timed passes")->check(CLI::PositiveNumber);
  option(bench, "warmup", be.warmup, "untimed passes first (>= 3)");
  option(bench, "engine", be.engine, "float, double or autodiff")
      ->check(CLI::IsMember({"float", "double", "autodiff"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  // CLI11 quietly drops environment values that fail validation.
  for (const CLI::Option* opt : app.get_subcommands().front()->get_options()) {
    const std::string& env = opt->get_envname();
    if (!env.empty() && std::getenv(env.c_str()) && opt->count() == 0) {
      std::cerr << "error: invalid value in " << env << "='" << std::getenv(env.c_str()) << "'\n";
      return 2;
    }
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    manifest.command = sub->get_name();
    manifest.seed = common.seed.value_or(0);
    int code = 0;
#if POSETRAJ_WITH_CONVERTERS
    if (sub == convert) code = cmd_convert(common, conv, manifest);
#endif
    if (sub == generate) code = cmd_generate(common, gen, manifest);
    if (sub == perturb) code = cmd_perturb(common, pert, manifest);
    if (sub == train_cmd) code = cmd_train(common, tr, manifest);
    if (sub == predict) code = cmd_predict(common, pr, manifest);
    if (sub == eval) code = cmd_eval(common, ev, manifest);
    if (sub == ablate) code = cmd_ablate(common, ab, manifest);
    if (sub == bench) code = cmd_bench(common, be, manifest);
#if POSETRAJ_WITH_CONVERTERS
    if (sub == convert) {
      const fs::path dir = fs::path(conv.output).parent_path();
      manifest.write(dir.empty() ? fs::path(".") : dir);
      return code;
    }
#endif
    manifest.write(common.out);
    return code;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 1;
  }
}
