#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "posetraj/error.hpp"
#include "posetraj/presets.hpp"
#include "posetraj/skeleton.hpp"
#include "posetraj/transform.hpp"
#include "posetraj/types.hpp"

namespace posetraj {

// ---------------------------------------------------------------------------
// Sequence files
//
//   format_version=1
//   joints=hip,rhip,...          comma-separated, in column order
//   edges=0-1 1-2 ...            bones as index pairs
//   root=0
//   fps=10
//   units=m
//   preset=h36m                  optional; fps must then match the preset
//   name=...                     optional free text
//   frames=25                    optional; must match the row count
//   ---
//   x0 y0 z0 x1 y1 z1 ...        one row of 3N numbers per frame
//
// Lines starting with '#' and blank lines are ignored in the header.
// ---------------------------------------------------------------------------

inline constexpr int kSequenceFormatVersion = 1;
inline constexpr std::string_view kSequenceExtension = ".seq";

struct SequenceFileInfo {
  std::string preset;
  std::string name;
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto pos = s.find(sep, start);
    const auto end = pos == std::string_view::npos ? s.size() : pos;
    std::string part = trim(s.substr(start, end - start));
    if (!part.empty()) out.push_back(std::move(part));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

template <class T>
T parse_number(std::string_view token, const std::string& what) {
  T value{};
  const auto res = std::from_chars(token.data(), token.data() + token.size(), value);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size()) {
    throw MalformedHeader("cannot parse " + what + " from '" + std::string(token) + "'");
  }
  return value;
}

}  // namespace detail

inline void write_sequence(std::ostream& os, const MotionSequence& seq, const SequenceFileInfo& info = {}) {
  const Skeleton& sk = seq.skeleton();
  os << "format_version=" << kSequenceFormatVersion << '\n';
  os << "joints=";
  for (int j = 0; j < sk.num_joints(); ++j) os << (j ? "," : "") << sk.joint_names()[j];
  os << "\nedges=";
  for (std::size_t i = 0; i < sk.edges().size(); ++i) {
    os << (i ? " " : "") << sk.edges()[i].a << '-' << sk.edges()[i].b;
  }
  os << "\nroot=" << sk.root_index() << '\n';
  os << "fps=" << detail::format_double(seq.fps()) << '\n';
  os << "units=m\n";
  if (!info.preset.empty()) os << "preset=" << info.preset << '\n';
  if (!info.name.empty()) os << "name=" << info.name << '\n';
  os << "frames=" << seq.num_frames() << '\n';
  os << "---\n";
  const Matrix& f = seq.frames();
  for (Eigen::Index t = 0; t < f.rows(); ++t) {
    for (Eigen::Index c = 0; c < f.cols(); ++c) os << (c ? " " : "") << detail::format_double(f(t, c));
    os << '\n';
  }
}

inline void write_sequence(const MotionSequence& seq, const std::filesystem::path& path,
                           const SequenceFileInfo& info = {}) {
  std::ofstream os(path);
  if (!os) throw InputError("cannot open '" + path.string() + "' for writing");
  write_sequence(os, seq, info);
  if (!os) throw Error("failed writing '" + path.string() + "'");
}

inline MotionSequence read_sequence(std::istream& is, SequenceFileInfo* info_out = nullptr) {
  std::map<std::string, std::string> header;
  std::string line;
  bool separator = false;
  while (std::getline(is, line)) {
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t == "---") {
      separator = true;
      break;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw MalformedHeader("header line without '=': '" + t + "'");
    const std::string key = detail::trim(std::string_view(t).substr(0, eq));
    static const std::vector<std::string> known{"format_version", "joints", "edges", "root", "fps",
                                                "units",          "preset", "name",  "frames"};
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw MalformedHeader("unknown header key '" + key + "'");
    }
    if (!header.emplace(key, detail::trim(std::string_view(t).substr(eq + 1))).second) {
      throw MalformedHeader("duplicate header key '" + key + "'");
    }
  }
  if (!separator) throw MalformedHeader("missing '---' separator after header");
  for (const char* key : {"format_version", "joints", "edges", "root", "fps", "units"}) {
    if (!header.count(key)) throw MalformedHeader(std::string("missing header key '") + key + "'");
  }
  const int version = detail::parse_number<int>(header["format_version"], "format_version");
  if (version != kSequenceFormatVersion) {
    throw MalformedHeader("unsupported format_version " + std::to_string(version));
  }
  if (header["units"] != "m") {
    throw UnsupportedUnits("units must be 'm', got '" + header["units"] + "'");
  }
  std::vector<std::string> names = detail::split(header["joints"], ',');
  std::vector<Edge> edges;
  for (const std::string& tok : detail::split(header["edges"], ' ')) {
    const auto dash = tok.find('-');
    if (dash == std::string::npos) throw MalformedHeader("edge '" + tok + "' is not of the form a-b");
    edges.push_back({detail::parse_number<int>(std::string_view(tok).substr(0, dash), "edge"),
                     detail::parse_number<int>(std::string_view(tok).substr(dash + 1), "edge")});
  }
  const int root = detail::parse_number<int>(header["root"], "root");
  const double fps = detail::parse_number<double>(header["fps"], "fps");
  if (!(fps > 0.0) || !std::isfinite(fps)) throw MalformedHeader("fps must be positive");
  SequenceFileInfo info;
  if (header.count("preset")) {
    info.preset = header["preset"];
    const DatasetPreset& p = find_preset(info.preset);
    if (p.fps != fps) {
      throw MalformedHeader("fps " + header["fps"] + " does not match preset '" + info.preset + "' (" +
                            detail::format_double(p.fps) + ")");
    }
  }
  if (header.count("name")) info.name = header["name"];
  SkeletonPtr skeleton;
  try {
    skeleton = std::make_shared<const Skeleton>(std::move(names), std::move(edges), root);
  } catch (const InvalidSkeleton& e) {
    throw MalformedHeader(std::string("invalid skeleton descriptor: ") + e.what());
  }

  const int width = 3 * skeleton->num_joints();
  std::vector<double> values;
  int rows = 0;
  while (std::getline(is, line)) {
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    int count = 0;
    std::size_t pos = 0;
    while (pos < t.size()) {
      while (pos < t.size() && (t[pos] == ' ' || t[pos] == '\t')) ++pos;
      if (pos >= t.size()) break;
      std::size_t end = pos;
      while (end < t.size() && t[end] != ' ' && t[end] != '\t') ++end;
      double v = 0.0;
      const auto res = std::from_chars(t.data() + pos, t.data() + end, v);
      if (res.ec != std::errc() || res.ptr != t.data() + end) {
        throw FormatError("row " + std::to_string(rows + 1) + ": cannot parse '" + t.substr(pos, end - pos) + "'");
      }
      if (!std::isfinite(v)) {
        throw NonFiniteValue("row " + std::to_string(rows + 1) + " contains a non-finite value");
      }
      values.push_back(v);
      ++count;
      pos = end;
    }
    if (count != width) {
      throw RowLengthError("row " + std::to_string(rows + 1) + " has " + std::to_string(count) +
                           " numbers, expected " + std::to_string(width));
    }
    ++rows;
  }
  if (rows == 0) throw FormatError("sequence file has no frames");
  if (header.count("frames")) {
    const int declared = detail::parse_number<int>(header["frames"], "frames");
    if (declared != rows) {
      throw MalformedHeader("header declares " + std::to_string(declared) + " frames, body has " +
                            std::to_string(rows));
    }
  }
  if (info_out) *info_out = info;
  return MotionSequence(skeleton, Eigen::Map<const Matrix>(values.data(), rows, width), fps);
}

inline MotionSequence read_sequence(const std::filesystem::path& path, SequenceFileInfo* info_out = nullptr) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open '" + path.string() + "'");
  try {
    return read_sequence(is, info_out);
  } catch (const MalformedHeader& e) {
    throw MalformedHeader(path.string() + ": " + e.what());
  } catch (const RowLengthError& e) {
    throw RowLengthError(path.string() + ": " + e.what());
  } catch (const NonFiniteValue& e) {
    throw NonFiniteValue(path.string() + ": " + e.what());
  } catch (const UnsupportedUnits& e) {
    throw UnsupportedUnits(path.string() + ": " + e.what());
  }
}

// Sorted *.seq files in a directory (non-recursive).
inline std::vector<std::filesystem::path> list_sequence_files(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) return files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == kSequenceExtension) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

// ---------------------------------------------------------------------------
// Synthetic navigating actor
// ---------------------------------------------------------------------------

enum class SyntheticMode { kStraight, kWavy, kDeviating, kRun };

inline SyntheticMode parse_synthetic_mode(std::string_view s) {
  if (s == "straight") return SyntheticMode::kStraight;
  if (s == "wavy") return SyntheticMode::kWavy;
  if (s == "deviating") return SyntheticMode::kDeviating;
  if (s == "run") return SyntheticMode::kRun;
  throw InvalidArgument("unknown synthetic mode '" + std::string(s) + "'");
}

inline std::string_view to_string(SyntheticMode m) {
  switch (m) {
    case SyntheticMode::kStraight:
      return "straight";
    case SyntheticMode::kWavy:
      return "wavy";
    case SyntheticMode::kDeviating:
      return "deviating";
    case SyntheticMode::kRun:
      return "run";
  }
  return "straight";
}

struct SyntheticSpec {
  SyntheticMode mode = SyntheticMode::kStraight;
  double speed = 1.0;     // m/s, walking envelope [0.6, 1.6]
  double duration = 4.0;  // s
  double fps = 10.0;
  std::uint64_t seed = 0;
  double actor_height = 1.75;  // m
  double stride = 0.6;         // m of travel per gait cycle
  double wavy_amplitude = 0.3;   // m
  double wavy_wavelength = 2.0;  // m
  double run_factor = 2.0;       // run mode multiplies speed by this
  // Start pose is drawn from the seed unless fixed here.
  std::optional<double> heading;
  std::optional<Vec3> start;

  int num_frames() const { return static_cast<int>(std::floor(duration * fps)) + 1; }

  void validate(int min_frames = 2) const {
    if (!(speed >= 0.6 && speed <= 1.6)) throw InvalidArgument("speed must lie in [0.6, 1.6] m/s");
    if (!(fps > 0.0)) throw InvalidArgument("fps must be positive");
    if (!(duration > static_cast<double>(min_frames) / fps)) {
      throw InvalidArgument("duration too short for a " + std::to_string(min_frames) + "-frame horizon");
    }
    if (!(actor_height > 0.5 && actor_height < 2.5)) throw InvalidArgument("actor height out of range");
    if (!(stride > 0.0) || !(wavy_wavelength > 0.0) || !(run_factor >= 1.0)) {
      throw InvalidArgument("gait parameters must be positive");
    }
  }
};

namespace detail {

struct Limb {
  int joint;
  int parent;
  Vec3 offset;  // rest offset in the body frame (x forward, y left, z up), 1.75 m actor
};

// Rest-pose bones of the 17-joint layout, listed parent-first.
inline const std::vector<Limb>& h36m_rest_limbs() {
  static const std::vector<Limb> limbs{
      {1, 0, {0.0, -0.13, 0.0}},   {2, 1, {0.0, 0.0, -0.45}},   {3, 2, {0.0, 0.0, -0.42}},
      {4, 0, {0.0, 0.13, 0.0}},    {5, 4, {0.0, 0.0, -0.45}},   {6, 5, {0.0, 0.0, -0.42}},
      {7, 0, {0.0, 0.0, 0.25}},    {8, 7, {0.0, 0.0, 0.25}},    {9, 8, {0.02, 0.0, 0.12}},
      {10, 9, {0.03, 0.0, 0.12}},  {11, 8, {0.0, 0.18, 0.0}},   {12, 11, {0.0, 0.0, -0.28}},
      {13, 12, {0.0, 0.0, -0.26}}, {14, 8, {0.0, -0.18, 0.0}},  {15, 14, {0.0, 0.0, -0.28}},
      {16, 15, {0.0, 0.0, -0.26}}};
  return limbs;
}

// Rotation about the body's lateral (y) axis; positive swings a hanging limb forward.
inline Vec3 pitch(const Vec3& v, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * v.x() - s * v.z(), v.y(), s * v.x() + c * v.z()};
}

}  // namespace detail

// Walking/running actor on the 17-joint layout. The root follows the mode's
// planar path at the requested speed; limbs swing with a gait phase locked to
// distance travelled, and every bone keeps its rest length.
inline MotionSequence generate_synthetic(const SyntheticSpec& spec, SkeletonPtr skeleton) {
  spec.validate();
  if (!skeleton || !(*skeleton == skeletons::h36m17())) {
    throw SkeletonMismatch("the synthetic generator drives the 17-joint h36m layout");
  }
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double heading0 = spec.heading ? *spec.heading : (unit(rng) * 2.0 - 1.0) * std::numbers::pi;
  Vec3 start = Vec3::Zero();
  {
    const double sx = (unit(rng) * 2.0 - 1.0) * 2.0;
    const double sy = (unit(rng) * 2.0 - 1.0) * 2.0;
    if (spec.start) {
      start = *spec.start;
    } else {
      start = Vec3(sx, sy, 0.0);
    }
  }
  // deviating: slow constant turn of 0.15..0.4 rad/s in either direction
  const double turn = (unit(rng) < 0.5 ? -1.0 : 1.0) * (0.15 + 0.25 * unit(rng));
  const double phase0 = unit(rng) * 2.0 * std::numbers::pi;

  const bool run = spec.mode == SyntheticMode::kRun;
  const double speed = run ? spec.speed * spec.run_factor : spec.speed;
  const double stride = run ? spec.stride * 1.6 : spec.stride;
  const double scale = spec.actor_height / 1.75;
  const double leg_swing = run ? 0.55 : 0.35;
  const double knee_bend = run ? 0.9 : 0.5;
  const double arm_swing = run ? 0.6 : 0.3;
  const double bob = (run ? 0.04 : 0.02) * scale;
  const double hip_height = 0.87 * scale;

  const int frames = spec.num_frames();
  const int n = skeleton->num_joints();
  Matrix out(frames, 3 * n);
  const double dir_x = std::cos(heading0);
  const double dir_y = std::sin(heading0);
  for (int k = 0; k < frames; ++k) {
    const double t = static_cast<double>(k) / spec.fps;
    double px = 0.0;
    double py = 0.0;
    double heading = heading0;
    double travelled = speed * t;
    switch (spec.mode) {
      case SyntheticMode::kStraight:
      case SyntheticMode::kRun:
        px = travelled * dir_x;
        py = travelled * dir_y;
        break;
      case SyntheticMode::kWavy: {
        const double u = travelled;
        const double w = 2.0 * std::numbers::pi / spec.wavy_wavelength;
        const double lateral = spec.wavy_amplitude * std::sin(w * u);
        px = u * dir_x - lateral * dir_y;
        py = u * dir_y + lateral * dir_x;
        heading = heading0 + std::atan(spec.wavy_amplitude * w * std::cos(w * u));
        break;
      }
      case SyntheticMode::kDeviating: {
        heading = heading0 + turn * t;
        px = speed / turn * (std::sin(heading) - std::sin(heading0));
        py = speed / turn * (std::cos(heading0) - std::cos(heading));
        break;
      }
    }
    const double phase = phase0 + 2.0 * std::numbers::pi * travelled / stride;
    const double swing = std::sin(phase);
    // body-frame pose
    std::vector<Vec3> local(static_cast<std::size_t>(n), Vec3::Zero());
    local[0] = Vec3(0.0, 0.0, hip_height + bob * std::cos(2.0 * phase));
    std::vector<double> angle(static_cast<std::size_t>(n), 0.0);
    // thighs and upper arms swing in antiphase; shins and forearms add flexion
    angle[2] = leg_swing * swing;                                                  // right thigh
    angle[3] = angle[2] - knee_bend * std::max(0.0, std::sin(phase + 0.5 * std::numbers::pi));
    angle[5] = -leg_swing * swing;                                                 // left thigh
    angle[6] = angle[5] - knee_bend * std::max(0.0, std::sin(phase - 0.5 * std::numbers::pi));
    angle[15] = -arm_swing * swing;                                                // right upper arm
    angle[16] = angle[15] + 0.3;
    angle[12] = arm_swing * swing;                                                 // left upper arm
    angle[13] = angle[12] + 0.3;
    for (const detail::Limb& limb : detail::h36m_rest_limbs()) {
      local[static_cast<std::size_t>(limb.joint)] =
          local[static_cast<std::size_t>(limb.parent)] +
          detail::pitch(limb.offset * scale, angle[static_cast<std::size_t>(limb.joint)]);
    }
    const double c = std::cos(heading);
    const double s = std::sin(heading);
    for (int j = 0; j < n; ++j) {
      const Vec3& p = local[static_cast<std::size_t>(j)];
      out(k, 3 * j) = start.x() + px + c * p.x() - s * p.y();
      out(k, 3 * j + 1) = start.y() + py + s * p.x() + c * p.y();
      out(k, 3 * j + 2) = start.z() + p.z();
    }
  }
  return MotionSequence(std::move(skeleton), std::move(out), spec.fps);
}

struct RigidPerturbation {
  MotionSequence sequence;
  RigidTransform transform;
};

// One rigid motion (yaw about the world z axis, then a planar translation)
// drawn uniformly from [-yaw_range, yaw_range] and [-translation_range,
// translation_range]^2 and applied to every frame.
inline RigidTransform random_rigid(double translation_range, double yaw_range, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  RigidTransform g;
  g.yaw = unit(rng) * yaw_range;
  const double tx = unit(rng) * translation_range;
  const double ty = unit(rng) * translation_range;
  g.translation = Vec3(tx, ty, 0.0);
  return g;
}

inline RigidPerturbation apply_random_rigid(const MotionSequence& seq, double translation_range, double yaw_range,
                                            std::uint64_t seed) {
  const RigidTransform g = random_rigid(translation_range, yaw_range, seed);
  return {g.apply(seq), g};
}

}  // namespace posetraj
