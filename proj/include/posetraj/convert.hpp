#pragma once

// Converters from locally obtained raw joint-position dumps into sequence
// files. Raw input is a text table, one frame per line, 3 numbers per source
// joint separated by commas or whitespace. Lines starting with '#' are
// skipped, as is a first line that is not numeric (a column header).
//
//   layout   source joints      default rate   notes
//   h36m32   32 (D3_Positions)  50 Hz          keeps the 17-joint subset
//   h36m17   17                 50 Hz          already reduced
//   cmu31    31 (ASF order)     120 Hz         y-up sources need --up y
//   generic  N from a template  as given       skeleton copied from a .seq

#include <array>
#include <charconv>
#include <cmath>
#include <istream>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "posetraj/data.hpp"
#include "posetraj/error.hpp"
#include "posetraj/skeleton.hpp"
#include "posetraj/types.hpp"

namespace posetraj {

enum class RawLayout { kH36m32, kH36m17, kCmu31, kGeneric };

inline RawLayout parse_raw_layout(std::string_view s) {
  if (s == "h36m32") return RawLayout::kH36m32;
  if (s == "h36m17") return RawLayout::kH36m17;
  if (s == "cmu31") return RawLayout::kCmu31;
  if (s == "generic") return RawLayout::kGeneric;
  throw InvalidArgument("unknown raw layout '" + std::string(s) + "'");
}

// Indices of the 17 kept joints within the 32-joint Human3.6M export.
inline constexpr std::array<int, 17> kH36mSubset{0, 1, 2, 3, 6, 7, 8, 12, 13, 14, 15, 17, 18, 19, 25, 26, 27};

inline double unit_scale(std::string_view units) {
  if (units == "m") return 1.0;
  if (units == "cm") return 0.01;
  if (units == "mm") return 0.001;
  if (units == "in") return 0.0254;
  throw InvalidArgument("unknown units '" + std::string(units) + "' (m, cm, mm, in)");
}

struct ConvertOptions {
  RawLayout layout = RawLayout::kH36m32;
  std::optional<double> source_fps;  // defaults per layout
  double target_fps = 10.0;
  std::string units = "mm";
  char up_axis = 'z';                // 'y' sources are rotated to z-up
  SkeletonPtr generic_skeleton;      // required for kGeneric
};

inline double default_source_fps(RawLayout layout) {
  switch (layout) {
    case RawLayout::kH36m32:
    case RawLayout::kH36m17:
      return 50.0;
    case RawLayout::kCmu31:
      return 120.0;
    case RawLayout::kGeneric:
      break;
  }
  throw InvalidArgument("generic layout needs an explicit source fps");
}

namespace detail {

inline std::optional<std::vector<double>> parse_raw_row(const std::string& line) {
  std::vector<double> row;
  std::size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t' || line[pos] == ',' || line[pos] == '\r')) ++pos;
    if (pos >= line.size()) break;
    std::size_t end = pos;
    while (end < line.size() && line[end] != ' ' && line[end] != '\t' && line[end] != ',' && line[end] != '\r') ++end;
    double v = 0.0;
    const auto res = std::from_chars(line.data() + pos, line.data() + end, v);
    if (res.ec != std::errc() || res.ptr != line.data() + end) return std::nullopt;
    row.push_back(v);
    pos = end;
  }
  return row;
}

}  // namespace detail

inline MotionSequence convert_raw(std::istream& is, const ConvertOptions& opt) {
  SkeletonPtr skeleton;
  int source_joints = 0;
  switch (opt.layout) {
    case RawLayout::kH36m32:
      skeleton = std::make_shared<const Skeleton>(skeletons::h36m17());
      source_joints = 32;
      break;
    case RawLayout::kH36m17:
      skeleton = std::make_shared<const Skeleton>(skeletons::h36m17());
      source_joints = 17;
      break;
    case RawLayout::kCmu31:
      skeleton = std::make_shared<const Skeleton>(skeletons::cmu31());
      source_joints = 31;
      break;
    case RawLayout::kGeneric:
      if (!opt.generic_skeleton) throw InvalidArgument("generic layout needs a template skeleton");
      skeleton = opt.generic_skeleton;
      source_joints = skeleton->num_joints();
      break;
  }
  const double src_fps = opt.source_fps ? *opt.source_fps : default_source_fps(opt.layout);
  if (!(src_fps > 0.0) || !(opt.target_fps > 0.0)) throw InvalidArgument("frame rates must be positive");
  const double ratio = src_fps / opt.target_fps;
  const auto step = static_cast<long>(std::lround(ratio));
  if (step < 1 || std::abs(ratio - static_cast<double>(step)) > 1e-9) {
    throw InvalidArgument("source rate " + detail::format_double(src_fps) + " Hz is not an integer multiple of " +
                          detail::format_double(opt.target_fps) + " Hz");
  }
  if (opt.up_axis != 'y' && opt.up_axis != 'z') throw InvalidArgument("up axis must be 'y' or 'z'");
  const double scale = unit_scale(opt.units);
  const int n = skeleton->num_joints();

  std::vector<double> values;
  std::string line;
  long frame = 0;
  long line_no = 0;
  int kept = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto row = detail::parse_raw_row(t);
    if (!row) {
      if (frame == 0 && values.empty()) continue;  // column header
      throw FormatError("raw line " + std::to_string(line_no) + " is not numeric");
    }
    if (static_cast<int>(row->size()) != 3 * source_joints) {
      throw RowLengthError("raw line " + std::to_string(line_no) + " has " + std::to_string(row->size()) +
                           " numbers, expected " + std::to_string(3 * source_joints));
    }
    if (frame++ % step != 0) continue;
    for (int j = 0; j < n; ++j) {
      const int src = opt.layout == RawLayout::kH36m32 ? kH36mSubset[static_cast<std::size_t>(j)] : j;
      const double x = (*row)[static_cast<std::size_t>(3 * src)] * scale;
      const double y = (*row)[static_cast<std::size_t>(3 * src + 1)] * scale;
      const double z = (*row)[static_cast<std::size_t>(3 * src + 2)] * scale;
      if (opt.up_axis == 'y') {
        values.insert(values.end(), {x, -z, y});
      } else {
        values.insert(values.end(), {x, y, z});
      }
    }
    ++kept;
  }
  if (kept == 0) throw FormatError("raw input has no frames");
  return MotionSequence(skeleton, Eigen::Map<const Matrix>(values.data(), kept, 3 * n), opt.target_fps);
}

}  // namespace posetraj
