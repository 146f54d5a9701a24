#pragma once

#include <array>
#include <string>
#include <string_view>

#include "posetraj/error.hpp"
#include "posetraj/skeleton.hpp"

namespace posetraj {

// Frame rate, horizon and epoch budget of each benchmark setup.
struct DatasetPreset {
  std::string_view name;
  double fps;
  int input_len;
  int output_len;
  int max_epochs;

  HorizonSpec horizon() const { return {input_len, output_len}; }
};

inline constexpr std::array<DatasetPreset, 3> kPresets{{
    {"h36m", 10.0, 5, 20, 20},
    {"cmu", 10.0, 5, 10, 50},
    {"darko", 16.0, 15, 30, 125},
}};

inline const DatasetPreset& find_preset(std::string_view name) {
  for (const DatasetPreset& p : kPresets) {
    if (p.name == name) return p;
  }
  throw InvalidArgument("unknown preset '" + std::string(name) + "' (expected h36m, cmu or darko)");
}

}  // namespace posetraj
