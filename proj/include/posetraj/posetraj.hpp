#pragma once

#include "posetraj/autodiff.hpp"
#include "posetraj/checkpoint.hpp"
#include "posetraj/convert.hpp"
#include "posetraj/data.hpp"
#include "posetraj/embedding.hpp"
#include "posetraj/error.hpp"
#include "posetraj/inference.hpp"
#include "posetraj/io.hpp"
#include "posetraj/metrics.hpp"
#include "posetraj/model.hpp"
#include "posetraj/params.hpp"
#include "posetraj/presets.hpp"
#include "posetraj/skeleton.hpp"
#include "posetraj/training.hpp"
#include "posetraj/transform.hpp"
#include "posetraj/types.hpp"

namespace posetraj {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace posetraj
