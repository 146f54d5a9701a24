#pragma once

#include <Eigen/Core>

namespace posetraj {

// Row-major so that a T x 3N frame block and a (T*N) x 3 joint block share
// the same memory layout (joint-major within a frame).
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;
using Vec3 = Eigen::Vector3d;

}  // namespace posetraj
