#pragma once

#include <Eigen/Dense>

namespace afmpc {

// Central scalar type for the whole toolkit; every dense type below is an
// Eigen alias parameterized on it.
using Scalar = double;

using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
using Mat3 = Eigen::Matrix<Scalar, 3, 3>;
using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

}  // namespace afmpc
