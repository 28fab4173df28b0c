#pragma once

#include <Eigen/Dense>

namespace rolf {

// Dynamic-size dense types used across the library.
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = MatrixX<double>;
using Vector = VectorX<double>;

// Arms are zero-based throughout the library and in every output file.
using Arm = int;

}  // namespace rolf
