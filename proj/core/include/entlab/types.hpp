#pragma once

#include <Eigen/Core>

namespace entlab {

// Spatial dimension cap for anything evaluated pointwise (potentials, bridges,
// quadrature). Fixed-capacity Eigen types keep the hot loops allocation free.
inline constexpr int kMaxDim = 3;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor,
                          kMaxDim, kMaxDim>;

}  // namespace entlab
