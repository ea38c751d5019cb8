#pragma once

#include <Eigen/Dense>

namespace vtc {

/// Largest supported state, noise or control dimension. Small vectors and
/// matrices live on the stack so that per-path kernels never allocate.
inline constexpr int kMaxDim = 4;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim, kMaxDim>;

}  // namespace vtc
