#pragma once

#include <Eigen/Dense>

namespace sgdct {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Flat real vector holding drift (theta) or diffusion (nu) parameters.
using ParamVector = Vec;

inline bool all_finite(const Eigen::Ref<const Vec>& v) { return v.allFinite(); }

}  // namespace sgdct
