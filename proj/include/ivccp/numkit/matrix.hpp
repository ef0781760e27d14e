#pragma once

#include <Eigen/Dense>

namespace ivccp {

// Row-major so that a row (one observation) is contiguous.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

}  // namespace ivccp
