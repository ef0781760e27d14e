#pragma once

#include <vector>

#include "ivccp/numkit/matrix.hpp"

namespace ivccp {

/// Observations (y, x, z) stored column-wise by role; row i of x and z
/// belongs to y(i). `latent` is optional per-row diagnostic state
/// (structural value and noise draws) and may have zero columns.
struct DataSet {
    Vector y;
    Matrix x;
    Matrix z;
    Matrix latent;

    Eigen::Index size() const { return y.size(); }
    Eigen::Index dim_x() const { return x.cols(); }
    Eigen::Index dim_z() const { return z.cols(); }

    /// Rows at the given indices, in order.
    DataSet subset(const std::vector<Eigen::Index>& rows) const;

    /// Row-wise concatenation [x, z].
    Matrix joint_xz() const;

    bool operator==(const DataSet& other) const;
};

DataSet concat(const DataSet& a, const DataSet& b);

}  // namespace ivccp
