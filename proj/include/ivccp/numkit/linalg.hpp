#pragma once

#include "ivccp/numkit/matrix.hpp"

namespace ivccp {

/// argmin_x ||A x - b||^2 + ridge * ||x||^2.
/// Throws RankError when ridge == 0 and A is column-rank deficient.
Vector solve_least_squares(const Matrix& A, const Vector& b, double ridge);

/// Unit-norm leading eigenvector of the correlation matrix of the columns of Z.
/// Sign is fixed so that the largest-magnitude entry is positive (first index
/// wins ties). Throws DegenerateError on a zero-variance column.
Vector principal_axis(const Matrix& Z);

}  // namespace ivccp
