#include "ivccp/numkit/linalg.hpp"

#include <cmath>

#include "ivccp/error.hpp"

namespace ivccp {

Vector solve_least_squares(const Matrix& A, const Vector& b, double ridge) {
    if (A.rows() != b.size()) throw InputError("least squares: row count mismatch");
    if (ridge < 0.0) throw InputError("least squares: ridge must be nonnegative");
    if (!A.allFinite() || !b.allFinite()) throw InputError("least squares: non-finite input");
    const Eigen::Index p = A.cols();

    if (ridge == 0.0) {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
        if (qr.rank() < p) throw RankError("least squares: design is column-rank deficient and ridge = 0");
        return qr.solve(b);
    }
    // Stacked system [A; sqrt(ridge) I] x = [b; 0] keeps the conditioning of A
    // instead of squaring it in the normal equations.
    Eigen::MatrixXd stacked(A.rows() + p, p);
    stacked.topRows(A.rows()) = A;
    stacked.bottomRows(p) = std::sqrt(ridge) * Eigen::MatrixXd::Identity(p, p);
    Vector rhs = Vector::Zero(A.rows() + p);
    rhs.head(A.rows()) = b;
    return stacked.householderQr().solve(rhs);
}

Vector principal_axis(const Matrix& Z) {
    if (Z.rows() < 2) throw InputError("principal axis: need at least two rows");
    const Eigen::Index k = Z.cols();
    const double n = static_cast<double>(Z.rows());
    Eigen::MatrixXd centered = Z.rowwise() - Z.colwise().mean();
    Eigen::RowVectorXd sd = (centered.array().square().colwise().sum() / n).sqrt();
    for (Eigen::Index j = 0; j < k; ++j)
        if (!(sd(j) > 0.0)) throw DegenerateError("principal axis: zero-variance column " + std::to_string(j));
    Eigen::MatrixXd standardized = centered.array().rowwise() / sd.array();
    Eigen::MatrixXd corr = standardized.transpose() * standardized / n;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(corr);
    Vector axis = eig.eigenvectors().col(k - 1);  // eigenvalues ascending
    axis.normalize();
    Eigen::Index arg = 0;
    for (Eigen::Index j = 1; j < k; ++j)
        if (std::abs(axis(j)) > std::abs(axis(arg)) + 1e-12) arg = j;
    if (axis(arg) < 0.0) axis = -axis;
    return axis;
}

}  // namespace ivccp
