#pragma once

#include <cstdint>
#include <vector>

#include "ivccp/numkit/matrix.hpp"

namespace ivccp {

/// Solution of  min_beta (1/m) sum_i rho_q(s_i - Phi_i beta)
/// with rho_q(u) = q max(u, 0) + (1 - q) max(-u, 0).
///
/// `duals` are the optimal variables of the dual LP
///     max  s' eta   s.t.  Phi' eta = 0,  q - 1 <= eta_i <= q,
/// so eta_i = q where the residual is positive and q - 1 where it is negative.
struct PinballFit {
    Vector beta;
    Vector duals;
    double level_q = 0.5;
    double objective = 0.0;
    long iterations = 0;
};

/// Bounded-variable revised simplex on the dual of the pinball regression.
///
/// The constraint matrix (the design Phi) is fixed at construction; the cost
/// vector (the responses s) can change between solves. Re-solving after a
/// cost change restarts phase 2 from the previous optimal basis, which stays
/// primal feasible. This is what makes a bisection over a single response
/// coordinate cheap.
///
/// Pricing is Dantzig's rule; after a run of degenerate pivots it switches to
/// Bland's rule, which cannot cycle.
class PinballLp {
public:
    enum class Status : std::uint8_t { AtLower, AtUpper, Basic };

    PinballLp(Matrix phi, double level_q);

    /// Optional starting bound for each dual variable (true = at upper bound).
    /// Only used by the next cold solve.
    void set_start_hint(std::vector<bool> at_upper);

    /// Solves for responses s (size = rows of phi). Warm-starts when a basis
    /// from a previous solve is available.
    PinballFit solve(const Vector& s);

    /// Changes a single response and re-solves from the current basis.
    PinballFit resolve_with(Eigen::Index row, double value);

    const Matrix& design() const noexcept { return phi_; }
    double level_q() const noexcept { return q_; }
    Eigen::Index rows() const noexcept { return phi_.rows(); }
    Eigen::Index cols() const noexcept { return phi_.cols(); }

    /// Status of dual variable i at the last solution.
    Status status(Eigen::Index i) const { return status_[static_cast<std::size_t>(i)]; }

private:
    void cold_start();
    void refactor();
    void recompute_basic_values();
    Vector column(Eigen::Index j) const;
    double lower(Eigen::Index j) const;
    double upper(Eigen::Index j) const;
    long run_simplex(const Vector& cost, long max_iter, bool phase_one);
    PinballFit extract() const;

    Matrix phi_;
    double q_;
    Eigen::Index n_;  // dual variables (= data rows)
    Eigen::Index d_;  // constraints (= features)

    // Artificial columns n_ .. n_+d_-1 are signed unit vectors.
    std::vector<double> art_sign_;
    bool artificials_fixed_ = false;

    Vector s_;
    Vector x_;                        // values of all n_ + d_ variables
    std::vector<Status> status_;      // per variable
    std::vector<Eigen::Index> basis_; // d_ basic variable indices
    Matrix binv_;                     // inverse basis matrix
    Vector y_;                        // simplex multipliers (= primal beta)
    bool have_basis_ = false;
    std::vector<bool> hint_;
    long pivots_since_refactor_ = 0;
    long last_iterations_ = 0;
};

/// One-shot pinball regression. Requires a leading all-ones column and
/// 0 < level_q < 1; throws InputError on non-finite inputs and
/// ConvergenceError past the iteration cap 50 (m + d).
PinballFit fit_pinball_regression(const Matrix& phi, const Vector& s, double level_q);

/// (1/m) sum rho_q(s_i - Phi_i beta).
double pinball_objective(const Matrix& phi, const Vector& s, const Vector& beta, double level_q);

}  // namespace ivccp
