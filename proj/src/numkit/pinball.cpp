#include "ivccp/numkit/pinball.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ivccp/error.hpp"

namespace ivccp {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPivotTol = 1e-11;
constexpr double kOptTol = 1e-9;
constexpr long kRefactorEvery = 50;
constexpr long kDegenerateBeforeBland = 50;

}  // namespace

PinballLp::PinballLp(Matrix phi, double level_q)
    : phi_(std::move(phi)), q_(level_q), n_(phi_.rows()), d_(phi_.cols()) {
    if (!(level_q > 0.0 && level_q < 1.0)) throw InputError("pinball: level_q must lie in (0, 1)");
    if (n_ == 0 || d_ == 0) throw InputError("pinball: empty design");
    if (!phi_.allFinite()) throw InputError("pinball: non-finite design entry");
    art_sign_.assign(static_cast<std::size_t>(d_), 1.0);
    x_ = Vector::Zero(n_ + d_);
    status_.assign(static_cast<std::size_t>(n_ + d_), Status::AtLower);
}

void PinballLp::set_start_hint(std::vector<bool> at_upper) {
    if (static_cast<Eigen::Index>(at_upper.size()) != n_) throw InputError("pinball: hint size mismatch");
    hint_ = std::move(at_upper);
}

double PinballLp::lower(Eigen::Index j) const { return j < n_ ? q_ - 1.0 : 0.0; }

double PinballLp::upper(Eigen::Index j) const {
    if (j < n_) return q_;
    return artificials_fixed_ ? 0.0 : kInf;
}

Vector PinballLp::column(Eigen::Index j) const {
    if (j < n_) return phi_.row(j).transpose();
    Vector e = Vector::Zero(d_);
    e(j - n_) = art_sign_[static_cast<std::size_t>(j - n_)];
    return e;
}

void PinballLp::refactor() {
    Eigen::MatrixXd B(d_, d_);
    for (Eigen::Index i = 0; i < d_; ++i) B.col(i) = column(basis_[static_cast<std::size_t>(i)]);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(B);
    if (!lu.isInvertible()) throw ConvergenceError("pinball: singular basis during refactorization");
    binv_ = lu.inverse();
    pivots_since_refactor_ = 0;
}

void PinballLp::recompute_basic_values() {
    Vector rhs = Vector::Zero(d_);
    for (Eigen::Index j = 0; j < n_ + d_; ++j) {
        if (status_[static_cast<std::size_t>(j)] == Status::Basic) continue;
        if (x_(j) != 0.0) rhs -= column(j) * x_(j);
    }
    Vector xb = binv_ * rhs;
    for (Eigen::Index i = 0; i < d_; ++i) x_(basis_[static_cast<std::size_t>(i)]) = xb(i);
}

void PinballLp::cold_start() {
    artificials_fixed_ = false;
    Vector r = Vector::Zero(d_);
    for (Eigen::Index j = 0; j < n_; ++j) {
        const bool up = !hint_.empty() && hint_[static_cast<std::size_t>(j)];
        status_[static_cast<std::size_t>(j)] = up ? Status::AtUpper : Status::AtLower;
        x_(j) = up ? q_ : q_ - 1.0;
        r += phi_.row(j).transpose() * x_(j);
    }
    basis_.resize(static_cast<std::size_t>(d_));
    binv_ = Matrix::Zero(d_, d_);
    for (Eigen::Index k = 0; k < d_; ++k) {
        const double sign = r(k) > 0.0 ? -1.0 : 1.0;
        art_sign_[static_cast<std::size_t>(k)] = sign;
        x_(n_ + k) = std::abs(r(k));
        status_[static_cast<std::size_t>(n_ + k)] = Status::Basic;
        basis_[static_cast<std::size_t>(k)] = n_ + k;
        binv_(k, k) = sign;
    }
    pivots_since_refactor_ = 0;

    Vector cost = Vector::Zero(n_ + d_);
    cost.tail(d_).setConstant(-1.0);
    last_iterations_ = run_simplex(cost, 50 * (n_ + d_), true);

    const double scale = 1.0 + phi_.cwiseAbs().maxCoeff();
    if (x_.tail(d_).sum() > 1e-7 * scale * static_cast<double>(n_))
        throw ConvergenceError("pinball: phase one left a positive infeasibility");

    artificials_fixed_ = true;
    for (Eigen::Index k = 0; k < d_; ++k) {
        auto& st = status_[static_cast<std::size_t>(n_ + k)];
        if (st != Status::Basic) {
            st = Status::AtLower;
            x_(n_ + k) = 0.0;
        }
    }
    refactor();
    recompute_basic_values();
    have_basis_ = true;
}

long PinballLp::run_simplex(const Vector& cost, long max_iter, bool phase_one) {
    const double opt_tol = kOptTol * (1.0 + cost.cwiseAbs().maxCoeff());
    bool bland = false;
    long degenerate_run = 0;
    long iter = 0;
    Vector cb(d_);

    for (;; ++iter) {
        for (Eigen::Index i = 0; i < d_; ++i) cb(i) = cost(basis_[static_cast<std::size_t>(i)]);
        y_ = binv_.transpose() * cb;

        // pricing
        Eigen::Index enter = -1;
        double enter_rc = 0.0;
        double best = 0.0;
        for (Eigen::Index j = 0; j < n_ + d_; ++j) {
            const Status st = status_[static_cast<std::size_t>(j)];
            if (st == Status::Basic) continue;
            if (lower(j) == upper(j)) continue;
            const double rc = j < n_ ? cost(j) - phi_.row(j).dot(y_)
                                     : cost(j) - art_sign_[static_cast<std::size_t>(j - n_)] * y_(j - n_);
            const bool eligible = (st == Status::AtLower && rc > opt_tol) || (st == Status::AtUpper && rc < -opt_tol);
            if (!eligible) continue;
            if (bland) {
                enter = j;
                enter_rc = rc;
                break;
            }
            if (std::abs(rc) > best) {
                best = std::abs(rc);
                enter = j;
                enter_rc = rc;
            }
        }
        if (enter < 0) return iter;
        if (iter >= max_iter)
            throw ConvergenceError("pinball: simplex exceeded iteration cap of " + std::to_string(max_iter) +
                                   (phase_one ? " (phase one)" : ""));

        const double dir = enter_rc > 0.0 ? 1.0 : -1.0;
        const Vector w = binv_ * column(enter);

        // ratio test; leave = -1 means the entering variable flips bounds
        double t = upper(enter) - lower(enter);
        Eigen::Index leave = -1;
        bool leave_to_upper = false;
        for (Eigen::Index i = 0; i < d_; ++i) {
            const double rate = -dir * w(i);
            const Eigen::Index b = basis_[static_cast<std::size_t>(i)];
            double limit;
            bool to_upper;
            if (rate < -kPivotTol) {
                limit = (x_(b) - lower(b)) / -rate;
                to_upper = false;
            } else if (rate > kPivotTol && std::isfinite(upper(b))) {
                limit = (upper(b) - x_(b)) / rate;
                to_upper = true;
            } else {
                continue;
            }
            limit = std::max(limit, 0.0);
            bool take = limit < t;
            if (!take && limit == t && leave >= 0) {
                const Eigen::Index cur = basis_[static_cast<std::size_t>(leave)];
                take = bland ? b < cur : std::abs(w(i)) > std::abs(w(leave));
            }
            if (take) {
                t = limit;
                leave = i;
                leave_to_upper = to_upper;
            }
        }
        if (!std::isfinite(t)) throw ConvergenceError("pinball: unbounded direction");

        if (t > 0.0) {
            x_(enter) += dir * t;
            for (Eigen::Index i = 0; i < d_; ++i) x_(basis_[static_cast<std::size_t>(i)]) -= dir * t * w(i);
            degenerate_run = 0;
        } else if (++degenerate_run > kDegenerateBeforeBland) {
            bland = true;
        }

        if (leave < 0) {
            auto& st = status_[static_cast<std::size_t>(enter)];
            st = st == Status::AtLower ? Status::AtUpper : Status::AtLower;
            x_(enter) = st == Status::AtUpper ? upper(enter) : lower(enter);
            continue;
        }

        const Eigen::Index out = basis_[static_cast<std::size_t>(leave)];
        status_[static_cast<std::size_t>(out)] = leave_to_upper ? Status::AtUpper : Status::AtLower;
        x_(out) = leave_to_upper ? upper(out) : lower(out);
        status_[static_cast<std::size_t>(enter)] = Status::Basic;
        basis_[static_cast<std::size_t>(leave)] = enter;

        const double piv = w(leave);
        binv_.row(leave) /= piv;
        for (Eigen::Index i = 0; i < d_; ++i) {
            if (i == leave || w(i) == 0.0) continue;
            binv_.row(i) -= w(i) * binv_.row(leave);
        }
        if (++pivots_since_refactor_ >= kRefactorEvery) {
            refactor();
            recompute_basic_values();
        }
    }
}

PinballFit PinballLp::extract() const {
    PinballFit fit;
    fit.level_q = q_;
    fit.beta = y_;
    fit.duals = x_.head(n_);
    fit.objective = pinball_objective(phi_, s_, y_, q_);
    fit.iterations = last_iterations_;
    return fit;
}

PinballFit PinballLp::solve(const Vector& s) {
    if (s.size() != n_) throw InputError("pinball: response length does not match design rows");
    if (!s.allFinite()) throw InputError("pinball: non-finite response");
    s_ = s;
    long cold_iters = 0;
    if (!have_basis_) {
        cold_start();
        cold_iters = last_iterations_;
    }
    Vector cost = Vector::Zero(n_ + d_);
    cost.head(n_) = s_;
    last_iterations_ = cold_iters + run_simplex(cost, 50 * (n_ + d_), false);
    refactor();
    recompute_basic_values();
    // multipliers from the fresh factorization
    Vector cb(d_);
    for (Eigen::Index i = 0; i < d_; ++i) cb(i) = cost(basis_[static_cast<std::size_t>(i)]);
    y_ = binv_.transpose() * cb;
    return extract();
}

PinballFit PinballLp::resolve_with(Eigen::Index row, double value) {
    if (row < 0 || row >= n_) throw InputError("pinball: row out of range");
    if (!std::isfinite(value)) throw InputError("pinball: non-finite response");
    Vector s = s_.size() == n_ ? s_ : Vector::Zero(n_);
    s(row) = value;
    return solve(s);
}

double pinball_objective(const Matrix& phi, const Vector& s, const Vector& beta, double level_q) {
    const Vector r = s - phi * beta;
    double total = 0.0;
    for (Eigen::Index i = 0; i < r.size(); ++i)
        total += r(i) > 0.0 ? level_q * r(i) : (level_q - 1.0) * r(i);
    return total / static_cast<double>(r.size());
}

PinballFit fit_pinball_regression(const Matrix& phi, const Vector& s, double level_q) {
    if (phi.rows() == 0) throw InputError("pinball: no rows");
    if (!phi.allFinite() || !s.allFinite()) throw InputError("pinball: non-finite input");
    if ((phi.col(0).array() != 1.0).any()) throw InputError("pinball: first design column must be all ones");
    PinballLp lp(phi, level_q);
    return lp.solve(s);
}

}  // namespace ivccp
