#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "ivccp/error.hpp"
#include "ivccp/numkit/adam.hpp"
#include "ivccp/numkit/linalg.hpp"
#include "ivccp/numkit/pinball.hpp"
#include "ivccp/numkit/rng.hpp"

using namespace ivccp;

namespace {

Matrix constant_column(Eigen::Index m) { return Matrix::Ones(m, 1); }

Vector seq(int lo, int hi) {
    Vector v(hi - lo + 1);
    for (int i = lo; i <= hi; ++i) v(i - lo) = i;
    return v;
}

// brute-force min of the mean pinball loss over constants on a fine grid
double grid_min_constant(const Vector& s, double q, double& arg_lo, double& arg_hi) {
    const double lo = s.minCoeff() - 1.0, hi = s.maxCoeff() + 1.0;
    double best = std::numeric_limits<double>::infinity();
    std::vector<std::pair<double, double>> vals;
    for (int k = 0; k <= 20000; ++k) {
        const double c = lo + (hi - lo) * k / 20000.0;
        Vector beta(1);
        beta << c;
        const double v = pinball_objective(constant_column(s.size()), s, beta, q);
        vals.emplace_back(c, v);
        best = std::min(best, v);
    }
    arg_lo = std::numeric_limits<double>::infinity();
    arg_hi = -arg_lo;
    for (auto& [c, v] : vals)
        if (v <= best + 1e-12) arg_lo = std::min(arg_lo, c), arg_hi = std::max(arg_hi, c);
    return best;
}

struct RandomLp {
    Matrix phi;
    Vector s;
};

RandomLp random_lp(RngStream& rng, Eigen::Index m, Eigen::Index d) {
    RandomLp lp{Matrix(m, d), Vector(m)};
    for (Eigen::Index i = 0; i < m; ++i) {
        lp.phi(i, 0) = 1.0;
        for (Eigen::Index j = 1; j < d; ++j) lp.phi(i, j) = rng.normal();
        lp.s(i) = std::abs(rng.normal()) * (1.0 + 0.5 * std::abs(lp.phi(i, std::min<Eigen::Index>(1, d - 1))));
    }
    return lp;
}

}  // namespace

TEST_CASE("least squares closed forms") {
    Vector b(2);
    b << 3, 5;
    CHECK((solve_least_squares(Matrix::Identity(2, 2), b, 0.0) - b).norm() < 1e-12);

    Vector b3(3);
    b3 << 1, 2, 3;
    CHECK(solve_least_squares(Matrix::Ones(3, 1), b3, 0.0)(0) == doctest::Approx(2.0).epsilon(1e-12));

    Vector one(1);
    one << 1;
    CHECK(solve_least_squares(Matrix::Identity(1, 1), one, 1.0)(0) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("least squares matches the ridge normal equations") {
    RngStream rng(3, 0);
    Matrix A(12, 4);
    Vector b(12);
    for (Eigen::Index i = 0; i < 12; ++i) {
        for (Eigen::Index j = 0; j < 4; ++j) A(i, j) = rng.normal();
        b(i) = rng.normal();
    }
    for (double ridge : {0.0, 0.3, 5.0}) {
        const Eigen::MatrixXd Ad = A;
        const Eigen::VectorXd oracle =
            (Ad.transpose() * Ad + ridge * Eigen::MatrixXd::Identity(4, 4)).ldlt().solve(Ad.transpose() * b);
        CHECK((solve_least_squares(A, b, ridge) - oracle).norm() < 1e-10);
    }
}

TEST_CASE("least squares rejects a rank-deficient design without ridge") {
    Matrix A(3, 2);
    A << 1, 2, 1, 2, 1, 2;
    Vector b = Vector::Ones(3);
    CHECK_THROWS_AS(solve_least_squares(A, b, 0.0), RankError);
    CHECK_NOTHROW(solve_least_squares(A, b, 1e-3));
}

TEST_CASE("pinball on a constant column lands in the brute-force argmin") {
    SUBCASE("s = 1..10, q = 0.9") {
        const Vector s = seq(1, 10);
        const PinballFit fit = fit_pinball_regression(constant_column(10), s, 0.9);
        double lo = 0, hi = 0;
        const double best = grid_min_constant(s, 0.9, lo, hi);
        CHECK(fit.objective == doctest::Approx(best).epsilon(1e-12));
        // the loss is flat on [9, 10]; 9 is the lower end of that set
        CHECK(fit.beta(0) >= 9.0 - 1e-9);
        CHECK(fit.beta(0) <= 10.0 + 1e-9);
        CHECK(lo == doctest::Approx(9.0).epsilon(1e-3));
    }
    SUBCASE("median of (1, 2, 3)") {
        const PinballFit fit = fit_pinball_regression(constant_column(3), seq(1, 3), 0.5);
        CHECK(fit.beta(0) == doctest::Approx(2.0).epsilon(1e-12));
    }
    SUBCASE("zero scores") {
        RngStream rng(1, 1);
        Matrix phi(8, 3);
        for (Eigen::Index i = 0; i < 8; ++i) phi.row(i) << 1.0, rng.normal(), rng.normal();
        const PinballFit fit = fit_pinball_regression(phi, Vector::Zero(8), 0.7);
        CHECK(fit.beta.norm() < 1e-12);
        CHECK(fit.objective == doctest::Approx(0.0));
    }
}

TEST_CASE("pinball optimality certificates on random instances") {
    RngStream rng(11, 0);
    for (int trial = 0; trial < 60; ++trial) {
        const Eigen::Index d = 1 + trial % 5;
        const Eigen::Index m = 10 + 7 * (trial % 6);
        const double q = 0.1 + 0.8 * rng.uniform();
        const RandomLp lp = random_lp(rng, m, d);
        const PinballFit fit = fit_pinball_regression(lp.phi, lp.s, q);
        CAPTURE(trial);

        // dual feasibility: stationarity and the box
        CHECK((lp.phi.transpose() * fit.duals).cwiseAbs().maxCoeff() < 1e-6);
        CHECK(fit.duals.minCoeff() >= q - 1.0 - 1e-8);
        CHECK(fit.duals.maxCoeff() <= q + 1e-8);

        // strong duality certifies optimality of both
        const double primal = pinball_objective(lp.phi, lp.s, fit.beta, q) * static_cast<double>(m);
        CHECK(std::abs(primal - lp.s.dot(fit.duals)) < 1e-7 * (1.0 + std::abs(primal)));
        CHECK(fit.objective >= 0.0);

        // complementary slackness and the active set
        const Vector resid = lp.s - lp.phi * fit.beta;
        long tight = 0;
        for (Eigen::Index i = 0; i < m; ++i) {
            if (resid(i) > 1e-9) CHECK(fit.duals(i) == doctest::Approx(q).epsilon(1e-8));
            if (resid(i) < -1e-9) CHECK(fit.duals(i) == doctest::Approx(q - 1.0).epsilon(1e-8));
            if (std::abs(resid(i)) <= 1e-9) ++tight;
        }
        CHECK(tight <= d);

        // quantile balance
        long below = 0;
        for (Eigen::Index i = 0; i < m; ++i) below += resid(i) <= 1e-9;
        CHECK(std::abs(static_cast<double>(below) / m - q) <= static_cast<double>(d) / m + 1e-12);
    }
}

TEST_CASE("warm-started re-solves agree with cold solves") {
    RngStream rng(5, 2);
    const RandomLp lp = random_lp(rng, 40, 3);
    PinballLp warm(lp.phi, 0.8);
    warm.solve(lp.s);
    Vector s = lp.s;
    for (int k = 0; k < 15; ++k) {
        const Eigen::Index row = k % 40;
        s(row) = 3.0 * rng.uniform();
        const PinballFit a = warm.resolve_with(row, s(row));
        const PinballFit b = fit_pinball_regression(lp.phi, s, 0.8);
        CHECK(a.objective == doctest::Approx(b.objective).epsilon(1e-10));
    }
}

TEST_CASE("pinball input validation") {
    Matrix phi = Matrix::Ones(4, 2);
    phi.col(1) << 1, 2, 3, 4;
    Vector s = Vector::Ones(4);
    CHECK_THROWS_AS(fit_pinball_regression(phi, s, 0.0), InputError);
    CHECK_THROWS_AS(fit_pinball_regression(phi, s, 1.0), InputError);
    Vector bad = s;
    bad(2) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(fit_pinball_regression(phi, bad, 0.5), InputError);
    Matrix no_intercept = phi;
    no_intercept(1, 0) = 2.0;
    CHECK_THROWS_AS(fit_pinball_regression(no_intercept, s, 0.5), InputError);
}

TEST_CASE("adam on convex quadratics") {
    AdamConfig cfg;
    cfg.steps = 3000;
    cfg.lr = 1e-2;
    Vector t0(1);
    t0 << 1.0;
    const Vector a = adam_minimize([](const Vector& t) { return Vector(2.0 * t); }, t0, cfg);
    CHECK(std::abs(a(0)) < 1e-3);

    t0 << 0.0;
    const Vector b = adam_minimize([](const Vector& t) { return Vector(t.array() - 5.0); }, t0, cfg);
    CHECK(std::abs(b(0) - 5.0) < 1e-3);

    Vector t3(3);
    t3 << 4, -2, 7;
    Vector target(3);
    target << 1, 2, 3;
    const Vector c =
        adam_minimize([&](const Vector& t) { return Vector(2.0 * (t - target)); }, t3, cfg);
    CHECK((c - target).cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("adam edge cases") {
    Vector t0(2);
    t0 << 0.5, -1.5;
    AdamConfig one;
    one.steps = 1;
    one.lr = 0.0;
    CHECK(adam_minimize([](const Vector& t) { return Vector(2.0 * t); }, t0, one) == t0);

    AdamConfig zero;
    zero.steps = 0;
    CHECK_THROWS_AS(adam_minimize([](const Vector& t) { return t; }, t0, zero), InputError);

    AdamConfig cfg;
    cfg.steps = 10;
    int calls = 0;
    try {
        adam_minimize(
            [&](const Vector& t) {
                ++calls;
                Vector g = t;
                if (calls == 4) g(0) = std::numeric_limits<double>::infinity();
                return g;
            },
            t0, cfg);
        FAIL("expected a divergence error");
    } catch (const DivergenceError& e) {
        CHECK(e.step() == 3);
    }
}

TEST_CASE("principal axis") {
    Matrix one(5, 1);
    one << 1, 4, 2, 8, 5;
    CHECK(principal_axis(one)(0) == doctest::Approx(1.0));

    Matrix twin(6, 2);
    twin.col(0) << 1, 2, 3, 4, 5, 7;
    twin.col(1) = 3.0 * twin.col(0).array() + 1.0;
    const Vector a = principal_axis(twin);
    CHECK(a(0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-9));
    CHECK(a(1) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-9));

    // exactly uncorrelated columns: a tie, still deterministic and unit-norm
    Matrix indep(4, 2);
    indep << 1, 1, 1, -1, -1, 1, -1, -1;
    const Vector u = principal_axis(indep), v = principal_axis(indep);
    CHECK(u == v);
    CHECK(u.norm() == doctest::Approx(1.0));
    Eigen::Index k = 0;
    u.cwiseAbs().maxCoeff(&k);
    CHECK(u(k) > 0.0);

    Matrix flat(4, 2);
    flat << 1, 3, 2, 3, 3, 3, 4, 3;
    CHECK_THROWS_AS(principal_axis(flat), DegenerateError);
}

TEST_CASE("rng streams are reproducible and distinct") {
    RngStream a(42, 7), b(42, 7), c(42, 8);
    bool differs = false;
    for (int i = 0; i < 100; ++i) {
        const double x = a.normal();
        CHECK(x == b.normal());
        differs |= x != c.normal();
    }
    CHECK(differs);

    RngStream p(1, 0);
    auto perm = p.permutation(50);
    std::set<std::size_t> seen(perm.begin(), perm.end());
    CHECK(seen.size() == 50);
    CHECK(*seen.rbegin() == 49);

    RngStream n(9, 9);
    double sum = 0, sq = 0;
    const int N = 200000;
    for (int i = 0; i < N; ++i) {
        const double z = n.normal();
        sum += z;
        sq += z * z;
    }
    CHECK(std::abs(sum / N) < 0.01);
    CHECK(std::abs(sq / N - 1.0) < 0.02);

    RngStream parent(4, 4);
    RngStream d1 = parent.derive(3), d2 = parent.derive(3), d3 = parent.derive(4);
    const double x1 = d1.uniform();
    CHECK(x1 == d2.uniform());
    CHECK(x1 != d3.uniform());
}
