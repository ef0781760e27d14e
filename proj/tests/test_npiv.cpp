#include <doctest.h>

#include <set>

#include "ivccp/error.hpp"
#include "ivccp/npiv.hpp"
#include "ivccp/numkit/rng.hpp"

using namespace ivccp;

namespace {

DataSet exogenous(Eigen::Index n, RngStream& rng, double slope) {
    DataSet d;
    d.x.resize(n, 1);
    d.y.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        d.x(i, 0) = rng.uniform(-2, 2);
        d.y(i) = slope * d.x(i, 0);
    }
    d.z = d.x;
    return d;
}

Eigen::MatrixXd cubic(const Eigen::VectorXd& v) {
    Eigen::MatrixXd out(v.size(), 4);
    for (Eigen::Index i = 0; i < v.size(); ++i) out.row(i) << 1, v(i), v(i) * v(i), v(i) * v(i) * v(i);
    return out;
}

Eigen::VectorXd standardize(const Eigen::VectorXd& v) {
    const double mu = v.mean();
    const double sd = std::sqrt((v.array() - mu).square().mean());
    return (v.array() - mu) / sd;
}

}  // namespace

TEST_CASE("polynomial features") {
    Vector z(1);
    z << 0;
    CHECK(poly_features(z, 3) == (Vector(4) << 1, 0, 0, 0).finished());
    Vector two(1);
    two << 2;
    CHECK(poly_features(two, 3) == (Vector(4) << 1, 2, 4, 8).finished());
    Vector pm(2);
    pm << 1, -1;
    CHECK(poly_features(pm, 2) == (Vector(5) << 1, 1, 1, -1, 1).finished());
    CHECK(poly_features(pm, 2, PolyTerms::Pairwise) == (Vector(6) << 1, 1, 1, -1, 1, -1).finished());
    CHECK_THROWS_AS(poly_features(pm, 0), InputError);
}

TEST_CASE("full polynomial basis lists every monomial once") {
    for (int k = 1; k <= 3; ++k) {
        const auto exps = poly_exponents(k, 3, PolyTerms::Full);
        const long expected = (k == 1) ? 4 : (k == 2) ? 10 : 20;  // C(k + 3, 3)
        CHECK(static_cast<long>(exps.size()) == expected);
        std::set<std::vector<int>> unique(exps.begin(), exps.end());
        CHECK(unique.size() == exps.size());
        int prev = 0;
        for (const auto& e : exps) {
            int total = 0;
            for (int p : e) total += p;
            CHECK(total <= 3);
            CHECK(total >= prev);  // graded
            prev = total;
        }
    }
    Vector v(3);
    v << 2, 3, 5;
    const Vector f = poly_features(v, 3, PolyTerms::Full);
    const auto exps = poly_exponents(3, 3, PolyTerms::Full);
    for (std::size_t c = 0; c < exps.size(); ++c)
        CHECK(f(static_cast<Eigen::Index>(c)) ==
              std::pow(2, exps[c][0]) * std::pow(3, exps[c][1]) * std::pow(5, exps[c][2]));
}

TEST_CASE("2sls recovers an exogenous linear function") {
    RngStream rng(1, 0);
    const DataSet d = exogenous(60, rng, 2.0);
    SieveSpec spec;
    spec.ridge = 0.0;
    const StructuralModel m = fit_sieve_2sls(d, spec);
    const Vector pred = predict_h(m, d.x);
    CHECK((pred - 2.0 * d.x.col(0)).cwiseAbs().maxCoeff() < 1e-6);
    Vector x(1);
    x << 0.3;
    CHECK(predict_h(m, x) == doctest::Approx(0.6).epsilon(1e-6));

    SieveSpec ridged;  // default ridge barely moves the fit
    CHECK((predict_h(fit_sieve_2sls(d, ridged), d.x) - 2.0 * d.x.col(0)).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("2sls matches the closed form on a tiny dataset") {
    DataSet d;
    d.x.resize(5, 1);
    d.z.resize(5, 1);
    d.y.resize(5);
    d.x.col(0) << 0.1, 0.9, -0.4, 1.7, -1.2;
    d.z.col(0) << 0.3, 1.1, -0.6, 1.2, -0.9;
    d.y << 1.0, 2.5, -0.3, 3.1, 0.2;
    SieveSpec spec;
    spec.ridge = 0.1;
    const StructuralModel m = fit_sieve_2sls(d, spec);

    const Eigen::MatrixXd psi = cubic(standardize(d.x.col(0)));
    const Eigen::MatrixXd zb = cubic(standardize(d.z.col(0)));
    const Eigen::MatrixXd P = zb * (zb.transpose() * zb).inverse() * zb.transpose();
    Eigen::MatrixXd penalty = spec.ridge * Eigen::MatrixXd::Identity(4, 4);
    penalty(0, 0) = 0.0;  // intercept is not shrunk
    const Eigen::VectorXd oracle = (psi.transpose() * P * psi + penalty)
                                       .inverse() *
                                   psi.transpose() * P * d.y;
    CHECK((m.beta - oracle).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("constant outcome and zero model") {
    RngStream rng(2, 0);
    DataSet d = exogenous(40, rng, 0.0);
    d.y.setConstant(1.75);
    d.z.col(0) = d.x.col(0).array().square() + 0.3 * d.x.col(0).array();
    const StructuralModel m = fit_sieve_2sls(d, SieveSpec{});
    CHECK((predict_h(m, d.x).array() - 1.75).abs().maxCoeff() < 1e-8);

    StructuralModel zero = m;
    zero.beta.setZero();
    Vector x(1);
    x << 0.8;
    CHECK(predict_h(zero, x) == 0.0);

    Vector wrong(2);
    CHECK_THROWS_AS(predict_h(m, wrong), InputError);
}

TEST_CASE("2sls with instruments spanning the regressors is OLS") {
    RngStream rng(3, 0);
    DataSet d;
    d.x.resize(80, 1);
    d.y.resize(80);
    for (Eigen::Index i = 0; i < 80; ++i) {
        d.x(i, 0) = rng.normal();
        d.y(i) = std::sin(d.x(i, 0)) + 0.2 * rng.normal();
    }
    d.z = d.x;
    SieveSpec spec;
    spec.ridge = 0.0;
    const StructuralModel m = fit_sieve_2sls(d, spec);
    const Eigen::MatrixXd psi = cubic(standardize(d.x.col(0)));
    const Eigen::VectorXd ols = psi.colPivHouseholderQr().solve(d.y);
    CHECK((m.beta - ols).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("predictions are invariant to affine rescaling of x") {
    RngStream rng(4, 0);
    DataSet d;
    d.x.resize(100, 2);
    d.z.resize(100, 2);
    d.y.resize(100);
    for (Eigen::Index i = 0; i < 100; ++i) {
        d.z.row(i) << rng.uniform(-1, 1), rng.uniform(-1, 1);
        d.x.row(i) << d.z(i, 0) + 0.3 * rng.normal(), d.z(i, 1) * d.z(i, 0) + 0.3 * rng.normal();
        d.y(i) = d.x(i, 0) - 0.5 * d.x(i, 1) * d.x(i, 1) + rng.normal();
    }
    DataSet scaled = d;
    scaled.x.col(0) = 3.0 * d.x.col(0).array() - 2.0;
    scaled.x.col(1) = -0.5 * d.x.col(1).array() + 7.0;
    SieveSpec exact;
    exact.ridge = 0.0;
    const Vector a = predict_h(fit_sieve_2sls(d, exact), d.x);
    const Vector b = predict_h(fit_sieve_2sls(scaled, exact), scaled.x);
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("2sls errors") {
    DataSet d;
    d.x = Matrix::Constant(10, 1, 2.0);
    d.z.resize(10, 1);
    d.y = Vector::LinSpaced(10, 0, 1);
    for (Eigen::Index i = 0; i < 10; ++i) d.z(i, 0) = i;
    SieveSpec spec;
    spec.ridge = 0.0;
    CHECK_THROWS_AS(fit_sieve_2sls(d, spec), RankError);
    CHECK_THROWS_AS(fit_sieve_2sls(DataSet{}, SieveSpec{}), InputError);
    SieveSpec bad;
    bad.degree_x = 0;
    CHECK_THROWS_AS(fit_sieve_2sls(d, bad), ConfigError);
}

TEST_CASE("poly terms names") {
    for (PolyTerms t : {PolyTerms::Additive, PolyTerms::Pairwise, PolyTerms::Full})
        CHECK(parse_poly_terms(to_string(t)) == t);
    CHECK_THROWS_AS(parse_poly_terms("tensor"), ConfigError);
}
