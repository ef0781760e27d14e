#include <doctest.h>

#include <cmath>
#include <numbers>

#include "ivccp/dgp.hpp"
#include "ivccp/error.hpp"

using namespace ivccp;

namespace {

Vector vec(std::initializer_list<double> vals) {
    Vector v(static_cast<Eigen::Index>(vals.size()));
    Eigen::Index i = 0;
    for (double x : vals) v(i++) = x;
    return v;
}

// largest |binned mean of eps| / standard error over `bins` equal-width bins of z_col
double worst_binned_t(const DataSet& d, Eigen::Index z_col, int bins) {
    double worst = 0.0;
    for (int b = 0; b < bins; ++b) {
        const double lo = -1.0 + 2.0 * b / bins, hi = -1.0 + 2.0 * (b + 1) / bins;
        double sum = 0.0, sq = 0.0;
        long n = 0;
        for (Eigen::Index i = 0; i < d.size(); ++i) {
            const double z = d.z(i, z_col);
            if (z < lo || z >= hi) continue;
            const double e = d.latent(i, kLatentEps);
            sum += e;
            sq += e * e;
            ++n;
        }
        REQUIRE(n > 30);
        const double mean = sum / n;
        const double sd = std::sqrt((sq - n * mean * mean) / (n - 1));
        worst = std::max(worst, std::abs(mean) / (sd / std::sqrt(static_cast<double>(n))));
    }
    return worst;
}

}  // namespace

TEST_CASE("structural function and noise scale") {
    CHECK(structural_h0(1, vec({0})) == 0.0);
    CHECK(structural_h0(1, vec({0.5})) == doctest::Approx(1.0 / 1.1125).epsilon(1e-12));
    CHECK(structural_h0(2, vec({0, 0, 0})) == doctest::Approx(0.40));
    CHECK(noise_scale_sigma(1, vec({0}), vec({1})) == doctest::Approx(0.51));
    CHECK(noise_scale_sigma(1, vec({0}), vec({-1})) == doctest::Approx(0.39));
    CHECK(noise_scale_sigma(3, vec({0, 0, 0}), vec({-1, 0, 0})) == doctest::Approx(0.325));
    CHECK_THROWS_AS(structural_h0(1, vec({0, 0})), InputError);
    CHECK_THROWS_AS(noise_scale_sigma(2, vec({0}), vec({0})), InputError);
}

TEST_CASE("row generation with zeroed latents") {
    Latents zero{Vector::Zero(1), Vector::Zero(1), 0.0};
    const SyntheticRow r = generate_row(1, vec({0.5}), zero);
    CHECK(r.x(0) == doctest::Approx(1.05));
    CHECK(r.y == doctest::Approx(structural_h0(1, r.x)));

    const DataSet d3 = [] {
        RngStream rng(1, 0);
        return generate_dataset(3, 5, rng);
    }();
    CHECK(d3.dim_x() == 3);
    CHECK(d3.dim_z() == 3);
    CHECK(d3.latent.cols() == kLatentRest + 3 + 3 + 1);
    for (Eigen::Index i = 0; i < 5; ++i) {
        CHECK(d3.latent(i, kLatentH0) == doctest::Approx(structural_h0(3, d3.x.row(i).transpose())));
        CHECK(d3.latent(i, kLatentEps) == doctest::Approx(d3.y(i) - d3.latent(i, kLatentH0)));
    }
}

TEST_CASE("design dimensions and validation") {
    for (int id = 1; id <= 3; ++id) {
        RngStream rng(2, static_cast<std::uint64_t>(id));
        const DataSet d = generate_dataset(id, 20, rng, false);
        CHECK(d.dim_x() == design_dims(id).dim_x);
        CHECK(d.dim_z() == design_dims(id).dim_z);
        CHECK(d.latent.cols() == 0);
        CHECK((d.z.array().abs() <= 1.0).all());
    }
    RngStream rng(3, 0);
    CHECK_THROWS_AS(design_dims(4), ConfigError);
    CHECK_THROWS_AS(generate_dataset(0, 10, rng), ConfigError);
    CHECK_THROWS_AS(generate_dataset(1, 0, rng), InputError);
}

TEST_CASE("identical seeds give identical data") {
    for (int id = 1; id <= 3; ++id) {
        RngStream a(9, 1), b(9, 1), c(9, 2);
        const DataSet da = generate_dataset(id, 50, a);
        CHECK(da == generate_dataset(id, 50, b));
        CHECK_FALSE(da == generate_dataset(id, 50, c));
    }
}

TEST_CASE("noise scale stays positive on the support") {
    RngStream rng(4, 0);
    for (int id = 1; id <= 3; ++id) {
        const DesignDims dims = design_dims(id);
        for (int k = 0; k < 2000; ++k) {
            Vector x(dims.dim_x), z(dims.dim_z);
            for (Eigen::Index j = 0; j < x.size(); ++j) x(j) = rng.uniform(-4, 4);
            for (Eigen::Index j = 0; j < z.size(); ++j) z(j) = rng.uniform(-1, 1);
            CHECK(noise_scale_sigma(id, x, z) > 0.0);
        }
    }
}

TEST_CASE("noise is mean zero given the instrument") {
    for (int id = 1; id <= 3; ++id) {
        RngStream rng(5, static_cast<std::uint64_t>(id));
        const DataSet d = generate_dataset(id, 10000, rng);
        for (Eigen::Index c = 0; c < d.dim_z(); ++c) {
            CAPTURE(id);
            CAPTURE(c);
            CHECK(worst_binned_t(d, c, 8) <= 3.0);
        }
    }
}

TEST_CASE("oracle radius") {
    RngStream rng(6, 0);
    const auto normal = [](RngStream& r) { return r.normal(); };
    CHECK(oracle_radius(normal, 0.1, 100000, rng) == doctest::Approx(1.6449).epsilon(0.05 / 1.6449));
    CHECK(oracle_radius(normal, 0.999, 10000, rng) < 0.01);
    for (int id = 1; id <= 3; ++id) {
        const Vector z = Vector::Constant(design_dims(id).dim_z, 0.3);
        RngStream a(7, static_cast<std::uint64_t>(id)), b(7, static_cast<std::uint64_t>(id));
        CHECK(oracle_radius_tau0(id, z, 0.1, 5000, a) >= oracle_radius_tau0(id, z, 0.5, 5000, b));
    }
    CHECK_THROWS_AS(oracle_radius(normal, 0.1, 999, rng), InputError);
    CHECK_THROWS_AS(oracle_radius(normal, 1.0, 1000, rng), InputError);
}
