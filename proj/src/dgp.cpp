#include "ivccp/dgp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "ivccp/error.hpp"

namespace ivccp {
namespace {

constexpr double kPi = std::numbers::pi;

void check_design(int design) {
    if (design < 1 || design > 3) throw ConfigError("unknown synthetic design " + std::to_string(design));
}

void check_dim(const Vector& v, Eigen::Index expected, const char* what) {
    if (v.size() != expected) throw InputError(std::string("design: ") + what + " has the wrong dimension");
}

double confounding(int design, const Latents& l) {
    switch (design) {
        case 1: return 0.55 * l.u(0);
        case 2: return 0.40 * l.u(0) - 0.30 * l.u(1) + 0.22 * l.u(2);
        default: return 0.36 * l.u(0) - 0.24 * l.u(1) + 0.18 * l.u(2);
    }
}

}  // namespace

DesignDims design_dims(int design) {
    check_design(design);
    switch (design) {
        case 1: return {1, 1};
        case 2: return {3, 1};
        default: return {3, 3};
    }
}

double structural_h0(int design, const Vector& x) {
    const DesignDims dims = design_dims(design);
    check_dim(x, dims.dim_x, "x");
    switch (design) {
        case 1: return std::sin(kPi * x(0)) / (1.0 + 0.45 * x(0) * x(0));
        case 2:
            return std::sin(x(0)) + 0.45 * x(1) * x(1) - 0.35 * x(0) * x(2) + 0.40 * std::cos(x(2));
        default:
            return 0.60 * std::sin(x(0)) + 0.38 * x(1) * x(1) - 0.25 * x(0) * x(2) + 0.48 * std::cos(x(2)) +
                   0.18 * x(0) * x(1);
    }
}

double noise_scale_sigma(int design, const Vector& x, const Vector& z) {
    const DesignDims dims = design_dims(design);
    check_dim(x, dims.dim_x, "x");
    check_dim(z, dims.dim_z, "z");
    switch (design) {
        case 1:
            return 0.35 + 0.10 * std::abs(x(0)) + 0.12 * (z(0) + 1.0) / 2.0 +
                   0.08 / (1.0 + std::exp(-x(0) * z(0)));
        case 2:
            return 0.32 + 0.08 * std::abs(x(0)) + 0.07 * x(1) * x(1) + 0.10 * (z(0) + 1.0) / 2.0 +
                   0.05 * std::max(x(2) * z(0), 0.0);
        default:
            return 0.30 + 0.03 * (x(0) * x(0) + x(1) * x(1)) + 0.07 * std::max(x(2), 0.0) +
                   0.07 * (z(0) + 1.0) / 2.0 + 0.05 * (z(1) * z(2) + 1.0) / 2.0;
    }
}

Latents draw_latents(int design, RngStream& rng) {
    const Eigen::Index k = design == 1 ? 1 : 3;
    Latents l;
    l.u.resize(k);
    l.e.resize(k);
    for (Eigen::Index j = 0; j < k; ++j) l.u(j) = rng.normal();
    for (Eigen::Index j = 0; j < k; ++j) l.e(j) = rng.normal();
    l.v = rng.normal();
    return l;
}

SyntheticRow generate_row(int design, const Vector& z, const Latents& l) {
    const DesignDims dims = design_dims(design);
    check_dim(z, dims.dim_z, "z");
    const Eigen::Index k = design == 1 ? 1 : 3;
    if (l.u.size() != k || l.e.size() != k) throw InputError("design: latent dimension mismatch");
    SyntheticRow row;
    row.z = z;
    row.latents = l;
    row.x.resize(dims.dim_x);
    switch (design) {
        case 1: row.x(0) = 1.05 * std::sin(kPi * z(0)) + 0.55 * l.u(0) + 0.12 * l.e(0); break;
        case 2:
            row.x(0) = std::sin(kPi * z(0)) + 0.50 * l.u(0) + 0.10 * l.e(0);
            row.x(1) = z(0) * z(0) - 1.0 / 3.0 + 0.42 * l.u(1) + 0.10 * l.e(1);
            row.x(2) = std::cos(kPi * z(0)) + 0.24 * (l.u(0) + l.u(2)) + 0.10 * l.e(2);
            break;
        default:
            row.x(0) = std::sin(kPi * (z(0) + 0.30 * z(1))) + 0.42 * l.u(0) + 0.10 * l.e(0);
            row.x(1) = z(1) * z(2) + 0.25 * z(0) * z(0) + 0.40 * l.u(1) + 0.10 * l.e(1);
            row.x(2) = std::cos(kPi * z(2)) + 0.22 * z(0) - 0.18 * z(1) + 0.28 * (l.u(0) + l.u(2)) + 0.10 * l.e(2);
            break;
    }
    row.y = structural_h0(design, row.x) + confounding(design, l) + noise_scale_sigma(design, row.x, z) * l.v;
    return row;
}

DataSet generate_dataset(int design, Eigen::Index n, RngStream& rng, bool keep_latents) {
    const DesignDims dims = design_dims(design);
    if (n < 1) throw InputError("generate_dataset: n must be at least 1");
    const Eigen::Index k = design == 1 ? 1 : 3;
    DataSet data;
    data.y.resize(n);
    data.x.resize(n, dims.dim_x);
    data.z.resize(n, dims.dim_z);
    if (keep_latents) data.latent.resize(n, kLatentRest + 2 * k + 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        Vector z(dims.dim_z);
        for (Eigen::Index j = 0; j < dims.dim_z; ++j) z(j) = rng.uniform(-1.0, 1.0);
        const SyntheticRow row = generate_row(design, z, draw_latents(design, rng));
        data.y(i) = row.y;
        data.x.row(i) = row.x.transpose();
        data.z.row(i) = z.transpose();
        if (keep_latents) {
            const double h0 = structural_h0(design, row.x);
            auto lat = data.latent.row(i);
            lat(kLatentH0) = h0;
            lat(kLatentEps) = row.y - h0;
            lat.segment(kLatentRest, k) = row.latents.u.transpose();
            lat.segment(kLatentRest + k, k) = row.latents.e.transpose();
            lat(kLatentRest + 2 * k) = row.latents.v;
        }
    }
    return data;
}

double oracle_radius(const std::function<double(RngStream&)>& draw_eps, double alpha, long draws, RngStream& rng) {
    if (draws < 1000) throw InputError("oracle radius: need at least 1000 draws");
    if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("oracle radius: alpha must lie in (0, 1)");
    std::vector<double> abs_eps(static_cast<std::size_t>(draws));
    for (auto& a : abs_eps) a = std::abs(draw_eps(rng));
    // smallest t with empirical P(|eps| <= t) >= 1 - alpha
    auto k = static_cast<std::size_t>(std::ceil((1.0 - alpha) * static_cast<double>(draws) - 1e-9));
    k = std::clamp<std::size_t>(k, 1, abs_eps.size());
    std::nth_element(abs_eps.begin(), abs_eps.begin() + static_cast<long>(k - 1), abs_eps.end());
    return abs_eps[k - 1];
}

double oracle_radius_tau0(int design, const Vector& z, double alpha, long draws, RngStream& rng) {
    check_dim(z, design_dims(design).dim_z, "z");
    return oracle_radius(
        [&](RngStream& r) {
            const SyntheticRow row = generate_row(design, z, draw_latents(design, r));
            return row.y - structural_h0(design, row.x);
        },
        alpha, draws, rng);
}

}  // namespace ivccp
