#pragma once

#include <functional>

#include "ivccp/data.hpp"
#include "ivccp/numkit/rng.hpp"

namespace ivccp {

/// Synthetic NPIV designs 1..3 with (d_X, d_Z) = (1,1), (3,1), (3,3).
struct DesignDims {
    Eigen::Index dim_x;
    Eigen::Index dim_z;
};

DesignDims design_dims(int design);

/// Standard normal latents: u (confounders), e (first-stage noise), v (outcome noise).
struct Latents {
    Vector u;
    Vector e;
    double v = 0.0;
};

struct SyntheticRow {
    double y = 0.0;
    Vector x;
    Vector z;
    Latents latents;
};

double structural_h0(int design, const Vector& x);
double noise_scale_sigma(int design, const Vector& x, const Vector& z);

Latents draw_latents(int design, RngStream& rng);

/// Deterministic row given the instrument and latents.
SyntheticRow generate_row(int design, const Vector& z, const Latents& latents);

/// n i.i.d. rows. When keep_latents is set, DataSet::latent holds the columns
/// listed by latent_columns().
DataSet generate_dataset(int design, Eigen::Index n, RngStream& rng, bool keep_latents = true);

/// Column layout of DataSet::latent: h0(x), eps = y - h0(x), u..., e..., v.
enum LatentColumn : Eigen::Index { kLatentH0 = 0, kLatentEps = 1, kLatentRest = 2 };

/// Empirical (1 - alpha)-quantile of |eps| from `draws` calls of draw_eps.
double oracle_radius(const std::function<double(RngStream&)>& draw_eps, double alpha, long draws, RngStream& rng);

/// tau0(z) = inf{t : P(|eps| <= t | Z = z) >= 1 - alpha}, by Monte Carlo.
double oracle_radius_tau0(int design, const Vector& z, double alpha, long draws, RngStream& rng);

}  // namespace ivccp
