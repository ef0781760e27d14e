#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "ivccp/conformal_exact.hpp"
#include "ivccp/nn.hpp"
#include "ivccp/npiv.hpp"
#include "ivccp/shifts.hpp"

namespace ivccp {

// ---------------------------------------------------------------------------
// Conditional density ratio r(s, x | z) = p(s, x | z) / p(s, x)
// ---------------------------------------------------------------------------

struct DensityRatioConfig {
    int folds = 2;
    std::vector<int> hidden{32, 32};
    MlpTrainConfig train{300, 1e-3};
    double clip_lo = 1e-3;
    double clip_hi = 1e3;

    bool operator==(const DensityRatioConfig&) const = default;
};

/// Cross-fitted classifier-based ratio. Fold k's network separates observed
/// (s, x, z) rows of fold k from rows whose z was permuted within fold k; its
/// prior-corrected odds estimate the joint-vs-product ratio, which equals
/// p(s, x | z) / p(s, x).
class DensityRatioModel {
public:
    DensityRatioModel(std::vector<MlpParams> nets, std::vector<int> fold_of_row, std::vector<double> prior_correction,
                      Standardizer input_std, Eigen::Index dim_x, Eigen::Index dim_z);

    /// Out-of-sample ratio: average over every fold's network.
    double ratio(double s, const Vector& x, const Vector& z) const;

    /// Ratio for training row `row`, using only the networks that did not see it.
    double ratio_cross_fit(Eigen::Index row, double s, const Vector& x, const Vector& z) const;

    /// m x M matrix R(i, j) = ratio(s_i, x_i | z_eval_j), clipped to [lo, hi].
    Matrix ratio_matrix(const Vector& s, const Matrix& x, const Matrix& z_eval, double clip_lo, double clip_hi) const;

    const std::vector<int>& fold_of_row() const { return fold_of_row_; }
    const std::vector<double>& prior_correction() const { return prior_correction_; }
    std::size_t folds() const { return nets_.size(); }

private:
    double fold_ratio(std::size_t fold, const Vector& input) const;
    Vector make_input(double s, const Vector& x, const Vector& z) const;

    std::vector<MlpParams> nets_;
    std::vector<int> fold_of_row_;
    std::vector<double> prior_correction_;
    Standardizer input_std_;
    Eigen::Index dim_x_;
    Eigen::Index dim_z_;
};

/// Requires at least 20 triples.
DensityRatioModel estimate_density_ratio(const Vector& s, const Matrix& x, const Matrix& z,
                                         const DensityRatioConfig& cfg, RngStream& rng);

// ---------------------------------------------------------------------------
// Smooth moment objective and radius learning
// ---------------------------------------------------------------------------

/// logistic(u / kappa) - (1 - alpha).
double surrogate_psi(double u, double kappa, double alpha);
double surrogate_psi_derivative(double u, double kappa);

/// 1[s <= tau] - (1 - alpha).
double coverage_residual(double s, double tau, double alpha);

/// (1/M) sum_j ((1/m) sum_i psi_i R(i, j))^2.
double weighted_moment_criterion(const Vector& psi, const Matrix& ratio);

double softplus(double v);
double softplus_inverse(double v);

enum class RadiusKind { Linear, Bins, Rkhs, Mlp };

std::string_view to_string(RadiusKind k);
RadiusKind parse_radius_kind(std::string_view name);

struct RadiusSpec {
    RadiusKind kind = RadiusKind::Linear;
    int bins = 6;
    int landmarks = 4;
    double gamma = 0.2;
    std::vector<int> hidden{32, 32};

    bool operator==(const RadiusSpec&) const = default;
};

/// q(x) = softplus(theta . phi(x)) for basis kinds, softplus(mlp(std(x)))
/// for the network kind. Strictly positive everywhere.
class RadiusModelX {
public:
    static RadiusModelX build(const RadiusSpec& spec, const Matrix& reference_x, RngStream& rng);

    RadiusKind kind() const { return kind_; }
    const Vector& theta() const { return theta_; }
    void set_theta(Vector theta);
    Eigen::Index parameter_count() const { return theta_.size(); }

    double raw(const Vector& x) const;
    double operator()(const Vector& x) const { return softplus(raw(x)); }
    Vector raw_batch(const Matrix& x) const;
    Vector evaluate(const Matrix& x) const;

    /// Sum_i upstream(i) * d raw(x_i) / d theta.
    Vector raw_gradient(const Matrix& x, const Vector& upstream) const;

    /// Shifts the output offset so that raw() moves by delta everywhere.
    void shift_raw(double delta);

private:
    RadiusKind kind_ = RadiusKind::Linear;
    std::optional<FeatureMap> features_;
    std::vector<int> mlp_sizes_;
    Standardizer x_std_;
    Vector theta_;
};

struct XRadiusConfig {
    double lambda = 50.0;
    double kappa = 0.05;
    AdamConfig adam{2000, 1e-2};

    bool operator==(const XRadiusConfig&) const = default;
};

/// Q(theta) for cal rows (s_i, x_i) and a precomputed m x M ratio matrix.
double objective_Q(const RadiusModelX& q, const Vector& s, const Matrix& x, const Matrix& ratio, double kappa,
                   double alpha);

/// Full penalized objective (1/m) sum q(x_i) + lambda Q and its gradient.
double penalized_objective(const RadiusModelX& q, const Vector& s, const Matrix& x, const Matrix& ratio,
                           const XRadiusConfig& cfg, double alpha, Vector* gradient = nullptr);

/// Minimizes the penalized objective over theta from an initialization at
/// the unweighted (1 - alpha) score quantile. Throws DivergenceError with the
/// final objective if optimization leaves the finite range.
RadiusModelX learn_radius_x(const Vector& s, const Matrix& x, const Matrix& ratio, const RadiusSpec& spec,
                            const XRadiusConfig& cfg, double alpha, RngStream& rng);

// ---------------------------------------------------------------------------
// Single-shift weighted recalibration
// ---------------------------------------------------------------------------

struct RecalibrationCutoff {
    double t_hat = 0.0;  // may be +inf
    Scenario target = Scenario::Observed;
    double bound = 1.0;  // B: upper bound on the normalized target weight
};

/// Normalizer E[f0(Z)] and bound B for a target scenario, from reference
/// projections: B = 1.05 * sup f0 / mean f0 over the reference u range.
struct ShiftNormalization {
    double mean = 1.0;
    double bound = 1.05;
};
ShiftNormalization shift_normalization(Scenario scenario, const Vector& reference_u);

/// inf{t >= 0 : sum_i w_i / (sum_j w_j + B) 1[R_i <= t] >= 1 - alpha}; +inf if empty.
double weighted_cutoff(const Vector& normalized_scores, const Vector& weights, double bound, double alpha);

RecalibrationCutoff recalibration_cutoff(const DataSet& recal, const StructuralModel& h, const RadiusModelX& q,
                                         Scenario target, const Projector& projector,
                                         const ShiftNormalization& norm, double alpha);

PredictionInterval predict_interval_x(const StructuralModel& h, const RadiusModelX& q,
                                      const RecalibrationCutoff& cutoff, const Vector& x);

}  // namespace ivccp
