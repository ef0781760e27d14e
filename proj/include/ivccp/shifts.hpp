#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ivccp/numkit/matrix.hpp"

namespace ivccp {

/// Standardized one-dimensional projection u(v): columns are standardized
/// with the reference mean/sd, projected on the leading correlation axis and
/// divided by the projected sd, so the reference sample maps to mean 0,
/// variance 1. For a single column this is plain standardization.
struct Projector {
    Vector axis;
    Vector mean;
    Vector col_scale;
    double scale = 1.0;

    double operator()(const Vector& v) const;
    Vector apply_rows(const Matrix& rows) const;
    Eigen::Index input_dim() const { return mean.size(); }
};

Projector build_projector(const Matrix& reference);

enum class FeatureKind { Constant, Bins, Linear, Rkhs };

struct FeatureSpec {
    FeatureKind kind = FeatureKind::Linear;
    int bins = 4;
    int landmarks = 4;
    double gamma = 0.2;

    bool operator==(const FeatureSpec&) const = default;
};

/// phi(v) with phi(v)[0] == 1.
///   Constant: (1)
///   Bins:     (1, 1[u in I_1], ..., 1[u in I_G]), I_g = (e_{g-1}, e_g], e_0 = -inf, e_G = +inf
///   Linear:   (1, v)
///   Rkhs:     (1, exp(-gamma (u - l_1)^2), ..., exp(-gamma (u - l_r)^2))
/// where u is the projection of v.
class FeatureMap {
public:
    static FeatureMap constant(Eigen::Index input_dim);
    static FeatureMap linear(Eigen::Index input_dim);
    /// interior_edges must be strictly increasing.
    static FeatureMap bins(Projector projection, std::vector<double> interior_edges);
    static FeatureMap rkhs(Projector projection, std::vector<double> landmarks, double gamma);

    FeatureKind kind() const { return kind_; }
    Eigen::Index dimension() const;
    Eigen::Index input_dim() const { return input_dim_; }
    const std::vector<double>& edges() const { return edges_; }
    const std::vector<double>& landmarks() const { return landmarks_; }
    double gamma() const { return gamma_; }
    const std::optional<Projector>& projection() const { return projection_; }

    Vector operator()(const Vector& v) const;
    Matrix apply_rows(const Matrix& rows) const;

private:
    FeatureKind kind_ = FeatureKind::Constant;
    Eigen::Index input_dim_ = 0;
    std::optional<Projector> projection_;
    std::vector<double> edges_;
    std::vector<double> landmarks_;
    double gamma_ = 0.0;
};

/// Bins: edges at the equally spaced projection quantiles of the reference.
/// Rkhs: landmarks at projection quantiles k/(r+1), k = 1..r.
/// Throws ConfigError when the reference has fewer rows than bins.
FeatureMap build_feature_map(const FeatureSpec& spec, const Matrix& reference);

/// Linear-interpolated empirical quantile (type 7) of an unsorted sample.
double empirical_quantile(std::vector<double> sample, double p);

enum class Scenario { Observed, LinearTilt, LocalTilt, StepTilt };

double scenario_weight(Scenario scenario, double u);

/// Supremum of scenario_weight over u in [u_lo, u_hi].
double scenario_weight_sup(Scenario scenario, double u_lo, double u_hi);

/// raw / sum(raw). Throws InputError on empty or non-positive input.
Vector normalize_weights(const Vector& raw);

std::string_view to_string(Scenario s);
std::string_view to_string(FeatureKind k);
Scenario parse_scenario(std::string_view name);
FeatureKind parse_feature_kind(std::string_view name);

const std::vector<Scenario>& all_scenarios();

}  // namespace ivccp
