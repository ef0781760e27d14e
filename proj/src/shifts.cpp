#include "ivccp/shifts.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "ivccp/error.hpp"
#include "ivccp/numkit/linalg.hpp"

namespace ivccp {

double Projector::operator()(const Vector& v) const {
    if (v.size() != mean.size()) throw InputError("projector: dimension mismatch");
    return (v - mean).cwiseQuotient(col_scale).dot(axis) / scale;
}

Vector Projector::apply_rows(const Matrix& rows) const {
    if (rows.cols() != mean.size()) throw InputError("projector: dimension mismatch");
    Matrix centered = rows.rowwise() - mean.transpose();
    centered.array().rowwise() /= col_scale.transpose().array();
    return centered * axis / scale;
}

Projector build_projector(const Matrix& reference) {
    if (reference.rows() < 2) throw InputError("projector: need at least two reference rows");
    Projector p;
    const double n = static_cast<double>(reference.rows());
    p.mean = reference.colwise().mean().transpose();
    p.col_scale.resize(reference.cols());
    for (Eigen::Index j = 0; j < reference.cols(); ++j) {
        const double var = (reference.col(j).array() - p.mean(j)).square().sum() / n;
        if (!(var > 0.0)) throw DegenerateError("projector: zero-variance reference column");
        p.col_scale(j) = std::sqrt(var);
    }
    p.axis = reference.cols() == 1 ? Vector::Ones(1) : principal_axis(reference);
    p.scale = 1.0;
    const Vector scores = p.apply_rows(reference);
    const double var = (scores.array() - scores.mean()).square().sum() / n;
    if (!(var > 0.0)) throw DegenerateError("projector: projected reference has zero variance");
    p.scale = std::sqrt(var);
    return p;
}

FeatureMap FeatureMap::constant(Eigen::Index input_dim) {
    FeatureMap m;
    m.kind_ = FeatureKind::Constant;
    m.input_dim_ = input_dim;
    return m;
}

FeatureMap FeatureMap::linear(Eigen::Index input_dim) {
    FeatureMap m;
    m.kind_ = FeatureKind::Linear;
    m.input_dim_ = input_dim;
    return m;
}

FeatureMap FeatureMap::bins(Projector projection, std::vector<double> interior_edges) {
    for (std::size_t i = 1; i < interior_edges.size(); ++i)
        if (!(interior_edges[i] > interior_edges[i - 1])) throw ConfigError("bins: edges must be strictly increasing");
    FeatureMap m;
    m.kind_ = FeatureKind::Bins;
    m.input_dim_ = projection.input_dim();
    m.projection_ = std::move(projection);
    m.edges_ = std::move(interior_edges);
    return m;
}

FeatureMap FeatureMap::rkhs(Projector projection, std::vector<double> landmarks, double gamma) {
    if (!(gamma > 0.0)) throw ConfigError("rkhs: gamma must be positive");
    if (landmarks.empty()) throw ConfigError("rkhs: need at least one landmark");
    FeatureMap m;
    m.kind_ = FeatureKind::Rkhs;
    m.input_dim_ = projection.input_dim();
    m.projection_ = std::move(projection);
    m.landmarks_ = std::move(landmarks);
    m.gamma_ = gamma;
    return m;
}

Eigen::Index FeatureMap::dimension() const {
    switch (kind_) {
        case FeatureKind::Constant: return 1;
        case FeatureKind::Linear: return 1 + input_dim_;
        case FeatureKind::Bins: return 2 + static_cast<Eigen::Index>(edges_.size());
        case FeatureKind::Rkhs: return 1 + static_cast<Eigen::Index>(landmarks_.size());
    }
    return 1;
}

Vector FeatureMap::operator()(const Vector& v) const {
    if (v.size() != input_dim_) throw InputError("feature map: input dimension mismatch");
    Vector out = Vector::Zero(dimension());
    out(0) = 1.0;
    switch (kind_) {
        case FeatureKind::Constant: break;
        case FeatureKind::Linear: out.tail(input_dim_) = v; break;
        case FeatureKind::Bins: {
            const double u = (*projection_)(v);
            const auto cell = std::lower_bound(edges_.begin(), edges_.end(), u) - edges_.begin();
            out(1 + cell) = 1.0;
            break;
        }
        case FeatureKind::Rkhs: {
            const double u = (*projection_)(v);
            for (std::size_t k = 0; k < landmarks_.size(); ++k) {
                const double diff = u - landmarks_[k];
                out(1 + static_cast<Eigen::Index>(k)) = std::exp(-gamma_ * diff * diff);
            }
            break;
        }
    }
    return out;
}

Matrix FeatureMap::apply_rows(const Matrix& rows) const {
    Matrix out(rows.rows(), dimension());
    for (Eigen::Index i = 0; i < rows.rows(); ++i) out.row(i) = (*this)(rows.row(i).transpose()).transpose();
    return out;
}

double empirical_quantile(std::vector<double> sample, double p) {
    if (sample.empty()) throw InputError("quantile: empty sample");
    std::sort(sample.begin(), sample.end());
    const double h = p * static_cast<double>(sample.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sample.size() - 1);
    return sample[lo] + (h - static_cast<double>(lo)) * (sample[hi] - sample[lo]);
}

FeatureMap build_feature_map(const FeatureSpec& spec, const Matrix& reference) {
    switch (spec.kind) {
        case FeatureKind::Constant: return FeatureMap::constant(reference.cols());
        case FeatureKind::Linear: return FeatureMap::linear(reference.cols());
        case FeatureKind::Bins: {
            if (spec.bins < 1) throw ConfigError("bins: need at least one bin");
            if (reference.rows() < spec.bins) throw ConfigError("bins: fewer reference points than bins");
            Projector proj = build_projector(reference);
            const Vector u = proj.apply_rows(reference);
            std::vector<double> sample(u.data(), u.data() + u.size());
            std::vector<double> edges;
            for (int g = 1; g < spec.bins; ++g) {
                const double e = empirical_quantile(sample, static_cast<double>(g) / spec.bins);
                if (edges.empty() || e > edges.back()) edges.push_back(e);
            }
            return FeatureMap::bins(std::move(proj), std::move(edges));
        }
        case FeatureKind::Rkhs: {
            if (spec.landmarks < 1) throw ConfigError("rkhs: need at least one landmark");
            Projector proj = build_projector(reference);
            const Vector u = proj.apply_rows(reference);
            std::vector<double> sample(u.data(), u.data() + u.size());
            std::vector<double> marks;
            for (int k = 1; k <= spec.landmarks; ++k)
                marks.push_back(empirical_quantile(sample, static_cast<double>(k) / (spec.landmarks + 1)));
            return FeatureMap::rkhs(std::move(proj), std::move(marks), spec.gamma);
        }
    }
    throw ConfigError("unknown feature kind");
}

double scenario_weight(Scenario scenario, double u) {
    switch (scenario) {
        case Scenario::Observed: return 1.0;
        case Scenario::LinearTilt: return std::max(1.0 + 0.95 * u, 0.05);
        case Scenario::StepTilt: return u > 0.0 ? std::numbers::e : 1.0;
        case Scenario::LocalTilt: {
            const double t = (u - 0.75) / 0.35;
            return 0.20 + 1.60 * std::exp(-0.5 * t * t);
        }
    }
    return 1.0;
}

double scenario_weight_sup(Scenario scenario, double u_lo, double u_hi) {
    switch (scenario) {
        case Scenario::Observed: return 1.0;
        case Scenario::LinearTilt: return scenario_weight(scenario, u_hi);
        case Scenario::StepTilt: return scenario_weight(scenario, u_hi);
        case Scenario::LocalTilt: return scenario_weight(scenario, std::clamp(0.75, u_lo, u_hi));
    }
    return 1.0;
}

Vector normalize_weights(const Vector& raw) {
    if (raw.size() == 0) throw InputError("normalize_weights: empty input");
    if ((raw.array() <= 0.0).any() || !raw.allFinite())
        throw InputError("normalize_weights: weights must be positive and finite");
    return raw / raw.sum();
}

namespace {
constexpr std::array<std::pair<Scenario, std::string_view>, 4> kScenarioNames{{
    {Scenario::Observed, "observed"},
    {Scenario::LinearTilt, "linear_tilt"},
    {Scenario::LocalTilt, "local_tilt"},
    {Scenario::StepTilt, "step_tilt"},
}};
constexpr std::array<std::pair<FeatureKind, std::string_view>, 4> kKindNames{{
    {FeatureKind::Constant, "constant"},
    {FeatureKind::Bins, "bins"},
    {FeatureKind::Linear, "linear"},
    {FeatureKind::Rkhs, "rkhs"},
}};
}  // namespace

std::string_view to_string(Scenario s) {
    for (const auto& [k, v] : kScenarioNames)
        if (k == s) return v;
    return "?";
}

std::string_view to_string(FeatureKind kind) {
    for (const auto& [k, v] : kKindNames)
        if (k == kind) return v;
    return "?";
}

Scenario parse_scenario(std::string_view name) {
    for (const auto& [k, v] : kScenarioNames)
        if (v == name) return k;
    throw ConfigError("unknown scenario '" + std::string(name) + "'");
}

FeatureKind parse_feature_kind(std::string_view name) {
    for (const auto& [k, v] : kKindNames)
        if (v == name) return k;
    throw ConfigError("unknown feature family '" + std::string(name) + "'");
}

const std::vector<Scenario>& all_scenarios() {
    static const std::vector<Scenario> all{Scenario::Observed, Scenario::LinearTilt, Scenario::LocalTilt,
                                           Scenario::StepTilt};
    return all;
}

}  // namespace ivccp
