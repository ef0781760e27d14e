#include "ivccp/conformal_x.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "ivccp/error.hpp"

namespace ivccp {

// ----------------------------------------------------------------- ratio --

DensityRatioModel::DensityRatioModel(std::vector<MlpParams> nets, std::vector<int> fold_of_row,
                                     std::vector<double> prior_correction, Standardizer input_std, Eigen::Index dim_x,
                                     Eigen::Index dim_z)
    : nets_(std::move(nets)), fold_of_row_(std::move(fold_of_row)), prior_correction_(std::move(prior_correction)),
      input_std_(std::move(input_std)), dim_x_(dim_x), dim_z_(dim_z) {
    if (nets_.empty() || nets_.size() != prior_correction_.size())
        throw InputError("density ratio: inconsistent fold state");
}

Vector DensityRatioModel::make_input(double s, const Vector& x, const Vector& z) const {
    if (x.size() != dim_x_ || z.size() != dim_z_) throw InputError("density ratio: dimension mismatch");
    Vector v(1 + dim_x_ + dim_z_);
    v << s, x, z;
    return input_std_.apply(v);
}

double DensityRatioModel::fold_ratio(std::size_t fold, const Vector& input) const {
    const double logit = std::clamp(mlp_forward(nets_[fold], input), -30.0, 30.0);
    return std::exp(logit) * prior_correction_[fold];
}

double DensityRatioModel::ratio(double s, const Vector& x, const Vector& z) const {
    const Vector input = make_input(s, x, z);
    double total = 0.0;
    for (std::size_t k = 0; k < nets_.size(); ++k) total += fold_ratio(k, input);
    return total / static_cast<double>(nets_.size());
}

double DensityRatioModel::ratio_cross_fit(Eigen::Index row, double s, const Vector& x, const Vector& z) const {
    if (row < 0 || row >= static_cast<Eigen::Index>(fold_of_row_.size()))
        throw InputError("density ratio: row out of range");
    if (nets_.size() < 2) return ratio(s, x, z);
    const Vector input = make_input(s, x, z);
    const int own = fold_of_row_[static_cast<std::size_t>(row)];
    double total = 0.0;
    int used = 0;
    for (std::size_t k = 0; k < nets_.size(); ++k) {
        if (static_cast<int>(k) == own) continue;
        total += fold_ratio(k, input);
        ++used;
    }
    return total / used;
}

Matrix DensityRatioModel::ratio_matrix(const Vector& s, const Matrix& x, const Matrix& z_eval, double clip_lo,
                                       double clip_hi) const {
    const Eigen::Index m = s.size();
    const Eigen::Index M = z_eval.rows();
    if (x.rows() != m || x.cols() != dim_x_ || z_eval.cols() != dim_z_)
        throw InputError("density ratio: dimension mismatch");
    // One batch of m*M rows per network.
    Matrix inputs(m * M, 1 + dim_x_ + dim_z_);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < M; ++j) {
            auto row = inputs.row(i * M + j);
            row(0) = s(i);
            row.segment(1, dim_x_) = x.row(i);
            row.tail(dim_z_) = z_eval.row(j);
        }
    inputs = input_std_.apply(inputs);
    Vector total = Vector::Zero(m * M);
    for (std::size_t k = 0; k < nets_.size(); ++k) {
        const Vector logits = mlp_forward_batch(nets_[k], inputs);
        total.array() += logits.array().max(-30.0).min(30.0).exp() * prior_correction_[k];
    }
    total /= static_cast<double>(nets_.size());
    Matrix out(m, M);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < M; ++j) out(i, j) = std::clamp(total(i * M + j), clip_lo, clip_hi);
    return out;
}

DensityRatioModel estimate_density_ratio(const Vector& s, const Matrix& x, const Matrix& z,
                                         const DensityRatioConfig& cfg, RngStream& rng) {
    const Eigen::Index n = s.size();
    if (n < 20) throw InputError("density ratio: need at least 20 triples");
    if (x.rows() != n || z.rows() != n) throw InputError("density ratio: row count mismatch");
    if (cfg.folds < 1) throw ConfigError("density ratio: folds must be positive");
    const Eigen::Index dx = x.cols();
    const Eigen::Index dz = z.cols();

    Matrix joint(n, 1 + dx + dz);
    joint.col(0) = s;
    joint.middleCols(1, dx) = x;
    joint.rightCols(dz) = z;
    Standardizer input_std = Standardizer::fit(joint);
    const Matrix standardized = input_std.apply(joint);

    const auto order = rng.permutation(static_cast<std::size_t>(n));
    std::vector<int> fold_of_row(static_cast<std::size_t>(n));
    std::vector<std::vector<Eigen::Index>> members(static_cast<std::size_t>(cfg.folds));
    for (std::size_t r = 0; r < order.size(); ++r) {
        const int f = static_cast<int>(r % static_cast<std::size_t>(cfg.folds));
        fold_of_row[order[r]] = f;
        members[static_cast<std::size_t>(f)].push_back(static_cast<Eigen::Index>(order[r]));
    }

    std::vector<MlpParams> nets;
    std::vector<double> prior;
    std::vector<int> arch = cfg.hidden;
    arch.push_back(1);
    for (int f = 0; f < cfg.folds; ++f) {
        const auto& rows = members[static_cast<std::size_t>(f)];
        const auto k = static_cast<Eigen::Index>(rows.size());
        if (k < 2) throw InputError("density ratio: fold too small");
        Matrix pos(k, joint.cols());
        Matrix neg(k, joint.cols());
        const auto perm = rng.permutation(rows.size());
        for (Eigen::Index i = 0; i < k; ++i) {
            pos.row(i) = standardized.row(rows[static_cast<std::size_t>(i)]);
            neg.row(i) = pos.row(i);
            neg.row(i).tail(dz) = standardized.row(rows[perm[static_cast<std::size_t>(i)]]).tail(dz);
        }
        RngStream fold_rng = rng.derive(static_cast<std::uint64_t>(f));
        nets.push_back(mlp_train(pos, neg, arch, cfg.train, fold_rng));
        prior.push_back(static_cast<double>(neg.rows()) / static_cast<double>(pos.rows()));
    }
    return DensityRatioModel(std::move(nets), std::move(fold_of_row), std::move(prior), std::move(input_std), dx, dz);
}

// ------------------------------------------------------------- objective --

double surrogate_psi(double u, double kappa, double alpha) { return sigmoid(u / kappa) - (1.0 - alpha); }

double surrogate_psi_derivative(double u, double kappa) {
    const double p = sigmoid(u / kappa);
    return p * (1.0 - p) / kappa;
}

double coverage_residual(double s, double tau, double alpha) { return (s <= tau ? 1.0 : 0.0) - (1.0 - alpha); }

double weighted_moment_criterion(const Vector& psi, const Matrix& ratio) {
    if (ratio.rows() != psi.size() || ratio.cols() < 1) throw InputError("moment criterion: shape mismatch");
    const Vector moments = ratio.transpose() * psi / static_cast<double>(psi.size());
    return moments.squaredNorm() / static_cast<double>(ratio.cols());
}

double softplus(double v) { return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v))); }

double softplus_inverse(double v) {
    if (!(v > 0.0)) throw InputError("softplus_inverse: argument must be positive");
    return v + std::log(-std::expm1(-v));
}

namespace {
constexpr std::array<std::pair<RadiusKind, std::string_view>, 4> kRadiusNames{{
    {RadiusKind::Linear, "linear"},
    {RadiusKind::Bins, "bins"},
    {RadiusKind::Rkhs, "rkhs"},
    {RadiusKind::Mlp, "mlp"},
}};
}  // namespace

std::string_view to_string(RadiusKind k) {
    for (const auto& [kind, name] : kRadiusNames)
        if (kind == k) return name;
    return "?";
}

RadiusKind parse_radius_kind(std::string_view name) {
    for (const auto& [kind, n] : kRadiusNames)
        if (n == name) return kind;
    throw ConfigError("unknown radius model '" + std::string(name) + "'");
}

RadiusModelX RadiusModelX::build(const RadiusSpec& spec, const Matrix& reference_x, RngStream& rng) {
    RadiusModelX m;
    m.kind_ = spec.kind;
    switch (spec.kind) {
        case RadiusKind::Linear: m.features_ = FeatureMap::linear(reference_x.cols()); break;
        case RadiusKind::Bins:
            m.features_ = build_feature_map({FeatureKind::Bins, spec.bins, spec.landmarks, spec.gamma}, reference_x);
            break;
        case RadiusKind::Rkhs:
            m.features_ = build_feature_map({FeatureKind::Rkhs, spec.bins, spec.landmarks, spec.gamma}, reference_x);
            break;
        case RadiusKind::Mlp: {
            m.x_std_ = Standardizer::fit(reference_x);
            m.mlp_sizes_ = {static_cast<int>(reference_x.cols())};
            m.mlp_sizes_.insert(m.mlp_sizes_.end(), spec.hidden.begin(), spec.hidden.end());
            m.mlp_sizes_.push_back(1);
            m.theta_ = mlp_flatten(mlp_init(m.mlp_sizes_, rng));
            return m;
        }
    }
    m.theta_ = Vector::Zero(m.features_->dimension());
    return m;
}

void RadiusModelX::set_theta(Vector theta) {
    if (theta.size() != theta_.size()) throw InputError("radius model: parameter length mismatch");
    theta_ = std::move(theta);
}

double RadiusModelX::raw(const Vector& x) const {
    if (kind_ == RadiusKind::Mlp) return mlp_forward(mlp_unflatten(mlp_sizes_, theta_), x_std_.apply(x));
    return (*features_)(x).dot(theta_);
}

Vector RadiusModelX::raw_batch(const Matrix& x) const {
    if (kind_ == RadiusKind::Mlp) return mlp_forward_batch(mlp_unflatten(mlp_sizes_, theta_), x_std_.apply(x));
    return features_->apply_rows(x) * theta_;
}

Vector RadiusModelX::evaluate(const Matrix& x) const {
    Vector r = raw_batch(x);
    for (Eigen::Index i = 0; i < r.size(); ++i) r(i) = softplus(r(i));
    return r;
}

Vector RadiusModelX::raw_gradient(const Matrix& x, const Vector& upstream) const {
    if (kind_ == RadiusKind::Mlp)
        return mlp_flatten(mlp_backward_batch(mlp_unflatten(mlp_sizes_, theta_), x_std_.apply(x), upstream));
    return features_->apply_rows(x).transpose() * upstream;
}

void RadiusModelX::shift_raw(double delta) {
    if (kind_ == RadiusKind::Mlp)
        theta_(theta_.size() - 1) += delta;  // output bias is the last flattened entry
    else
        theta_(0) += delta;
}

double penalized_objective(const RadiusModelX& q, const Vector& s, const Matrix& x, const Matrix& ratio,
                           const XRadiusConfig& cfg, double alpha, Vector* gradient) {
    const Eigen::Index m = s.size();
    if (x.rows() != m || ratio.rows() != m) throw InputError("radius objective: row count mismatch");
    const double M = static_cast<double>(ratio.cols());
    const Vector raw = q.raw_batch(x);
    Vector qv(m), psi(m), dpsi(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        qv(i) = softplus(raw(i));
        psi(i) = surrogate_psi(qv(i) - s(i), cfg.kappa, alpha);
        dpsi(i) = surrogate_psi_derivative(qv(i) - s(i), cfg.kappa);
    }
    const Vector moments = ratio.transpose() * psi / static_cast<double>(m);
    const double Q = moments.squaredNorm() / M;
    const double value = qv.mean() + cfg.lambda * Q;
    if (gradient) {
        const Vector rm = ratio * moments;
        Vector upstream(m);
        for (Eigen::Index i = 0; i < m; ++i) {
            const double dq = 1.0 / m + cfg.lambda * 2.0 / M * dpsi(i) * rm(i) / m;
            upstream(i) = dq * sigmoid(raw(i));
        }
        *gradient = q.raw_gradient(x, upstream);
    }
    return value;
}

double objective_Q(const RadiusModelX& q, const Vector& s, const Matrix& x, const Matrix& ratio, double kappa,
                   double alpha) {
    if (x.rows() != s.size()) throw InputError("objective_Q: row count mismatch");
    const Vector qv = q.evaluate(x);
    Vector psi(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i) psi(i) = surrogate_psi(qv(i) - s(i), kappa, alpha);
    return weighted_moment_criterion(psi, ratio);
}

RadiusModelX learn_radius_x(const Vector& s, const Matrix& x, const Matrix& ratio, const RadiusSpec& spec,
                            const XRadiusConfig& cfg, double alpha, RngStream& rng) {
    if (s.size() == 0) throw InputError("learn_radius_x: empty shape sample");
    if (!(cfg.kappa > 0.0) || cfg.lambda < 0.0) throw ConfigError("learn_radius_x: need kappa > 0, lambda >= 0");
    RadiusModelX model = RadiusModelX::build(spec, x, rng);

    std::vector<double> sample(s.data(), s.data() + s.size());
    const double start_level = std::max(empirical_quantile(sample, 1.0 - alpha), 1e-6);
    model.shift_raw(softplus_inverse(start_level) - model.raw_batch(x).mean());

    RadiusModelX work = model;
    const Vector theta = adam_minimize(
        [&](const Vector& t) {
            work.set_theta(t);
            Vector g;
            penalized_objective(work, s, x, ratio, cfg, alpha, &g);
            return g;
        },
        model.theta(), cfg.adam);
    model.set_theta(theta);
    const double final_value = penalized_objective(model, s, x, ratio, cfg, alpha);
    if (!std::isfinite(final_value) || !theta.allFinite())
        throw DivergenceError("learn_radius_x: objective left the finite range (final value " +
                                  std::to_string(final_value) + ")",
                              cfg.adam.steps);
    return model;
}

// ----------------------------------------------------------- recalibrate --

ShiftNormalization shift_normalization(Scenario scenario, const Vector& reference_u) {
    if (reference_u.size() == 0) throw InputError("shift normalization: empty reference");
    double total = 0.0;
    for (Eigen::Index i = 0; i < reference_u.size(); ++i) total += scenario_weight(scenario, reference_u(i));
    ShiftNormalization norm;
    norm.mean = total / static_cast<double>(reference_u.size());
    norm.bound = 1.05 * scenario_weight_sup(scenario, reference_u.minCoeff(), reference_u.maxCoeff()) / norm.mean;
    return norm;
}

double weighted_cutoff(const Vector& normalized_scores, const Vector& weights, double bound, double alpha) {
    const Eigen::Index n = normalized_scores.size();
    if (weights.size() != n) throw InputError("weighted cutoff: length mismatch");
    if (!(bound > 0.0)) throw InputError("weighted cutoff: bound must be positive");
    if ((weights.array() < 0.0).any()) throw InputError("weighted cutoff: negative weight");
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::sort(order.begin(), order.end(),
              [&](Eigen::Index a, Eigen::Index b) { return normalized_scores(a) < normalized_scores(b); });
    const double denom = weights.sum() + bound;
    double cum = 0.0;
    for (Eigen::Index i : order) {
        cum += weights(i);
        if (cum / denom >= (1.0 - alpha) - 1e-12) return std::max(normalized_scores(i), 0.0);
    }
    return std::numeric_limits<double>::infinity();
}

RecalibrationCutoff recalibration_cutoff(const DataSet& recal, const StructuralModel& h, const RadiusModelX& q,
                                         Scenario target, const Projector& projector,
                                         const ShiftNormalization& norm, double alpha) {
    const Vector scores = compute_scores(h, recal);
    const Vector qv = q.evaluate(recal.x);
    const Vector u = projector.apply_rows(recal.z);
    Vector R(recal.size()), w(recal.size());
    for (Eigen::Index i = 0; i < recal.size(); ++i) {
        if (!(qv(i) > 0.0)) throw InputError("recalibration: radius model returned a nonpositive value");
        R(i) = scores(i) / qv(i);
        w(i) = scenario_weight(target, u(i)) / norm.mean;
    }
    if (w.size() > 0 && w.maxCoeff() > norm.bound) throw InputError("recalibration: weight exceeds the bound B");
    return {weighted_cutoff(R, w, norm.bound, alpha), target, norm.bound};
}

PredictionInterval predict_interval_x(const StructuralModel& h, const RadiusModelX& q,
                                      const RecalibrationCutoff& cutoff, const Vector& x) {
    const double center = predict_h(h, x);
    if (std::isinf(cutoff.t_hat)) return {center, std::numeric_limits<double>::infinity()};
    return {center, cutoff.t_hat * q(x)};
}

}  // namespace ivccp
