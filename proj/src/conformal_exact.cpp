#include "ivccp/conformal_exact.hpp"

#include <algorithm>
#include <map>
#include <string>

#include "ivccp/error.hpp"
#include "ivccp/numkit/pinball.hpp"

namespace ivccp {
namespace {

constexpr double kDualTieTol = 1e-9;
constexpr double kPrimalTol = 1e-8;

std::vector<bool> calibration_only_bounds(const Matrix& features, const Vector& scores, double q) {
    PinballLp lp(features, q);
    const PinballFit fit = lp.solve(scores);
    std::vector<bool> hint(static_cast<std::size_t>(scores.size()));
    for (Eigen::Index i = 0; i < scores.size(); ++i) hint[static_cast<std::size_t>(i)] = fit.duals(i) > q - 0.5;
    return hint;
}

// The m calibration points plus one augmented row; the augmented response
// is the only thing that changes between membership queries.
class AugmentedProblem {
public:
    AugmentedProblem(const ExactCalibrator& cal, const Vector& test_feature)
        : q_(cal.level_q()), m_(cal.features().rows()), feature_(test_feature), lp_(design(cal, test_feature), q_) {
        std::vector<bool> hint = cal.start_hint();
        hint.push_back(false);
        lp_.set_start_hint(std::move(hint));
        responses_.resize(m_ + 1);
        responses_.head(m_) = cal.scores();
        responses_(m_) = 0.0;
    }

    MembershipDetail test(double s) {
        if (!(s >= 0.0) || !std::isfinite(s)) throw InputError("membership: candidate must be finite and >= 0");
        responses_(m_) = s;
        const PinballFit fit = lp_.solve(responses_);
        MembershipDetail d;
        d.eta = fit.duals(m_);
        d.fitted = feature_.dot(fit.beta);
        d.dual_accepts = d.eta < q_ - kDualTieTol;
        d.primal_accepts = s <= d.fitted + kPrimalTol * (1.0 + std::abs(s));
        d.accepted = d.dual_accepts && d.primal_accepts;
        return d;
    }

    // With the augmented row basic at an accepted s, the fit moves affinely
    // with s and the basis stays optimal until a nonbasic calibration
    // residual reaches zero. Returns that s, or NaN when the row is nonbasic.
    double basis_breakpoint(double s) {
        responses_(m_) = s;
        const PinballFit fit = lp_.solve(responses_);
        const Matrix& phi = lp_.design();
        std::vector<Eigen::Index> basic;
        for (Eigen::Index i = 0; i <= m_; ++i)
            if (lp_.status(i) == PinballLp::Status::Basic) basic.push_back(i);
        const auto d = phi.cols();
        if (static_cast<Eigen::Index>(basic.size()) != d || basic.back() != m_)
            return std::numeric_limits<double>::quiet_NaN();
        Matrix rows(d, d);
        for (Eigen::Index k = 0; k < d; ++k) rows.row(k) = phi.row(basic[static_cast<std::size_t>(k)]);
        Vector unit = Vector::Zero(d);
        unit(d - 1) = 1.0;
        const Eigen::PartialPivLU<Matrix> lu(rows);
        const Vector v = lu.solve(unit);
        double next = std::numeric_limits<double>::infinity();
        std::size_t b = 0;
        for (Eigen::Index i = 0; i < m_; ++i) {
            if (b < basic.size() && basic[b] == i) {
                ++b;
                continue;
            }
            const double slope = phi.row(i).dot(v);
            const double resid = responses_(i) - phi.row(i).dot(fit.beta);
            // residuals move by -slope per unit of s
            if (slope * resid > 0.0) next = std::min(next, s + resid / slope);
        }
        return next;
    }

private:
    static Matrix design(const ExactCalibrator& cal, const Vector& f) {
        if (f.size() != cal.features().cols()) throw InputError("membership: test feature dimension mismatch");
        if (f(0) != 1.0) throw InputError("membership: test feature must lead with 1");
        Matrix phi(cal.features().rows() + 1, cal.features().cols());
        phi.topRows(cal.features().rows()) = cal.features();
        phi.bottomRows(1) = f.transpose();
        return phi;
    }

    double q_;
    Eigen::Index m_;
    Vector feature_;
    PinballLp lp_;
    Vector responses_;
};

double radius_search(const ExactCalibrator& cal, const Vector& test_feature) {
    AugmentedProblem problem(cal, test_feature);
    const double cap = cal.search_cap();
    const double tol = cal.search_tolerance();

    MembershipDetail top = problem.test(cap);
    if (top.accepted) return std::numeric_limits<double>::infinity();
    const MembershipDetail bottom = problem.test(0.0);
    if (!bottom.accepted) return 0.0;

    // an accepted fit stays optimal, and accepted, for every s up to it
    double lo = std::clamp(bottom.fitted, 0.0, cap);
    bool lo_exact = lo > 0.0;
    double hi = cap;
    double fitted_hi = top.fitted;
    bool hi_primal = !top.primal_accepts;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        const MembershipDetail d = problem.test(mid);
        if (d.accepted) {
            lo = mid;
            lo_exact = false;
            if (d.fitted > lo && d.fitted < hi) {
                lo = d.fitted;
                lo_exact = true;
            }
        } else {
            hi = mid;
            fitted_hi = d.fitted;
            hi_primal = !d.primal_accepts;
        }
    }
    // A fit lying below the rejected candidate stays optimal for every s
    // above it, so that value is the exact jump point whenever it falls
    // inside the final bracket. Rejections from a dual tie interpolate the
    // candidate instead and leave the jump at the accepted fit.
    if (hi_primal && fitted_hi >= lo && fitted_hi <= hi) return fitted_hi;
    if (lo_exact) return lo;
    const double next = problem.basis_breakpoint(lo);
    return next >= lo && next <= hi ? next : hi;
}

}  // namespace

Vector compute_scores(const StructuralModel& model, const DataSet& data) {
    return (data.y - predict_h(model, data.x)).cwiseAbs();
}

ExactCalibrator::ExactCalibrator(Matrix cal_features, Vector cal_scores, double alpha, double cap_multiplier)
    : features_(std::move(cal_features)), scores_(std::move(cal_scores)), alpha_(alpha),
      cap_multiplier_(cap_multiplier) {
    if (!(alpha_ > 0.0 && alpha_ < 1.0)) throw InputError("calibrator: alpha must lie in (0, 1)");
    if (!(cap_multiplier_ > 0.0)) throw InputError("calibrator: cap multiplier must be positive");
    if (features_.rows() != scores_.size()) throw InputError("calibrator: feature/score row mismatch");
    if (features_.rows() < features_.cols()) throw InputError("calibrator: need at least as many points as features");
    if (features_.cols() == 0 || (features_.col(0).array() != 1.0).any())
        throw InputError("calibrator: first feature must be the constant 1");
    if (!scores_.allFinite() || (scores_.array() < 0.0).any())
        throw InputError("calibrator: scores must be finite and nonnegative");
    hint_ = calibration_only_bounds(features_, scores_, level_q());
}

ExactCalibrator::ExactCalibrator(FeatureMap map, const Matrix& cal_inputs, Vector cal_scores, double alpha,
                                 double cap_multiplier)
    : ExactCalibrator(map.apply_rows(cal_inputs), std::move(cal_scores), alpha, cap_multiplier) {
    map_ = std::move(map);
}

double ExactCalibrator::search_cap() const {
    const double top = scores_.size() > 0 ? scores_.maxCoeff() : 0.0;
    return cap_multiplier_ * (top > 0.0 ? top : 1.0);
}

double ExactCalibrator::search_tolerance() const {
    const double top = scores_.size() > 0 ? scores_.maxCoeff() : 0.0;
    return 1e-6 * (1.0 + top);
}

ExactCalibrator ExactCalibrator::with_scores(Vector scores) const {
    ExactCalibrator out(features_, std::move(scores), alpha_, cap_multiplier_);
    out.map_ = map_;
    return out;
}

MembershipDetail membership_detail(const ExactCalibrator& cal, const Vector& test_feature, double s) {
    AugmentedProblem problem(cal, test_feature);
    return problem.test(s);
}

bool membership(const ExactCalibrator& cal, const Vector& test_feature, double s) {
    return membership_detail(cal, test_feature, s).accepted;
}

double calibrate_radius(const ExactCalibrator& cal, const Vector& test_feature) {
    return radius_search(cal, test_feature);
}

namespace {

struct DistinctRows {
    std::vector<Eigen::Index> representative;  // one source row per distinct feature vector
    std::vector<std::size_t> slot;             // row -> distinct index
};

DistinctRows distinct_rows(const Matrix& rows) {
    DistinctRows out;
    std::map<std::vector<double>, std::size_t> seen;
    out.slot.resize(static_cast<std::size_t>(rows.rows()));
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
        std::vector<double> key(rows.row(i).data(), rows.row(i).data() + rows.cols());
        auto [it, inserted] = seen.try_emplace(std::move(key), out.representative.size());
        if (inserted) out.representative.push_back(i);
        out.slot[static_cast<std::size_t>(i)] = it->second;
    }
    return out;
}

Vector scatter(const DistinctRows& rows, const std::vector<double>& values) {
    Vector out(static_cast<Eigen::Index>(rows.slot.size()));
    for (std::size_t i = 0; i < rows.slot.size(); ++i) out(static_cast<Eigen::Index>(i)) = values[rows.slot[i]];
    return out;
}

}  // namespace

Vector calibrate_radii(const ExactCalibrator& cal, const Matrix& test_features) {
    const DistinctRows rows = distinct_rows(test_features);
    const auto count = static_cast<long>(rows.representative.size());
    std::vector<double> radii(rows.representative.size());
    std::vector<std::string> errors(rows.representative.size());
#pragma omp parallel for schedule(dynamic, 4)
    for (long k = 0; k < count; ++k) {
        try {
            const Eigen::Index r = rows.representative[static_cast<std::size_t>(k)];
            radii[static_cast<std::size_t>(k)] = radius_search(cal, test_features.row(r).transpose());
        } catch (const std::exception& e) {
            errors[static_cast<std::size_t>(k)] = e.what();
        }
    }
    for (const auto& e : errors)
        if (!e.empty()) throw ConvergenceError("calibrate_radii: " + e);
    return scatter(rows, radii);
}

Vector calibrate_radii_serial(const ExactCalibrator& cal, const Matrix& test_features) {
    const DistinctRows rows = distinct_rows(test_features);
    std::vector<double> radii;
    radii.reserve(rows.representative.size());
    for (Eigen::Index r : rows.representative) radii.push_back(radius_search(cal, test_features.row(r).transpose()));
    return scatter(rows, radii);
}

Vector indexing_input(const Vector& x, const Vector& z, Indexing indexing) {
    if (indexing == Indexing::Z) return z;
    Vector w(x.size() + z.size());
    w << x, z;
    return w;
}

Matrix indexing_inputs(const DataSet& data, Indexing indexing) {
    return indexing == Indexing::Z ? data.z : data.joint_xz();
}

PredictionInterval predict_interval(const StructuralModel& model, const ExactCalibrator& cal, const Vector& x,
                                    const Vector& z, Indexing indexing) {
    if (!cal.feature_map()) throw InputError("predict_interval: calibrator has no feature map");
    const Vector input = indexing_input(x, z, indexing);
    if (input.size() != cal.feature_map()->input_dim())
        throw InputError("predict_interval: input does not match the calibrator's indexing");
    return {predict_h(model, x), calibrate_radius(cal, (*cal.feature_map())(input))};
}

std::vector<PredictionInterval> predict_intervals(const StructuralModel& model, const ExactCalibrator& cal,
                                                  const DataSet& test, Indexing indexing) {
    if (!cal.feature_map()) throw InputError("predict_intervals: calibrator has no feature map");
    const Matrix inputs = indexing_inputs(test, indexing);
    if (inputs.cols() != cal.feature_map()->input_dim())
        throw InputError("predict_intervals: inputs do not match the calibrator's indexing");
    const Vector radii = calibrate_radii(cal, cal.feature_map()->apply_rows(inputs));
    const Vector centers = predict_h(model, test.x);
    std::vector<PredictionInterval> out(static_cast<std::size_t>(test.size()));
    for (Eigen::Index i = 0; i < test.size(); ++i) out[static_cast<std::size_t>(i)] = {centers(i), radii(i)};
    return out;
}

}  // namespace ivccp
