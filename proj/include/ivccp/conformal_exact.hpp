#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "ivccp/data.hpp"
#include "ivccp/npiv.hpp"
#include "ivccp/shifts.hpp"

namespace ivccp {

struct PredictionInterval {
    double center = 0.0;
    double radius = 0.0;  // may be +inf

    double lower() const { return center - radius; }
    double upper() const { return center + radius; }
    double length() const { return 2.0 * radius; }
    bool bounded() const { return std::isfinite(radius); }
    bool contains(double y) const { return std::abs(y - center) <= radius; }
};

enum class Indexing { Z, XZ };

/// |y_i - h(x_i)| for every row.
Vector compute_scores(const StructuralModel& model, const DataSet& data);

/// Frozen calibration state for the exact (X,Z)- and Z-indexed classes.
/// Immutable after construction; every query builds its own LP, so queries
/// may run concurrently.
class ExactCalibrator {
public:
    /// cal_features: m x d, first column all ones. Requires m >= d,
    /// scores >= 0, alpha in (0, 1), cap_multiplier > 0.
    ExactCalibrator(Matrix cal_features, Vector cal_scores, double alpha, double cap_multiplier = 10.0);

    /// Maps cal_inputs (z rows, or [x, z] rows) through the feature map.
    ExactCalibrator(FeatureMap map, const Matrix& cal_inputs, Vector cal_scores, double alpha,
                    double cap_multiplier = 10.0);

    const Matrix& features() const { return features_; }
    const Vector& scores() const { return scores_; }
    double alpha() const { return alpha_; }
    double level_q() const { return 1.0 - alpha_; }
    double cap_multiplier() const { return cap_multiplier_; }
    double search_cap() const;
    double search_tolerance() const;
    const std::optional<FeatureMap>& feature_map() const { return map_; }
    const std::vector<bool>& start_hint() const { return hint_; }

    /// Same features and level with different scores (used for oracle-score
    /// comparisons).
    ExactCalibrator with_scores(Vector scores) const;

private:
    std::optional<FeatureMap> map_;
    Matrix features_;
    Vector scores_;
    double alpha_;
    double cap_multiplier_;
    std::vector<bool> hint_;  // calibration-only optimal dual bounds, used as a crash start
};

struct MembershipDetail {
    bool accepted = false;        // dual && primal
    bool dual_accepts = false;    // eta_{m+1} < 1 - alpha (strict, tol 1e-9)
    bool primal_accepts = false;  // s <= g_s(test feature) + 1e-8 (1 + |s|)
    double eta = 0.0;             // augmented dual coordinate
    double fitted = 0.0;          // g_s(test feature)
};

MembershipDetail membership_detail(const ExactCalibrator& cal, const Vector& test_feature, double s);

/// True iff s belongs to the conformal upper set at this test feature.
bool membership(const ExactCalibrator& cal, const Vector& test_feature, double s);

/// sup{s in [0, cap] : membership}, by bisection; +inf if the cap itself is
/// accepted.
double calibrate_radius(const ExactCalibrator& cal, const Vector& test_feature);

/// Radii for every row of test_features. Identical rows are solved once.
/// OpenMP-parallel over the distinct rows.
Vector calibrate_radii(const ExactCalibrator& cal, const Matrix& test_features);

/// Serial reference for calibrate_radii.
Vector calibrate_radii_serial(const ExactCalibrator& cal, const Matrix& test_features);

/// Feature-space input for one test point under the given indexing.
Vector indexing_input(const Vector& x, const Vector& z, Indexing indexing);
Matrix indexing_inputs(const DataSet& data, Indexing indexing);

/// Interval [h(x) - tau(.), h(x) + tau(.)]; requires a calibrator built
/// with a feature map.
PredictionInterval predict_interval(const StructuralModel& model, const ExactCalibrator& cal, const Vector& x,
                                    const Vector& z, Indexing indexing);

std::vector<PredictionInterval> predict_intervals(const StructuralModel& model, const ExactCalibrator& cal,
                                                  const DataSet& test, Indexing indexing);

}  // namespace ivccp
