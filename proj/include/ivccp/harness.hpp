#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ivccp/conformal_exact.hpp"
#include "ivccp/conformal_x.hpp"
#include "ivccp/data.hpp"
#include "ivccp/npiv.hpp"
#include "ivccp/numkit/rng.hpp"
#include "ivccp/shifts.hpp"

namespace ivccp {

// ------------------------------------------------------------ splitting --

struct SplitSizes {
    Eigen::Index train = 1000;
    Eigen::Index cal = 200;
    Eigen::Index test = 1000;

    Eigen::Index total() const { return train + cal + test; }
    bool operator==(const SplitSizes&) const = default;
};

struct Splits {
    DataSet train;
    DataSet cal;
    DataSet test;
};

/// Uniformly random disjoint partition; rows beyond the requested total are dropped.
Splits split(const DataSet& data, const SplitSizes& sizes, RngStream& rng);

// -------------------------------------------------------------- metrics --

struct WeightedMetrics {
    double coverage = 0.0;
    double mean_length = 0.0;  // +inf if any interval is unbounded
};

/// Coverage and length averaged with normalized scenario weights at u(z_i).
WeightedMetrics weighted_metrics(const std::vector<PredictionInterval>& intervals, const DataSet& rows,
                                 Scenario scenario, const Projector& projector);

/// Empirical coverage inside each projection bin; empty bins are NaN.
/// Edges are interior cut points; bin g is (e_{g-1}, e_g].
std::vector<double> conditional_coverage_check(const std::vector<PredictionInterval>& intervals, const DataSet& rows,
                                               const Projector& projector, const std::vector<double>& edges);

/// Same with edges at the equally spaced quantiles of the rows' projections.
std::vector<double> conditional_coverage_check(const std::vector<PredictionInterval>& intervals, const DataSet& rows,
                                               const Projector& projector, int z_bins);

// --------------------------------------------------------- replications --

enum class RadiusClass { XZ, Z, X };

std::string_view to_string(RadiusClass c);
RadiusClass parse_radius_class(std::string_view name);

struct MethodSpec {
    RadiusClass radius_class = RadiusClass::Z;
    FeatureSpec family{};      // XZ and Z classes
    double cap_multiplier = 10.0;
    RadiusSpec radius{};       // X class
    XRadiusConfig x_config{};
    DensityRatioConfig ratio{};

    bool operator==(const MethodSpec&) const = default;

    /// Shift family name for exact classes, radius model name for X.
    std::string model_name() const;
};

struct HarnessConfig {
    int design = 1;                   // synthetic design id, ignored when `data` is set
    std::optional<DataSet> data;      // fixed dataset resampled per replication
    SplitSizes sizes{};
    double alpha = 0.1;
    std::uint64_t base_seed = 2026;
    int replications = 100;
    std::vector<MethodSpec> methods;
    std::vector<Scenario> scenarios{Scenario::Observed};
    SieveSpec sieve{};
};

struct ReplicationRecord {
    RadiusClass radius_class = RadiusClass::Z;
    std::string model;
    Scenario scenario = Scenario::Observed;
    double coverage = 0.0;
    double mean_length = 0.0;
    long n_unbounded = 0;  // test intervals with infinite radius
    std::uint64_t rep_seed = 0;
    int rep_index = 0;
    int method_index = 0;
};

struct ReplicationFailure {
    int rep_index = 0;
    std::uint64_t rep_seed = 0;
    std::string method;  // empty when the whole replication failed
    std::string message;
};

struct CellSummary {
    RadiusClass radius_class = RadiusClass::Z;
    std::string model;
    Scenario scenario = Scenario::Observed;
    double cov_mean = 0.0;
    double cov_sd = 0.0;
    double len_mean = 0.0;  // +inf if any replication is unbounded
    double len_sd = 0.0;    // NaN when len_mean is +inf
    long n_unbounded_reps = 0;
    long n_reps = 0;
};

struct RunResult {
    std::vector<ReplicationRecord> records;  // ordered by (rep, method, scenario)
    std::vector<CellSummary> cells;          // ordered by (method, scenario)
    std::vector<ReplicationFailure> failures;
};

/// Per-replication seed; a replication is reproducible from it alone.
std::uint64_t replication_seed(std::uint64_t base_seed, int rep_index);

/// Everything a replication needs before calibration: data, splits, fit, projection.
struct ReplicationContext {
    Splits splits;
    StructuralModel model;
    Projector projector;  // on pooled train + cal instruments
    Vector pooled_u;
};

ReplicationContext prepare_replication(const HarnessConfig& config, RngStream& rng);

/// Fit the X-indexed ratio on cross-fitted training scores.
DensityRatioModel fit_ratio_model(const ReplicationContext& ctx, const SieveSpec& sieve,
                                  const DensityRatioConfig& cfg, RngStream& rng);

/// A calibrated method on one replication. Exact classes hold their frozen
/// calibrator; the X class holds the learned radius and the recalibration
/// half and finishes per target scenario.
struct FittedMethod {
    RadiusClass radius_class = RadiusClass::Z;
    std::optional<ExactCalibrator> calibrator;
    std::optional<RadiusModelX> radius;
    DataSet recal;

    /// Intervals at arbitrary rows (only x and z are read). The scenario
    /// matters only for the X class.
    std::vector<PredictionInterval> intervals(const ReplicationContext& ctx, const DataSet& rows, Scenario scenario,
                                              double alpha) const;
};

/// `ratio` is required for the X class and ignored otherwise.
FittedMethod fit_method(const HarnessConfig& config, const ReplicationContext& ctx, const MethodSpec& method,
                        const DensityRatioModel* ratio, RngStream& rng);

/// One replication; stage errors land in `failures`.
std::vector<ReplicationRecord> run_replication(const HarnessConfig& config, int rep_index,
                                               std::vector<ReplicationFailure>& failures);

/// OpenMP-parallel over replications.
RunResult run_replications(const HarnessConfig& config);
RunResult run_replications_serial(const HarnessConfig& config);

/// Mean, sample sd and inf convention per (method, scenario) cell.
std::vector<CellSummary> aggregate(const HarnessConfig& config, const std::vector<ReplicationRecord>& records);

}  // namespace ivccp
