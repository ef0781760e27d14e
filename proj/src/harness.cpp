#include "ivccp/harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "ivccp/dgp.hpp"
#include "ivccp/error.hpp"

namespace ivccp {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<Eigen::Index> index_range(const std::vector<std::size_t>& perm, std::size_t from, std::size_t count) {
    std::vector<Eigen::Index> rows(count);
    for (std::size_t i = 0; i < count; ++i) rows[i] = static_cast<Eigen::Index>(perm[from + i]);
    return rows;
}

void validate(const HarnessConfig& c) {
    if (!(c.alpha > 0.0 && c.alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
    if (c.replications < 1) throw ConfigError("replications must be at least 1");
    if (c.methods.empty()) throw ConfigError("at least one method is required");
    if (c.scenarios.empty()) throw ConfigError("at least one scenario is required");
    if (c.sizes.train < 2 || c.sizes.cal < 2 || c.sizes.test < 1) throw ConfigError("split sizes are too small");
    if (!c.data) design_dims(c.design);
}

std::string method_label(const MethodSpec& m) {
    return std::string(to_string(m.radius_class)) + "/" + m.model_name();
}

}  // namespace

// ------------------------------------------------------------ splitting --

Splits split(const DataSet& data, const SplitSizes& sizes, RngStream& rng) {
    if (sizes.train < 0 || sizes.cal < 0 || sizes.test < 0) throw InputError("split: negative size");
    if (sizes.total() > data.size())
        throw InputError("split: requested " + std::to_string(sizes.total()) + " rows but only " +
                         std::to_string(data.size()) + " are available");
    const auto perm = rng.permutation(static_cast<std::size_t>(data.size()));
    const auto tr = static_cast<std::size_t>(sizes.train);
    const auto ca = static_cast<std::size_t>(sizes.cal);
    const auto te = static_cast<std::size_t>(sizes.test);
    return {data.subset(index_range(perm, 0, tr)), data.subset(index_range(perm, tr, ca)),
            data.subset(index_range(perm, tr + ca, te))};
}

// -------------------------------------------------------------- metrics --

WeightedMetrics weighted_metrics(const std::vector<PredictionInterval>& intervals, const DataSet& rows,
                                 Scenario scenario, const Projector& projector) {
    const auto n = static_cast<std::size_t>(rows.size());
    if (intervals.size() != n) throw InputError("weighted_metrics: intervals and rows differ in length");
    if (n == 0) throw InputError("weighted_metrics: no rows");
    const Vector u = projector.apply_rows(rows.z);
    Vector raw(u.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) raw(i) = scenario_weight(scenario, u(i));
    const Vector p = normalize_weights(raw);
    WeightedMetrics out;
    bool unbounded = false;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& c = intervals[i];
        const double pi = p(static_cast<Eigen::Index>(i));
        if (c.contains(rows.y(static_cast<Eigen::Index>(i)))) out.coverage += pi;
        if (!c.bounded()) {
            if (pi > 0.0) unbounded = true;
        } else {
            out.mean_length += pi * c.length();
        }
    }
    if (unbounded) out.mean_length = kInf;
    return out;
}

std::vector<double> conditional_coverage_check(const std::vector<PredictionInterval>& intervals, const DataSet& rows,
                                               const Projector& projector, const std::vector<double>& edges) {
    if (intervals.size() != static_cast<std::size_t>(rows.size()))
        throw InputError("conditional_coverage_check: intervals and rows differ in length");
    if (!std::is_sorted(edges.begin(), edges.end())) throw InputError("conditional_coverage_check: unsorted edges");
    const Vector u = projector.apply_rows(rows.z);
    std::vector<double> hits(edges.size() + 1, 0.0), counts(edges.size() + 1, 0.0);
    for (Eigen::Index i = 0; i < u.size(); ++i) {
        // bin g holds (e_{g-1}, e_g]
        const auto g = static_cast<std::size_t>(std::lower_bound(edges.begin(), edges.end(), u(i)) - edges.begin());
        counts[g] += 1.0;
        if (intervals[static_cast<std::size_t>(i)].contains(rows.y(i))) hits[g] += 1.0;
    }
    std::vector<double> out(counts.size());
    for (std::size_t g = 0; g < out.size(); ++g) out[g] = counts[g] > 0.0 ? hits[g] / counts[g] : kNaN;
    return out;
}

std::vector<double> conditional_coverage_check(const std::vector<PredictionInterval>& intervals, const DataSet& rows,
                                               const Projector& projector, int z_bins) {
    if (z_bins < 1) throw InputError("conditional_coverage_check: need at least one bin");
    const Vector u = projector.apply_rows(rows.z);
    std::vector<double> sample(u.data(), u.data() + u.size());
    std::vector<double> edges;
    if (!sample.empty())
        for (int j = 1; j < z_bins; ++j) edges.push_back(empirical_quantile(sample, static_cast<double>(j) / z_bins));
    return conditional_coverage_check(intervals, rows, projector, edges);
}

// --------------------------------------------------------- replications --

std::string_view to_string(RadiusClass c) {
    switch (c) {
        case RadiusClass::XZ: return "XZ";
        case RadiusClass::Z: return "Z";
        case RadiusClass::X: return "X";
    }
    return "?";
}

RadiusClass parse_radius_class(std::string_view name) {
    if (name == "XZ") return RadiusClass::XZ;
    if (name == "Z") return RadiusClass::Z;
    if (name == "X") return RadiusClass::X;
    throw ConfigError("unknown radius class '" + std::string(name) + "'");
}

std::string MethodSpec::model_name() const {
    return std::string(radius_class == RadiusClass::X ? to_string(radius.kind) : to_string(family.kind));
}

std::uint64_t replication_seed(std::uint64_t base_seed, int rep_index) {
    RngStream s(base_seed, static_cast<std::uint64_t>(rep_index));
    return s.next_u64();
}

ReplicationContext prepare_replication(const HarnessConfig& config, RngStream& rng) {
    ReplicationContext ctx;
    RngStream data_rng = rng.derive(1);
    RngStream split_rng = rng.derive(2);
    if (config.data) {
        ctx.splits = split(*config.data, config.sizes, split_rng);
    } else {
        const DataSet data = generate_dataset(config.design, config.sizes.total(), data_rng, true);
        ctx.splits = split(data, config.sizes, split_rng);
    }
    ctx.model = fit_sieve_2sls(ctx.splits.train, config.sieve);
    const Matrix pooled_z = concat(ctx.splits.train, ctx.splits.cal).z;
    ctx.projector = build_projector(pooled_z);
    ctx.pooled_u = ctx.projector.apply_rows(pooled_z);
    return ctx;
}

DensityRatioModel fit_ratio_model(const ReplicationContext& ctx, const SieveSpec& sieve,
                                  const DensityRatioConfig& cfg, RngStream& rng) {
    const DataSet& train = ctx.splits.train;
    const auto n = static_cast<std::size_t>(train.size());
    const auto perm = rng.permutation(n);
    const auto half = n / 2;
    const auto a = index_range(perm, 0, half);
    const auto b = index_range(perm, half, n - half);
    // scores on each half come from a fit on the other half
    Vector s(train.size());
    const DataSet ta = train.subset(a), tb = train.subset(b);
    const Vector sb = compute_scores(fit_sieve_2sls(ta, sieve), tb);
    const Vector sa = compute_scores(fit_sieve_2sls(tb, sieve), ta);
    for (std::size_t i = 0; i < a.size(); ++i) s(a[i]) = sa(static_cast<Eigen::Index>(i));
    for (std::size_t i = 0; i < b.size(); ++i) s(b[i]) = sb(static_cast<Eigen::Index>(i));
    return estimate_density_ratio(s, train.x, train.z, cfg, rng);
}

std::vector<PredictionInterval> FittedMethod::intervals(const ReplicationContext& ctx, const DataSet& rows,
                                                        Scenario scenario, double alpha) const {
    if (radius_class != RadiusClass::X) {
        const Indexing indexing = radius_class == RadiusClass::Z ? Indexing::Z : Indexing::XZ;
        return predict_intervals(ctx.model, *calibrator, rows, indexing);
    }
    const ShiftNormalization norm = shift_normalization(scenario, ctx.pooled_u);
    const RecalibrationCutoff cutoff =
        recalibration_cutoff(recal, ctx.model, *radius, scenario, ctx.projector, norm, alpha);
    const Vector centers = predict_h(ctx.model, rows.x);
    const Vector q = radius->evaluate(rows.x);
    std::vector<PredictionInterval> out(static_cast<std::size_t>(rows.size()));
    for (Eigen::Index i = 0; i < rows.size(); ++i)
        out[static_cast<std::size_t>(i)] = {centers(i), std::isinf(cutoff.t_hat) ? kInf : cutoff.t_hat * q(i)};
    return out;
}

FittedMethod fit_method(const HarnessConfig& config, const ReplicationContext& ctx, const MethodSpec& method,
                        const DensityRatioModel* ratio, RngStream& rng) {
    const Splits& sp = ctx.splits;
    FittedMethod fitted;
    fitted.radius_class = method.radius_class;
    if (method.radius_class != RadiusClass::X) {
        const Indexing indexing = method.radius_class == RadiusClass::Z ? Indexing::Z : Indexing::XZ;
        const Matrix reference = indexing_inputs(concat(sp.train, sp.cal), indexing);
        fitted.calibrator.emplace(build_feature_map(method.family, reference), indexing_inputs(sp.cal, indexing),
                                  compute_scores(ctx.model, sp.cal), config.alpha, method.cap_multiplier);
        return fitted;
    }
    if (!ratio) throw InputError("fit_method: the X class needs a density ratio");
    const auto m = static_cast<std::size_t>(sp.cal.size());
    const auto perm = rng.permutation(m);
    const DataSet shape = sp.cal.subset(index_range(perm, 0, m / 2));
    fitted.recal = sp.cal.subset(index_range(perm, m / 2, m - m / 2));
    const Vector s = compute_scores(ctx.model, shape);
    const Matrix R = ratio->ratio_matrix(s, shape.x, shape.z, method.ratio.clip_lo, method.ratio.clip_hi);
    fitted.radius = learn_radius_x(s, shape.x, R, method.radius, method.x_config, config.alpha, rng);
    return fitted;
}

std::vector<ReplicationRecord> run_replication(const HarnessConfig& config, int rep_index,
                                               std::vector<ReplicationFailure>& failures) {
    const std::uint64_t rep_seed = replication_seed(config.base_seed, rep_index);
    RngStream rng(rep_seed, 0);
    std::vector<ReplicationRecord> records;
    ReplicationContext ctx;
    try {
        RngStream ctx_rng = rng.derive(0);
        ctx = prepare_replication(config, ctx_rng);
    } catch (const std::exception& e) {
        failures.push_back({rep_index, rep_seed, "", e.what()});
        return records;
    }

    // one ratio fit per distinct (sieve, ratio config) within the replication
    std::vector<std::pair<DensityRatioConfig, DensityRatioModel>> ratios;
    for (std::size_t k = 0; k < config.methods.size(); ++k) {
        const MethodSpec& method = config.methods[k];
        std::vector<ReplicationRecord> local;
        try {
            const DensityRatioModel* ratio = nullptr;
            if (method.radius_class == RadiusClass::X) {
                auto it = std::find_if(ratios.begin(), ratios.end(),
                                       [&](const auto& r) { return r.first == method.ratio; });
                if (it == ratios.end()) {
                    RngStream ratio_rng = rng.derive(1000 + ratios.size());
                    ratios.emplace_back(method.ratio, fit_ratio_model(ctx, config.sieve, method.ratio, ratio_rng));
                    it = ratios.end() - 1;
                }
                ratio = &it->second;
            }
            RngStream method_rng = rng.derive(100 + k);
            const FittedMethod fitted = fit_method(config, ctx, method, ratio, method_rng);
            std::vector<PredictionInterval> exact;
            if (method.radius_class != RadiusClass::X)
                exact = fitted.intervals(ctx, ctx.splits.test, Scenario::Observed, config.alpha);
            for (Scenario sc : config.scenarios) {
                const auto intervals = method.radius_class == RadiusClass::X
                                           ? fitted.intervals(ctx, ctx.splits.test, sc, config.alpha)
                                           : exact;
                const WeightedMetrics wm = weighted_metrics(intervals, ctx.splits.test, sc, ctx.projector);
                ReplicationRecord rec;
                rec.radius_class = method.radius_class;
                rec.model = method.model_name();
                rec.scenario = sc;
                rec.coverage = wm.coverage;
                rec.mean_length = wm.mean_length;
                rec.n_unbounded = std::count_if(intervals.begin(), intervals.end(),
                                                [](const PredictionInterval& c) { return !c.bounded(); });
                rec.rep_seed = rep_seed;
                rec.rep_index = rep_index;
                rec.method_index = static_cast<int>(k);
                local.push_back(std::move(rec));
            }
        } catch (const std::exception& e) {
            failures.push_back({rep_index, rep_seed, method_label(method), e.what()});
            continue;
        }
        records.insert(records.end(), local.begin(), local.end());
    }
    return records;
}

namespace {

RunResult collect(const HarnessConfig& config, std::vector<std::vector<ReplicationRecord>>& per_rep,
                  std::vector<std::vector<ReplicationFailure>>& per_rep_failures) {
    RunResult result;
    for (std::size_t r = 0; r < per_rep.size(); ++r) {
        result.records.insert(result.records.end(), per_rep[r].begin(), per_rep[r].end());
        result.failures.insert(result.failures.end(), per_rep_failures[r].begin(), per_rep_failures[r].end());
    }
    result.cells = aggregate(config, result.records);
    return result;
}

}  // namespace

RunResult run_replications(const HarnessConfig& config) {
    validate(config);
    const int reps = config.replications;
    std::vector<std::vector<ReplicationRecord>> per_rep(static_cast<std::size_t>(reps));
    std::vector<std::vector<ReplicationFailure>> per_fail(static_cast<std::size_t>(reps));
#pragma omp parallel for schedule(dynamic, 1)
    for (int r = 0; r < reps; ++r) {
        auto& fails = per_fail[static_cast<std::size_t>(r)];
        try {
            per_rep[static_cast<std::size_t>(r)] = run_replication(config, r, fails);
        } catch (const std::exception& e) {
            fails.push_back({r, replication_seed(config.base_seed, r), "", e.what()});
        }
    }
    return collect(config, per_rep, per_fail);
}

RunResult run_replications_serial(const HarnessConfig& config) {
    validate(config);
    const int reps = config.replications;
    std::vector<std::vector<ReplicationRecord>> per_rep(static_cast<std::size_t>(reps));
    std::vector<std::vector<ReplicationFailure>> per_fail(static_cast<std::size_t>(reps));
    for (int r = 0; r < reps; ++r)
        per_rep[static_cast<std::size_t>(r)] = run_replication(config, r, per_fail[static_cast<std::size_t>(r)]);
    return collect(config, per_rep, per_fail);
}

std::vector<CellSummary> aggregate(const HarnessConfig& config, const std::vector<ReplicationRecord>& records) {
    std::vector<CellSummary> cells;
    for (std::size_t k = 0; k < config.methods.size(); ++k) {
        for (Scenario sc : config.scenarios) {
            CellSummary cell;
            cell.radius_class = config.methods[k].radius_class;
            cell.model = config.methods[k].model_name();
            cell.scenario = sc;
            std::vector<double> cov, len;
            for (const auto& r : records) {
                if (r.method_index != static_cast<int>(k) || r.scenario != sc) continue;
                cov.push_back(r.coverage);
                len.push_back(r.mean_length);
            }
            cell.n_reps = static_cast<long>(cov.size());
            cell.n_unbounded_reps = std::count_if(len.begin(), len.end(), [](double l) { return std::isinf(l); });
            auto mean = [](const std::vector<double>& v) {
                return v.empty() ? kNaN : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
            };
            auto sd = [](const std::vector<double>& v, double mu) {
                if (v.size() < 2) return kNaN;
                double ss = 0.0;
                for (double x : v) ss += (x - mu) * (x - mu);
                return std::sqrt(ss / static_cast<double>(v.size() - 1));
            };
            cell.cov_mean = mean(cov);
            cell.cov_sd = sd(cov, cell.cov_mean);
            if (cell.n_unbounded_reps > 0) {
                cell.len_mean = kInf;
                cell.len_sd = kNaN;
            } else {
                cell.len_mean = mean(len);
                cell.len_sd = sd(len, cell.len_mean);
            }
            cells.push_back(std::move(cell));
        }
    }
    return cells;
}

}  // namespace ivccp
