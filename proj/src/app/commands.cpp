#include "ivccp/app/commands.hpp"

#include <fstream>
#include <limits>
#include <optional>
#include <ostream>

#include "ivccp/app/config.hpp"
#include "ivccp/app/csv.hpp"
#include "ivccp/dgp.hpp"
#include "ivccp/error.hpp"

namespace ivccp::app {
namespace {

namespace fs = std::filesystem;

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    return out;
}

template <class F>
int guarded(std::ostream& log, F&& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        log << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        log << "error: " << e.what() << "\n";
        return kExitError;
    }
}

}  // namespace

int cmd_run(const fs::path& config_path, const fs::path& output_override, std::ostream& log) {
    return guarded(log, [&] {
        const RunConfig cfg = load_config(config_path);
        const HarnessConfig h = to_harness(cfg, config_path.parent_path());
        const RunResult res = run_replications(h);
        const fs::path dir = output_override.empty() ? fs::path(cfg.output) : output_override;
        fs::create_directories(dir);
        {
            auto out = open_out(dir / "results.csv");
            write_results(out, res.cells);
        }
        {
            auto out = open_out(dir / "records.csv");
            write_records(out, res.records);
        }
        {
            auto out = open_out(dir / "failures.csv");
            write_failures(out, res.failures);
        }
        long completed = 0;
        for (const auto& c : res.cells) completed += c.n_reps > 0;
        log << "wrote " << res.cells.size() << " cells and " << res.records.size() << " records to " << dir.string()
            << "\n";
        if (!res.failures.empty()) {
            log << res.failures.size() << " failure(s):\n";
            for (const auto& f : res.failures)
                log << "  rep " << f.rep_index << " (seed " << f.rep_seed << ")"
                    << (f.method.empty() ? "" : " " + f.method) << ": " << f.message << "\n";
        }
        if (completed == 0) {
            log << "no cell completed\n";
            return static_cast<int>(kExitRunFailed);
        }
        return static_cast<int>(kExitOk);
    });
}

int cmd_surface(const fs::path& config_path, const SurfaceGrid& grid, const fs::path& output_csv,
                std::ostream& log) {
    return guarded(log, [&] {
        const RunConfig cfg = load_config(config_path);
        const HarnessConfig h = to_harness(cfg, config_path.parent_path());
        const DesignDims dims = h.data ? DesignDims{h.data->dim_x(), h.data->dim_z()} : design_dims(h.design);
        if (dims.dim_x != 1 || dims.dim_z != 1)
            throw ConfigError("surface grids need scalar x and z; this design has dim_x = " +
                              std::to_string(dims.dim_x) + ", dim_z = " + std::to_string(dims.dim_z));
        if (grid.steps < 1) throw ConfigError("surface grid needs at least one step");
        if (!(grid.x_max >= grid.x_min) || !(grid.z_max >= grid.z_min))
            throw ConfigError("surface grid bounds are reversed");

        RngStream rng(replication_seed(h.base_seed, 0), 0);
        RngStream ctx_rng = rng.derive(0);
        const ReplicationContext ctx = prepare_replication(h, ctx_rng);

        const auto n = static_cast<Eigen::Index>(grid.steps) * grid.steps;
        DataSet points;
        points.y = Vector::Zero(n);
        points.x.resize(n, 1);
        points.z.resize(n, 1);
        auto at = [&](double lo, double hi, int k) {
            return grid.steps == 1 ? lo : lo + (hi - lo) * k / static_cast<double>(grid.steps - 1);
        };
        for (int a = 0; a < grid.steps; ++a)
            for (int b = 0; b < grid.steps; ++b) {
                const Eigen::Index r = static_cast<Eigen::Index>(a) * grid.steps + b;
                points.x(r, 0) = at(grid.x_min, grid.x_max, a);
                points.z(r, 0) = at(grid.z_min, grid.z_max, b);
            }

        auto out = open_out(output_csv);
        for (std::size_t k = 0; k < surface_columns().size(); ++k) out << (k ? "," : "") << surface_columns()[k];
        out << "\n";
        const Scenario target = h.scenarios.front();
        for (std::size_t k = 0; k < h.methods.size(); ++k) {
            const MethodSpec& m = h.methods[k];
            std::optional<DensityRatioModel> ratio;
            if (m.radius_class == RadiusClass::X) {
                RngStream ratio_rng = rng.derive(1000);
                ratio.emplace(fit_ratio_model(ctx, h.sieve, m.ratio, ratio_rng));
            }
            RngStream method_rng = rng.derive(100 + k);
            const FittedMethod fitted = fit_method(h, ctx, m, ratio ? &*ratio : nullptr, method_rng);
            const auto intervals = fitted.intervals(ctx, points, target, h.alpha);
            const std::string label = std::string(to_string(m.radius_class)) + "/" + m.model_name();
            for (Eigen::Index r = 0; r < n; ++r) {
                const auto& c = intervals[static_cast<std::size_t>(r)];
                out << label << "," << format_number(points.x(r, 0)) << "," << format_number(points.z(r, 0)) << ","
                    << format_number(c.bounded() ? c.lower() : -std::numeric_limits<double>::infinity()) << ","
                    << format_number(c.bounded() ? c.upper() : std::numeric_limits<double>::infinity()) << "\n";
            }
        }
        log << "wrote " << n * static_cast<Eigen::Index>(h.methods.size()) << " grid rows to "
            << output_csv.string() << "\n";
        return static_cast<int>(kExitOk);
    });
}

int cmd_ingest(const fs::path& csv_path, const std::string& y_column, const std::vector<std::string>& x_columns,
               const std::vector<std::string>& z_columns, const fs::path& output_csv, std::ostream& log) {
    return guarded(log, [&] {
        const IngestResult res = ingest_table(read_csv(csv_path), y_column, x_columns, z_columns);
        if (!res.ignored_columns.empty()) {
            log << "warning: ignoring unused columns:";
            for (const auto& c : res.ignored_columns) log << " " << c;
            log << "\n";
        }
        auto out = open_out(output_csv);
        write_dataset(out, res.data);
        log << "ingested " << res.data.size() << " rows (" << res.data.dim_x() << " x, " << res.data.dim_z()
            << " z) into " << output_csv.string() << "\n";
        return static_cast<int>(kExitOk);
    });
}

}  // namespace ivccp::app
