#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace ivccp::app {

enum ExitCode : int { kExitOk = 0, kExitError = 1, kExitConfig = 2, kExitRunFailed = 3 };

/// Runs the configured replications and writes results.csv, records.csv and
/// failures.csv into the config's output directory (or `output_override`).
int cmd_run(const std::filesystem::path& config_path, const std::filesystem::path& output_override,
            std::ostream& log);

struct SurfaceGrid {
    double x_min = -2.0;
    double x_max = 2.0;
    double z_min = -1.0;
    double z_max = 1.0;
    int steps = 41;
};

/// One fit on replication 0 of the config; evaluates every method on the
/// steps x steps grid. X-indexed methods use the first configured scenario.
int cmd_surface(const std::filesystem::path& config_path, const SurfaceGrid& grid,
                const std::filesystem::path& output_csv, std::ostream& log);

int cmd_ingest(const std::filesystem::path& csv_path, const std::string& y_column,
               const std::vector<std::string>& x_columns, const std::vector<std::string>& z_columns,
               const std::filesystem::path& output_csv, std::ostream& log);

}  // namespace ivccp::app
