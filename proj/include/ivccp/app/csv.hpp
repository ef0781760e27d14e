#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "ivccp/harness.hpp"

namespace ivccp::app {

/// "inf", "-inf", "nan" or a round-trippable decimal.
std::string format_number(double v);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

/// Comma-separated with a header row; double-quoted fields may contain commas.
CsvTable read_csv(std::istream& in);
CsvTable read_csv(const std::filesystem::path& path);

struct IngestResult {
    DataSet data;
    std::vector<std::string> ignored_columns;
};

/// Extracts the declared roles. Missing columns and non-numeric cells raise
/// InputError naming the column (and the 1-based data row).
IngestResult ingest_table(const CsvTable& table, const std::string& y_column,
                          const std::vector<std::string>& x_columns, const std::vector<std::string>& z_columns);

/// Normalized dataset file: header y,x1..xk,z1..zl.
void write_dataset(std::ostream& out, const DataSet& data);

inline const std::vector<std::string>& results_columns() {
    static const std::vector<std::string> cols{"radius_class", "family_or_model", "scenario", "cov_mean",
                                               "cov_sd",       "len_mean",        "len_sd",   "n_unbounded_reps"};
    return cols;
}
inline const std::vector<std::string>& records_columns() {
    static const std::vector<std::string> cols{"rep_seed", "radius_class", "family_or_model", "scenario",
                                               "coverage", "length",       "n_unbounded"};
    return cols;
}
inline const std::vector<std::string>& surface_columns() {
    static const std::vector<std::string> cols{"method", "x", "z", "lower", "upper"};
    return cols;
}

void write_results(std::ostream& out, const std::vector<CellSummary>& cells);
void write_records(std::ostream& out, const std::vector<ReplicationRecord>& records);
void write_failures(std::ostream& out, const std::vector<ReplicationFailure>& failures);

}  // namespace ivccp::app
