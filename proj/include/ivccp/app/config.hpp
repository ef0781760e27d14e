#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ivccp/harness.hpp"

namespace ivccp::app {

/// Either a synthetic design or a CSV file with declared column roles.
struct DatasetSource {
    int synthetic = 1;      // used when csv_path is empty
    std::string csv_path;   // relative paths resolve against the config file
    std::string y_column = "y";
    std::vector<std::string> x_columns{"x"};
    std::vector<std::string> z_columns{"z"};

    bool operator==(const DatasetSource&) const = default;
};

struct RunConfig {
    DatasetSource dataset;
    SplitSizes sizes{};
    double alpha = 0.1;
    std::uint64_t base_seed = 2026;
    int replications = 100;
    SieveSpec sieve{};
    std::vector<MethodSpec> methods;
    std::vector<Scenario> scenarios;
    std::string output = "results";

    bool operator==(const RunConfig&) const = default;
};

/// Parses and validates a JSON document. Errors are ConfigError with a
/// "<source>:<line>: " prefix pointing at the offending value.
RunConfig parse_config(const std::string& text, const std::string& source = "config");
RunConfig load_config(const std::filesystem::path& path);

/// Canonical JSON (every field written out).
std::string serialize_config(const RunConfig& config);

/// Harness configuration; loads the CSV dataset when one is declared.
HarnessConfig to_harness(const RunConfig& config, const std::filesystem::path& base_dir = {});

}  // namespace ivccp::app
