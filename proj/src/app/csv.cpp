#include "ivccp/app/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include "ivccp/error.hpp"

namespace ivccp::app {
namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

bool parse_double(const std::string& cell, double& out) {
    const std::string s = trim(cell);
    if (s.empty()) return false;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (*first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last && std::isfinite(out);
}

}  // namespace

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

CsvTable read_csv(std::istream& in) {
    CsvTable table;
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        auto fields = split_line(line);
        for (auto& f : fields) f = trim(f);
        if (!have_header) {
            table.header = std::move(fields);
            have_header = true;
        } else {
            table.rows.push_back(std::move(fields));
        }
    }
    if (!have_header) throw InputError("csv: missing header row");
    return table;
}

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("csv: cannot open " + path.string());
    return read_csv(in);
}

IngestResult ingest_table(const CsvTable& table, const std::string& y_column,
                          const std::vector<std::string>& x_columns, const std::vector<std::string>& z_columns) {
    if (x_columns.empty() || z_columns.empty()) throw InputError("ingest: need at least one x and one z column");
    auto find = [&](const std::string& name) {
        const auto it = std::find(table.header.begin(), table.header.end(), name);
        if (it == table.header.end()) throw InputError("ingest: column '" + name + "' not found in header");
        return static_cast<std::size_t>(it - table.header.begin());
    };
    const std::size_t yc = find(y_column);
    std::vector<std::size_t> xc, zc;
    for (const auto& n : x_columns) xc.push_back(find(n));
    for (const auto& n : z_columns) zc.push_back(find(n));

    IngestResult res;
    std::set<std::size_t> used{yc};
    used.insert(xc.begin(), xc.end());
    used.insert(zc.begin(), zc.end());
    for (std::size_t c = 0; c < table.header.size(); ++c)
        if (!used.count(c)) res.ignored_columns.push_back(table.header[c]);

    const auto n = static_cast<Eigen::Index>(table.rows.size());
    DataSet& d = res.data;
    d.y.resize(n);
    d.x.resize(n, static_cast<Eigen::Index>(xc.size()));
    d.z.resize(n, static_cast<Eigen::Index>(zc.size()));
    auto cell = [&](Eigen::Index r, std::size_t c) {
        const auto& row = table.rows[static_cast<std::size_t>(r)];
        const std::string where = "row " + std::to_string(r + 1) + ", column '" + table.header[c] + "'";
        if (c >= row.size()) throw InputError("ingest: " + where + ": missing cell");
        double v = 0.0;
        if (!parse_double(row[c], v)) throw InputError("ingest: " + where + ": '" + row[c] + "' is not numeric");
        return v;
    };
    for (Eigen::Index r = 0; r < n; ++r) {
        d.y(r) = cell(r, yc);
        for (std::size_t j = 0; j < xc.size(); ++j) d.x(r, static_cast<Eigen::Index>(j)) = cell(r, xc[j]);
        for (std::size_t j = 0; j < zc.size(); ++j) d.z(r, static_cast<Eigen::Index>(j)) = cell(r, zc[j]);
    }
    return res;
}

void write_dataset(std::ostream& out, const DataSet& data) {
    out << "y";
    for (Eigen::Index j = 0; j < data.dim_x(); ++j) out << ",x" << j + 1;
    for (Eigen::Index j = 0; j < data.dim_z(); ++j) out << ",z" << j + 1;
    out << "\n";
    char buf[64];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << buf;
    };
    for (Eigen::Index i = 0; i < data.size(); ++i) {
        put(data.y(i));
        for (Eigen::Index j = 0; j < data.dim_x(); ++j) out << ",", put(data.x(i, j));
        for (Eigen::Index j = 0; j < data.dim_z(); ++j) out << ",", put(data.z(i, j));
        out << "\n";
    }
}

namespace {

void header(std::ostream& out, const std::vector<std::string>& cols) {
    for (std::size_t k = 0; k < cols.size(); ++k) out << (k ? "," : "") << cols[k];
    out << "\n";
}

std::string quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c == '\n' ? ' ' : c);
    return out + "\"";
}

}  // namespace

void write_results(std::ostream& out, const std::vector<CellSummary>& cells) {
    header(out, results_columns());
    for (const auto& c : cells)
        out << to_string(c.radius_class) << "," << c.model << "," << to_string(c.scenario) << ","
            << format_number(c.cov_mean) << "," << format_number(c.cov_sd) << "," << format_number(c.len_mean) << ","
            << format_number(c.len_sd) << "," << c.n_unbounded_reps << "\n";
}

void write_records(std::ostream& out, const std::vector<ReplicationRecord>& records) {
    header(out, records_columns());
    for (const auto& r : records)
        out << r.rep_seed << "," << to_string(r.radius_class) << "," << r.model << "," << to_string(r.scenario) << ","
            << format_number(r.coverage) << "," << format_number(r.mean_length) << "," << r.n_unbounded << "\n";
}

void write_failures(std::ostream& out, const std::vector<ReplicationFailure>& failures) {
    header(out, {"rep_seed", "method", "message"});
    for (const auto& f : failures) out << f.rep_seed << "," << quote(f.method) << "," << quote(f.message) << "\n";
}

}  // namespace ivccp::app
