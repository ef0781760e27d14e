#include "ivccp/app/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ivccp/app/csv.hpp"
#include "ivccp/dgp.hpp"
#include "ivccp/error.hpp"

namespace ivccp::app {
namespace {

using nlohmann::json;

std::string escape_token(const std::string& key) {
    std::string out;
    for (char c : key) {
        if (c == '~') out += "~0";
        else if (c == '/') out += "~1";
        else out += c;
    }
    return out;
}

// Maps each JSON pointer to the line where its value starts. Runs only on
// text nlohmann has already accepted, so it can be lenient.
class LineIndex {
public:
    explicit LineIndex(const std::string& text) : t_(text) {
        skip_ws();
        value("");
    }
    int line(const std::string& pointer) const {
        auto it = lines_.find(pointer);
        return it == lines_.end() ? 1 : it->second;
    }

private:
    void skip_ws() {
        while (i_ < t_.size() && std::isspace(static_cast<unsigned char>(t_[i_]))) {
            if (t_[i_] == '\n') ++line_;
            ++i_;
        }
    }
    std::string string_token() {
        std::string out;
        ++i_;  // opening quote
        while (i_ < t_.size() && t_[i_] != '"') {
            if (t_[i_] == '\\' && i_ + 1 < t_.size()) ++i_;
            out += t_[i_++];
        }
        ++i_;
        return out;
    }
    void value(const std::string& ptr) {
        lines_[ptr] = line_;
        if (i_ >= t_.size()) return;
        const char c = t_[i_];
        if (c == '{') {
            ++i_;
            skip_ws();
            while (i_ < t_.size() && t_[i_] != '}') {
                const std::string key = string_token();
                skip_ws();
                ++i_;  // colon
                skip_ws();
                value(ptr + "/" + escape_token(key));
                skip_ws();
                if (i_ < t_.size() && t_[i_] == ',') ++i_;
                skip_ws();
            }
            ++i_;
        } else if (c == '[') {
            ++i_;
            skip_ws();
            for (int k = 0; i_ < t_.size() && t_[i_] != ']'; ++k) {
                value(ptr + "/" + std::to_string(k));
                skip_ws();
                if (i_ < t_.size() && t_[i_] == ',') ++i_;
                skip_ws();
            }
            ++i_;
        } else if (c == '"') {
            string_token();
        } else {
            while (i_ < t_.size() && !std::strchr(",]} \t\r\n", t_[i_])) ++i_;
        }
    }

    const std::string& t_;
    std::size_t i_ = 0;
    int line_ = 1;
    std::map<std::string, int> lines_;
};

class Reader {
public:
    Reader(const LineIndex& lines, std::string source) : lines_(lines), source_(std::move(source)) {}

    [[noreturn]] void fail(const std::string& ptr, const std::string& msg) const {
        throw ConfigError(source_ + ":" + std::to_string(lines_.line(ptr)) + ": " +
                          (ptr.empty() ? std::string("document") : ptr) + ": " + msg);
    }

    void only_keys(const json& obj, const std::string& ptr, std::initializer_list<const char*> allowed) const {
        if (!obj.is_object()) fail(ptr, "expected an object");
        const std::set<std::string> ok(allowed.begin(), allowed.end());
        for (auto it = obj.begin(); it != obj.end(); ++it)
            if (!ok.count(it.key())) fail(ptr + "/" + escape_token(it.key()), "unknown key '" + it.key() + "'");
    }

    double number(const json& obj, const std::string& ptr, const char* key, double fallback) const {
        if (!obj.contains(key)) return fallback;
        const json& v = obj.at(key);
        if (!v.is_number()) fail(ptr + "/" + key, "expected a number");
        return v.get<double>();
    }

    long integer(const json& obj, const std::string& ptr, const char* key, long fallback) const {
        if (!obj.contains(key)) return fallback;
        const json& v = obj.at(key);
        if (!v.is_number_integer()) fail(ptr + "/" + key, "expected an integer");
        return v.get<long>();
    }

    std::uint64_t unsigned_integer(const json& obj, const std::string& ptr, const char* key,
                                   std::uint64_t fallback) const {
        if (!obj.contains(key)) return fallback;
        const json& v = obj.at(key);
        if (!v.is_number_unsigned()) fail(ptr + "/" + key, "expected a nonnegative integer");
        return v.get<std::uint64_t>();
    }

    std::string text(const json& obj, const std::string& ptr, const char* key, const std::string& fallback) const {
        if (!obj.contains(key)) return fallback;
        const json& v = obj.at(key);
        if (!v.is_string()) fail(ptr + "/" + key, "expected a string");
        return v.get<std::string>();
    }

    std::vector<std::string> strings(const json& obj, const std::string& ptr, const char* key,
                                     const std::vector<std::string>& fallback) const {
        if (!obj.contains(key)) return fallback;
        const json& v = obj.at(key);
        const std::string p = ptr + "/" + key;
        if (v.is_string()) return {v.get<std::string>()};
        if (!v.is_array()) fail(p, "expected a string or an array of strings");
        std::vector<std::string> out;
        for (std::size_t k = 0; k < v.size(); ++k) {
            if (!v[k].is_string()) fail(p + "/" + std::to_string(k), "expected a string");
            out.push_back(v[k].get<std::string>());
        }
        return out;
    }

    std::vector<int> layers(const json& obj, const std::string& ptr, const char* key,
                            const std::vector<int>& fallback) const {
        if (!obj.contains(key)) return fallback;
        const json& v = obj.at(key);
        const std::string p = ptr + "/" + key;
        if (!v.is_array()) fail(p, "expected an array of layer widths");
        std::vector<int> out;
        for (std::size_t k = 0; k < v.size(); ++k) {
            if (!v[k].is_number_integer() || v[k].get<long>() < 1)
                fail(p + "/" + std::to_string(k), "layer width must be a positive integer");
            out.push_back(v[k].get<int>());
        }
        return out;
    }

    template <class F>
    auto parse_name(const std::string& ptr, const std::string& name, F&& parser) const {
        try {
            return parser(name);
        } catch (const Error& e) {
            fail(ptr, e.what());
        }
    }

private:
    const LineIndex& lines_;
    std::string source_;
};

MethodSpec read_method(const Reader& rd, const json& m, const std::string& ptr) {
    MethodSpec spec;
    if (!m.is_object()) rd.fail(ptr, "expected an object");
    if (!m.contains("radius_class")) rd.fail(ptr, "missing 'radius_class'");
    spec.radius_class = rd.parse_name(ptr + "/radius_class", rd.text(m, ptr, "radius_class", ""),
                                      [](const std::string& s) { return parse_radius_class(s); });
    if (spec.radius_class != RadiusClass::X) {
        rd.only_keys(m, ptr, {"radius_class", "family", "bins", "landmarks", "gamma", "cap_multiplier"});
        if (!m.contains("family")) rd.fail(ptr, "missing 'family'");
        spec.family.kind = rd.parse_name(ptr + "/family", rd.text(m, ptr, "family", ""),
                                         [](const std::string& s) { return parse_feature_kind(s); });
        spec.family.bins = static_cast<int>(rd.integer(m, ptr, "bins", spec.family.bins));
        spec.family.landmarks = static_cast<int>(rd.integer(m, ptr, "landmarks", spec.family.landmarks));
        spec.family.gamma = rd.number(m, ptr, "gamma", spec.family.gamma);
        spec.cap_multiplier = rd.number(m, ptr, "cap_multiplier", spec.cap_multiplier);
        if (spec.family.bins < 1) rd.fail(ptr + "/bins", "must be at least 1");
        if (spec.family.landmarks < 1) rd.fail(ptr + "/landmarks", "must be at least 1");
        if (!(spec.family.gamma > 0.0)) rd.fail(ptr + "/gamma", "must be positive");
        if (!(spec.cap_multiplier > 0.0)) rd.fail(ptr + "/cap_multiplier", "must be positive");
        return spec;
    }
    rd.only_keys(m, ptr, {"radius_class", "model", "bins", "landmarks", "gamma", "hidden", "lambda", "kappa",
                          "steps", "lr", "ratio"});
    if (!m.contains("model")) rd.fail(ptr, "missing 'model'");
    spec.radius.kind = rd.parse_name(ptr + "/model", rd.text(m, ptr, "model", ""),
                                     [](const std::string& s) { return parse_radius_kind(s); });
    spec.radius.bins = static_cast<int>(rd.integer(m, ptr, "bins", spec.radius.bins));
    spec.radius.landmarks = static_cast<int>(rd.integer(m, ptr, "landmarks", spec.radius.landmarks));
    spec.radius.gamma = rd.number(m, ptr, "gamma", spec.radius.gamma);
    spec.radius.hidden = rd.layers(m, ptr, "hidden", spec.radius.hidden);
    spec.x_config.lambda = rd.number(m, ptr, "lambda", spec.x_config.lambda);
    spec.x_config.kappa = rd.number(m, ptr, "kappa", spec.x_config.kappa);
    spec.x_config.adam.steps = rd.integer(m, ptr, "steps", spec.x_config.adam.steps);
    spec.x_config.adam.lr = rd.number(m, ptr, "lr", spec.x_config.adam.lr);
    if (spec.radius.bins < 1) rd.fail(ptr + "/bins", "must be at least 1");
    if (spec.radius.landmarks < 1) rd.fail(ptr + "/landmarks", "must be at least 1");
    if (!(spec.radius.gamma > 0.0)) rd.fail(ptr + "/gamma", "must be positive");
    if (spec.x_config.lambda < 0.0) rd.fail(ptr + "/lambda", "must be nonnegative");
    if (!(spec.x_config.kappa > 0.0)) rd.fail(ptr + "/kappa", "must be positive");
    if (spec.x_config.adam.steps < 1) rd.fail(ptr + "/steps", "must be at least 1");
    if (spec.x_config.adam.lr < 0.0) rd.fail(ptr + "/lr", "must be nonnegative");
    if (m.contains("ratio")) {
        const json& r = m.at("ratio");
        const std::string rp = ptr + "/ratio";
        rd.only_keys(r, rp, {"hidden", "folds", "epochs", "lr", "clip_lo", "clip_hi"});
        auto& rc = spec.ratio;
        rc.hidden = rd.layers(r, rp, "hidden", rc.hidden);
        rc.folds = static_cast<int>(rd.integer(r, rp, "folds", rc.folds));
        rc.train.epochs = static_cast<int>(rd.integer(r, rp, "epochs", rc.train.epochs));
        rc.train.lr = rd.number(r, rp, "lr", rc.train.lr);
        rc.clip_lo = rd.number(r, rp, "clip_lo", rc.clip_lo);
        rc.clip_hi = rd.number(r, rp, "clip_hi", rc.clip_hi);
        if (rc.folds < 1) rd.fail(rp + "/folds", "must be at least 1");
        if (rc.train.epochs < 1) rd.fail(rp + "/epochs", "must be at least 1");
        if (rc.train.lr < 0.0) rd.fail(rp + "/lr", "must be nonnegative");
        if (!(rc.clip_lo > 0.0) || !(rc.clip_hi >= rc.clip_lo)) rd.fail(rp, "need 0 < clip_lo <= clip_hi");
    }
    return spec;
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& source) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        const std::size_t upto = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
        const long line = 1 + std::count(text.begin(), text.begin() + static_cast<long>(upto), '\n');
        throw ConfigError(source + ":" + std::to_string(line) + ": malformed JSON: " + e.what());
    }
    const LineIndex lines(text);
    const Reader rd(lines, source);
    rd.only_keys(doc, "", {"dataset", "sizes", "alpha", "seeds", "sieve", "methods", "scenarios", "output"});

    RunConfig cfg;
    if (doc.contains("dataset")) {
        const json& d = doc.at("dataset");
        rd.only_keys(d, "/dataset", {"synthetic", "csv", "y", "x", "z"});
        if (d.contains("csv")) {
            if (d.contains("synthetic")) rd.fail("/dataset", "give either 'synthetic' or 'csv', not both");
            cfg.dataset.csv_path = rd.text(d, "/dataset", "csv", "");
            if (cfg.dataset.csv_path.empty()) rd.fail("/dataset/csv", "empty path");
            cfg.dataset.y_column = rd.text(d, "/dataset", "y", cfg.dataset.y_column);
            cfg.dataset.x_columns = rd.strings(d, "/dataset", "x", cfg.dataset.x_columns);
            cfg.dataset.z_columns = rd.strings(d, "/dataset", "z", cfg.dataset.z_columns);
            if (cfg.dataset.x_columns.empty()) rd.fail("/dataset/x", "at least one x column is required");
            if (cfg.dataset.z_columns.empty()) rd.fail("/dataset/z", "at least one z column is required");
        } else {
            for (const char* k : {"y", "x", "z"})
                if (d.contains(k)) rd.fail(std::string("/dataset/") + k, "column roles need a 'csv' dataset");
            cfg.dataset.synthetic = static_cast<int>(rd.integer(d, "/dataset", "synthetic", 1));
            try {
                design_dims(cfg.dataset.synthetic);
            } catch (const Error& e) {
                rd.fail("/dataset/synthetic", e.what());
            }
        }
    }
    if (doc.contains("sizes")) {
        const json& s = doc.at("sizes");
        rd.only_keys(s, "/sizes", {"train", "cal", "test"});
        cfg.sizes.train = rd.integer(s, "/sizes", "train", cfg.sizes.train);
        cfg.sizes.cal = rd.integer(s, "/sizes", "cal", cfg.sizes.cal);
        cfg.sizes.test = rd.integer(s, "/sizes", "test", cfg.sizes.test);
        if (cfg.sizes.train < 2) rd.fail("/sizes/train", "must be at least 2");
        if (cfg.sizes.cal < 2) rd.fail("/sizes/cal", "must be at least 2");
        if (cfg.sizes.test < 1) rd.fail("/sizes/test", "must be at least 1");
    }
    cfg.alpha = rd.number(doc, "", "alpha", cfg.alpha);
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) rd.fail("/alpha", "must lie in (0, 1)");
    if (doc.contains("seeds")) {
        const json& s = doc.at("seeds");
        rd.only_keys(s, "/seeds", {"base", "replications"});
        cfg.base_seed = rd.unsigned_integer(s, "/seeds", "base", cfg.base_seed);
        cfg.replications = static_cast<int>(rd.integer(s, "/seeds", "replications", cfg.replications));
        if (cfg.replications < 1) rd.fail("/seeds/replications", "must be at least 1");
    }
    if (doc.contains("sieve")) {
        const json& s = doc.at("sieve");
        rd.only_keys(s, "/sieve", {"degree_x", "degree_z", "terms", "ridge"});
        cfg.sieve.degree_x = static_cast<int>(rd.integer(s, "/sieve", "degree_x", cfg.sieve.degree_x));
        cfg.sieve.degree_z = static_cast<int>(rd.integer(s, "/sieve", "degree_z", cfg.sieve.degree_z));
        if (s.contains("terms"))
            cfg.sieve.terms = rd.parse_name("/sieve/terms", rd.text(s, "/sieve", "terms", ""),
                                            [](const std::string& n) { return parse_poly_terms(n); });
        cfg.sieve.ridge = rd.number(s, "/sieve", "ridge", cfg.sieve.ridge);
        if (cfg.sieve.degree_x < 1) rd.fail("/sieve/degree_x", "must be at least 1");
        if (cfg.sieve.degree_z < 1) rd.fail("/sieve/degree_z", "must be at least 1");
        if (cfg.sieve.ridge < 0.0) rd.fail("/sieve/ridge", "must be nonnegative");
    }
    if (!doc.contains("methods")) rd.fail("", "missing 'methods'");
    const json& methods = doc.at("methods");
    if (!methods.is_array() || methods.empty()) rd.fail("/methods", "expected a nonempty array of methods");
    for (std::size_t k = 0; k < methods.size(); ++k)
        cfg.methods.push_back(read_method(rd, methods[k], "/methods/" + std::to_string(k)));
    if (!doc.contains("scenarios")) rd.fail("", "missing 'scenarios'");
    const json& scen = doc.at("scenarios");
    if (!scen.is_array() || scen.empty()) rd.fail("/scenarios", "expected a nonempty array of scenario names");
    for (std::size_t k = 0; k < scen.size(); ++k) {
        const std::string p = "/scenarios/" + std::to_string(k);
        if (!scen[k].is_string()) rd.fail(p, "expected a scenario name");
        cfg.scenarios.push_back(
            rd.parse_name(p, scen[k].get<std::string>(), [](const std::string& n) { return parse_scenario(n); }));
    }
    cfg.output = rd.text(doc, "", "output", cfg.output);
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path.string() + ": cannot open config file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), path.string());
}

std::string serialize_config(const RunConfig& c) {
    json doc = json::object();
    if (c.dataset.csv_path.empty()) {
        doc["dataset"] = {{"synthetic", c.dataset.synthetic}};
    } else {
        doc["dataset"] = {{"csv", c.dataset.csv_path},
                          {"y", c.dataset.y_column},
                          {"x", c.dataset.x_columns},
                          {"z", c.dataset.z_columns}};
    }
    doc["sizes"] = {{"train", c.sizes.train}, {"cal", c.sizes.cal}, {"test", c.sizes.test}};
    doc["alpha"] = c.alpha;
    doc["seeds"] = {{"base", c.base_seed}, {"replications", c.replications}};
    doc["sieve"] = {{"degree_x", c.sieve.degree_x},
                    {"degree_z", c.sieve.degree_z},
                    {"terms", std::string(to_string(c.sieve.terms))},
                    {"ridge", c.sieve.ridge}};
    json methods = json::array();
    for (const auto& m : c.methods) {
        json j;
        j["radius_class"] = std::string(to_string(m.radius_class));
        if (m.radius_class != RadiusClass::X) {
            j["family"] = std::string(to_string(m.family.kind));
            j["bins"] = m.family.bins;
            j["landmarks"] = m.family.landmarks;
            j["gamma"] = m.family.gamma;
            j["cap_multiplier"] = m.cap_multiplier;
        } else {
            j["model"] = std::string(to_string(m.radius.kind));
            j["bins"] = m.radius.bins;
            j["landmarks"] = m.radius.landmarks;
            j["gamma"] = m.radius.gamma;
            j["hidden"] = m.radius.hidden;
            j["lambda"] = m.x_config.lambda;
            j["kappa"] = m.x_config.kappa;
            j["steps"] = m.x_config.adam.steps;
            j["lr"] = m.x_config.adam.lr;
            j["ratio"] = {{"hidden", m.ratio.hidden},       {"folds", m.ratio.folds},
                          {"epochs", m.ratio.train.epochs}, {"lr", m.ratio.train.lr},
                          {"clip_lo", m.ratio.clip_lo},     {"clip_hi", m.ratio.clip_hi}};
        }
        methods.push_back(std::move(j));
    }
    doc["methods"] = std::move(methods);
    json scen = json::array();
    for (Scenario s : c.scenarios) scen.push_back(std::string(to_string(s)));
    doc["scenarios"] = std::move(scen);
    doc["output"] = c.output;
    return doc.dump(2) + "\n";
}

HarnessConfig to_harness(const RunConfig& c, const std::filesystem::path& base_dir) {
    HarnessConfig h;
    h.design = c.dataset.synthetic;
    if (!c.dataset.csv_path.empty()) {
        std::filesystem::path p = c.dataset.csv_path;
        if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
        const IngestResult ing =
            ingest_table(read_csv(p), c.dataset.y_column, c.dataset.x_columns, c.dataset.z_columns);
        h.data = ing.data;
    }
    h.sizes = c.sizes;
    h.alpha = c.alpha;
    h.base_seed = c.base_seed;
    h.replications = c.replications;
    h.methods = c.methods;
    h.scenarios = c.scenarios;
    h.sieve = c.sieve;
    return h;
}

}  // namespace ivccp::app
