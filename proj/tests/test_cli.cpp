#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "ivccp/app/commands.hpp"
#include "ivccp/app/config.hpp"
#include "ivccp/app/csv.hpp"
#include "ivccp/error.hpp"

using namespace ivccp;
using namespace ivccp::app;
namespace fs = std::filesystem;

namespace {

const fs::path kTmp = IVCCP_TEST_TMP;
const fs::path kGolden = IVCCP_GOLDEN_DIR;

fs::path write_file(const std::string& name, const std::string& text) {
    fs::create_directories(kTmp);
    const fs::path p = kTmp / name;
    std::ofstream(p, std::ios::binary) << text;
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string config_error(const std::string& text) {
    try {
        parse_config(text, "cfg.json");
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

const char* kSmall = R"({
  "dataset": {"synthetic": 1},
  "sizes": {"train": 300, "cal": 80, "test": 100},
  "seeds": {"base": 7, "replications": 2},
  "methods": [{"radius_class": "Z", "family": "linear"}],
  "scenarios": ["observed"]
})";

int run_binary(const std::string& args) {
    const std::string cmd = std::string(IVCCP_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config round trip") {
    RunConfig cfg = parse_config(kSmall);
    CHECK(cfg.sizes.train == 300);
    CHECK(cfg.base_seed == 7);
    CHECK(cfg.replications == 2);
    CHECK(cfg.alpha == 0.1);
    CHECK(cfg.methods.size() == 1);
    CHECK(parse_config(serialize_config(cfg)) == cfg);

    MethodSpec x;
    x.radius_class = RadiusClass::X;
    x.radius.kind = RadiusKind::Rkhs;
    x.x_config.lambda = 12.5;
    x.ratio.hidden = {16, 8};
    cfg.methods.push_back(x);
    cfg.scenarios = all_scenarios();
    cfg.sieve.terms = PolyTerms::Pairwise;
    cfg.dataset = DatasetSource{1, "data.csv", "outcome", {"a", "b"}, {"c"}};
    CHECK(parse_config(serialize_config(cfg)) == cfg);

    for (const char* f : {"minimal.json", "dataset1_all.json", "dataset2_all.json", "dataset3_all.json",
                          "figure_surface.json"}) {
        const RunConfig shipped = load_config(fs::path(IVCCP_CONFIG_DIR) / f);
        CHECK(parse_config(serialize_config(shipped)) == shipped);
    }
}

TEST_CASE("config errors point at the offending line") {
    const std::string bad_alpha = "{\n  \"alpha\": 1.5,\n  \"methods\": [{\"radius_class\": \"Z\", \"family\": \"linear\"}],\n"
                                  "  \"scenarios\": [\"observed\"]\n}";
    const std::string e1 = config_error(bad_alpha);
    CHECK(e1.find("cfg.json:2:") == 0);
    CHECK(e1.find("/alpha") != std::string::npos);

    const std::string bad_family = "{\n  \"methods\": [\n    {\"radius_class\": \"Z\",\n     \"family\": \"spline\"}\n  ],\n"
                                   "  \"scenarios\": [\"observed\"]\n}";
    CHECK(config_error(bad_family).find("cfg.json:4:") == 0);

    const std::string unknown = "{\n  \"methods\": [{\"radius_class\": \"Z\", \"family\": \"linear\"}],\n"
                                "  \"scenarios\": [\"observed\"],\n  \"colour\": 3\n}";
    const std::string e3 = config_error(unknown);
    CHECK(e3.find("cfg.json:4:") == 0);
    CHECK(e3.find("colour") != std::string::npos);

    CHECK(config_error("{\n  \"alpha\": ,\n}").find("cfg.json:2:") == 0);
    CHECK(config_error("{\"scenarios\": [\"observed\"]}").find("methods") != std::string::npos);
    CHECK(config_error("{\"methods\": [], \"scenarios\": [\"observed\"]}").find("/methods") != std::string::npos);
}

TEST_CASE("csv number format") {
    CHECK(format_number(std::numeric_limits<double>::infinity()) == "inf");
    CHECK(format_number(-std::numeric_limits<double>::infinity()) == "-inf");
    CHECK(format_number(std::nan("")) == "nan");
    CHECK(format_number(0.25) == "0.25");
}

TEST_CASE("results and records match the golden files") {
    const double inf = std::numeric_limits<double>::infinity();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<CellSummary> cells{
        {RadiusClass::Z, "linear", Scenario::Observed, 0.906, 0.02, 4.046, 0.33, 0, 100},
        {RadiusClass::XZ, "bins", Scenario::StepTilt, 0.91, 0.018, inf, nan, 3, 100},
        {RadiusClass::X, "mlp", Scenario::LocalTilt, 0.875, nan, 2.5, nan, 0, 1},
    };
    std::ostringstream results;
    write_results(results, cells);
    CHECK(results.str() == slurp(kGolden / "results.csv"));

    std::vector<ReplicationRecord> recs{
        {RadiusClass::Z, "linear", Scenario::Observed, 0.9, 3.75, 0, 12345678901234567890ULL, 0, 0},
        {RadiusClass::X, "rkhs", Scenario::LinearTilt, 0.8815, inf, 2, 42, 1, 1},
    };
    std::ostringstream records;
    write_records(records, recs);
    CHECK(records.str() == slurp(kGolden / "records.csv"));
}

TEST_CASE("run writes one row per cell and is reproducible") {
    const fs::path cfg = write_file("small.json", kSmall);
    std::ostringstream log;
    REQUIRE(cmd_run(cfg, kTmp / "run_a", log) == kExitOk);
    REQUIRE(cmd_run(cfg, kTmp / "run_b", log) == kExitOk);
    for (const char* f : {"results.csv", "records.csv", "failures.csv"})
        CHECK(slurp(kTmp / "run_a" / f) == slurp(kTmp / "run_b" / f));
    const CsvTable res = read_csv(kTmp / "run_a" / "results.csv");
    CHECK(res.header == results_columns());
    REQUIRE(res.rows.size() == 1);
    CHECK(res.rows[0][0] == "Z");
    CHECK(res.rows[0][1] == "linear");
    CHECK(res.rows[0][2] == "observed");
    const CsvTable recs = read_csv(kTmp / "run_a" / "records.csv");
    CHECK(recs.header == records_columns());
    CHECK(recs.rows.size() == 2);
}

TEST_CASE("run reports total failure") {
    write_file("tiny.csv", "y,x,z\n1,2,3\n4,5,6\n");
    const fs::path cfg = write_file("tiny.json", R"({
  "dataset": {"csv": "tiny.csv"},
  "sizes": {"train": 300, "cal": 80, "test": 100},
  "seeds": {"base": 7, "replications": 2},
  "methods": [{"radius_class": "Z", "family": "linear"}],
  "scenarios": ["observed"]
})");
    std::ostringstream log;
    CHECK(cmd_run(cfg, kTmp / "run_tiny", log) == kExitRunFailed);
    CHECK(log.str().find("requested") != std::string::npos);
    CHECK(read_csv(kTmp / "run_tiny" / "failures.csv").rows.size() == 2);
}

TEST_CASE("surface grids") {
    const fs::path cfg = write_file("surface.json", R"({
  "dataset": {"synthetic": 1},
  "sizes": {"train": 300, "cal": 100, "test": 20},
  "seeds": {"base": 11, "replications": 1},
  "methods": [
    {"radius_class": "Z", "family": "linear"},
    {"radius_class": "X", "model": "linear", "steps": 200, "ratio": {"hidden": [8], "epochs": 40}}
  ],
  "scenarios": ["observed"]
})");
    std::ostringstream log;
    SurfaceGrid two{-1.0, 1.0, -0.5, 0.5, 2};
    REQUIRE(cmd_surface(cfg, two, kTmp / "surface2.csv", log) == kExitOk);
    const CsvTable small = read_csv(kTmp / "surface2.csv");
    CHECK(small.header == surface_columns());
    CHECK(small.rows.size() == 8);

    SurfaceGrid grid{-2.0, 2.0, -1.0, 1.0, 5};
    REQUIRE(cmd_surface(cfg, grid, kTmp / "surface5.csv", log) == kExitOk);
    const CsvTable t = read_csv(kTmp / "surface5.csv");
    REQUIRE(t.rows.size() == 50);

    // reference radii for the Z method from the same replication
    const HarnessConfig h = to_harness(load_config(cfg), kTmp);
    RngStream rng(replication_seed(h.base_seed, 0), 0);
    RngStream ctx_rng = rng.derive(0);
    const ReplicationContext ctx = prepare_replication(h, ctx_rng);
    RngStream method_rng = rng.derive(100);
    const FittedMethod z_fit = fit_method(h, ctx, h.methods[0], nullptr, method_rng);

    auto num = [](const std::string& s) { return std::stod(s); };
    for (int a = 0; a < 5; ++a)
        for (int b = 0; b < 5; ++b) {
            const auto& zr = t.rows[static_cast<std::size_t>(a * 5 + b)];
            const auto& zr0 = t.rows[static_cast<std::size_t>(b)];
            CHECK(zr[0] == "Z/linear");
            const double width = num(zr[4]) - num(zr[3]);
            CHECK(width == doctest::Approx(num(zr0[4]) - num(zr0[3])).epsilon(1e-8));
            Vector z(1);
            z << num(zr[2]);
            const double r = calibrate_radius(*z_fit.calibrator, (*z_fit.calibrator->feature_map())(z));
            CHECK(width == doctest::Approx(2 * r).epsilon(1e-8));

            const auto& xr = t.rows[static_cast<std::size_t>(25 + a * 5 + b)];
            const auto& xr0 = t.rows[static_cast<std::size_t>(25 + a * 5)];
            CHECK(xr[0] == "X/linear");
            CHECK(xr[3] == xr0[3]);
            CHECK(xr[4] == xr0[4]);
        }

    const fs::path multi = write_file("multi.json", R"({
  "dataset": {"synthetic": 2},
  "methods": [{"radius_class": "Z", "family": "linear"}],
  "scenarios": ["observed"]
})");
    std::ostringstream err;
    CHECK(cmd_surface(multi, grid, kTmp / "never.csv", err) == kExitConfig);
    CHECK(err.str().find("dim_x = 3") != std::string::npos);
}

TEST_CASE("ingest") {
    const fs::path csv = write_file("toy.csv", "y,x,z,note\n1,0.5,-1,a\n2,1.5,0,b\n3,\"2.5\",1,c\n");
    std::ostringstream log;
    REQUIRE(cmd_ingest(csv, "y", {"x"}, {"z"}, kTmp / "toy_out.csv", log) == kExitOk);
    CHECK(log.str().find("warning: ignoring unused columns: note") != std::string::npos);
    const CsvTable out = read_csv(kTmp / "toy_out.csv");
    CHECK(out.header == std::vector<std::string>{"y", "x1", "z1"});
    CHECK(out.rows.size() == 3);
    CHECK(out.rows[2][1] == "2.5");

    const IngestResult direct = ingest_table(read_csv(csv), "y", {"x"}, {"z"});
    CHECK(direct.data.size() == 3);
    CHECK(direct.ignored_columns == std::vector<std::string>{"note"});

    std::ostringstream missing;
    CHECK(cmd_ingest(csv, "y", {"x", "w"}, {"z"}, kTmp / "no.csv", missing) == kExitError);
    CHECK(missing.str().find("'w'") != std::string::npos);

    const fs::path bad = write_file("bad.csv", "y,x,z\n1,2,3\n4,five,6\n");
    try {
        ingest_table(read_csv(bad), "y", {"x"}, {"z"});
        FAIL("expected an error");
    } catch (const InputError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("row 2") != std::string::npos);
        CHECK(msg.find("'x'") != std::string::npos);
        CHECK(msg.find("five") != std::string::npos);
    }
}

TEST_CASE("binary exit codes") {
    const fs::path bad = write_file("bad_cfg.json", "{\"alpha\": 3, \"methods\": [], \"scenarios\": []}");
    CHECK(run_binary("run " + bad.string()) == kExitConfig);
    const fs::path good = write_file("small_bin.json", kSmall);
    CHECK(run_binary("run " + good.string() + " -o " + (kTmp / "bin_run").string()) == kExitOk);
    CHECK(fs::exists(kTmp / "bin_run" / "results.csv"));
    CHECK(run_binary("") != 0);
}
