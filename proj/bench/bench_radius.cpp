// Parallel kernels against their serial references.
#include <benchmark/benchmark.h>

#include "ivccp/conformal_exact.hpp"
#include "ivccp/harness.hpp"

using namespace ivccp;

namespace {

struct RadiusFixture {
    ExactCalibrator cal;
    Matrix tests;
};

RadiusFixture make_fixture(Eigen::Index test_rows) {
    RngStream rng(42, 0);
    const Eigen::Index m = 200;
    Matrix phi(m, 3);
    Vector s(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        phi.row(i) << 1.0, rng.uniform(-1, 1), rng.uniform(-1, 1);
        s(i) = std::abs(rng.normal()) * (1.0 + 0.5 * phi(i, 1));
    }
    Matrix tests(test_rows, 3);
    for (Eigen::Index i = 0; i < test_rows; ++i) tests.row(i) << 1.0, rng.uniform(-1, 1), rng.uniform(-1, 1);
    return {ExactCalibrator(phi, s, 0.1), tests};
}

void BM_RadiiParallel(benchmark::State& state) {
    const RadiusFixture f = make_fixture(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(calibrate_radii(f.cal, f.tests));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_RadiiSerial(benchmark::State& state) {
    const RadiusFixture f = make_fixture(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(calibrate_radii_serial(f.cal, f.tests));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

HarnessConfig replication_config(int reps) {
    HarnessConfig cfg;
    cfg.design = 1;
    cfg.sizes = {1000, 200, 200};
    cfg.replications = reps;
    MethodSpec m;
    m.radius_class = RadiusClass::Z;
    m.family.kind = FeatureKind::Linear;
    cfg.methods = {m};
    cfg.scenarios = all_scenarios();
    return cfg;
}

void BM_ReplicationsParallel(benchmark::State& state) {
    const HarnessConfig cfg = replication_config(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(run_replications(cfg));
}

void BM_ReplicationsSerial(benchmark::State& state) {
    const HarnessConfig cfg = replication_config(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(run_replications_serial(cfg));
}

}  // namespace

BENCHMARK(BM_RadiiParallel)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RadiiSerial)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ReplicationsParallel)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ReplicationsSerial)->Arg(4)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
