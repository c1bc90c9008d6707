#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <doctest.h>

#include "splitkin/harness.hpp"
#include "splitkin/snapshot_io.hpp"

using namespace splitkin;
namespace fs = std::filesystem;

namespace {

ExperimentPlan small_plan(const char* problem, std::vector<double> ladder, int samples) {
    ExperimentPlan plan;
    plan.problem = problem;
    plan.epsilon_ladder = std::move(ladder);
    plan.samples = samples;
    plan.seed = 1717;
    plan.threads = 2;
    plan.base.grid_cells = 32;
    return plan;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("cauchy study: zero-noise ladder collapses to zero distance") {
    // R = identity: the S-only composition S(t)u0 is partition independent,
    // so the deterministic interpolant agrees across the ladder up to the
    // pinned-ladder roundoff. (The noise interpolant v carries the
    // within-cell S-advance of its own partition by construction, so the
    // zero-distance statement is about vtilde / partition boundaries.)
    ExperimentPlan plan = small_plan("burgers", {0.2, 0.1}, 1);
    plan.output_times = {0.15, 0.3};
    const LadderRuns ladder = run_ladder(plan);
    const CauchyTable table = cauchy_table_from_runs(ladder, true);
    REQUIRE(table.pairs.size() == 1);
    CHECK(table.pairs[0].sup_mean <= 1e-10);
    // and the noise interpolants agree exactly at shared partition points
    const auto& c = ladder.runs[0];
    const auto& f = ladder.runs[1];
    CHECK(l1_distance(c.trajectories[0].v.back(), f.trajectories[0].v.back()) <= 1e-10);
}

TEST_CASE("cauchy study: pure SDE ladder differs only by substep grouping") {
    ExperimentPlan plan = small_plan("pure-sde", {0.2, 0.1, 0.05}, 32);
    plan.output_times = {0.25, 0.5};
    const CauchyTable table = cauchy_study(plan);
    REQUIRE(table.pairs.size() == 2);
    // S = identity: same Brownian path, only Euler-Maruyama regrouping;
    // strong-error scale is sqrt(dt_sde) with a small constant
    for (const auto& pair : table.pairs) CHECK(pair.sup_mean <= 0.1);

    const ExperimentPlan two = small_plan("pure-sde", {0.2, 0.1}, 4);
    CHECK_THROWS_AS(cauchy_study(two), ConfigError);
}

TEST_CASE("cauchy study: full problem distances decrease along the ladder") {
    // dense output times: the sup must sample the within-cell sawtooth of
    // both runs, otherwise it aliases against the partition phase
    ExperimentPlan plan = small_plan("degenerate-transport", {0.2, 0.1, 0.05}, 96);
    for (int k = 1; k <= 24; ++k) plan.output_times.push_back(k * 0.0125);
    const CauchyTable table = cauchy_study(plan);
    REQUIRE(table.pairs.size() == 2);
    CHECK(table.pairs[0].sup_mean > 0.0);
    CHECK(table.pairs[1].sup_mean <=
          0.8 * table.pairs[0].sup_mean +
              3.0 * (table.pairs[0].sup_std_error + table.pairs[1].sup_std_error));
    CHECK(table.fitted_order >= 0.4);
}

TEST_CASE("vtilde coupling: zero dynamics means identical interpolants") {
    ProblemSpec p = builtin_problem("pure-sde");
    p.noise = NoiseSpec{};
    RunOptions opts;
    opts.epsilon = 0.25;
    opts.samples = 2;
    opts.grid_cells = 16;
    opts.output_times = {0.25, 0.5};
    const RunResult run = run_splitting(p, opts);
    const VtildeTable table = vtilde_coupling_check(run);
    for (const auto& row : table.rows) CHECK(row.mean <= 1e-14);
}

TEST_CASE("vtilde coupling: single-cell run stays within the cell bounds") {
    ExperimentPlan plan = small_plan("burgers-noise", {0.4}, 24);
    plan.output_times = {0.15, 0.3};
    const LadderRuns ladder = run_ladder(plan);
    REQUIRE(ladder.runs[0].partition.cells() >= 1);
    const VtildeTable table = vtilde_coupling_check(ladder.runs[0]);
    // within one cell |v - vtilde|_1 <= |v - u_n|_1 + |u_n - vtilde|_1,
    // bounded by the within-cell increments; sanity gate at the 2eps+C
    // scale rather than an asymptotic fit
    for (const auto& row : table.rows) CHECK(row.mean <= 2.0 * 0.4 + 0.5);
}

TEST_CASE("vtilde ladder study fits a positive rate on the full problem") {
    ExperimentPlan plan = small_plan("degenerate-transport", {0.2, 0.1, 0.05}, 48);
    plan.output_times = {0.075, 0.15, 0.225, 0.3};
    const VtildeTable table = vtilde_ladder_study(plan);
    REQUIRE(table.sup_per_eps.size() == 3);
    for (std::size_t i = 1; i < 3; ++i)
        CHECK(table.sup_per_eps[i].second <= table.sup_per_eps[i - 1].second * 1.15 + 1e-6);
    CHECK(table.fitted_exponent >= 0.45);
}

TEST_CASE("contraction study: identical initial data stays at zero") {
    ExperimentPlan plan = small_plan("burgers-noise", {0.1}, 8);
    plan.output_times = {0.15, 0.3};
    auto init = builtin_problem("burgers-noise").initial;
    const auto tables = contraction_study(plan, init, init);
    REQUIRE(tables.size() == 1);
    CHECK(tables[0].initial_distance == 0.0);
    for (const auto& row : tables[0].rows) CHECK(row.mean == 0.0);
}

TEST_CASE("contraction study: zero noise contracts exactly") {
    ExperimentPlan plan = small_plan("burgers", {0.1}, 1);
    plan.output_times = {0.15, 0.3};
    const auto one = [](double x) { return std::sin(2.0 * M_PI * x); };
    const auto two = [](double x) { return 0.6 * std::sin(2.0 * M_PI * x) + 0.1; };
    const auto tables = contraction_study(plan, one, two);
    CHECK(tables[0].worst_excess <= 1e-12);
}

TEST_CASE("contraction study: common Lipschitz noise contracts in the mean") {
    ExperimentPlan plan = small_plan("burgers-noise", {0.1, 0.05}, 64);
    plan.output_times = {0.15, 0.3};
    const auto one = [](double x) { return std::sin(2.0 * M_PI * x); };
    const auto two = [](double x) { return 0.6 * std::sin(2.0 * M_PI * x) + 0.1; };
    const auto tables = contraction_study(plan, one, two);
    REQUIRE(tables.size() == 2);
    for (const auto& table : tables) {
        for (const auto& row : table.rows) {
            // common-path noise is mean-neutral for the L1 gap; the
            // splitting misalignment of the two partitions enters at the
            // within-cell scale, which 3 SE plus a C sqrt(eps) term covers
            const double slack = 3.0 * row.std_error + 0.5 * std::sqrt(table.epsilon) *
                                                           table.initial_distance;
            CHECK(row.mean <= table.initial_distance + slack);
        }
    }
    // the measured excess shrinks along the ladder
    CHECK(tables[1].worst_excess <= tables[0].worst_excess + 1e-3);
}

TEST_CASE("manifest round trip and byte-identical rerun") {
    RunManifest m;
    m.subcommand = "run";
    m.problem = "burgers-noise";
    m.epsilon = 0.1;
    m.samples = 8;
    m.seed = 31;
    m.grid_cells = 32;
    m.output_times = {0.15, 0.3};
    m.threads = 1;

    const RunManifest back = RunManifest::from_json(m.to_json());
    CHECK(back.problem == m.problem);
    CHECK(back.epsilon == m.epsilon);
    CHECK(back.output_times == m.output_times);

    const fs::path base = fs::temp_directory_path() / "splitkin_harness_test";
    fs::remove_all(base);
    execute_manifest(m, (base / "a").string());
    RunManifest m2 = back;
    m2.threads = 3;
    execute_manifest(m2, (base / "b").string());

    std::size_t compared = 0;
    for (const auto& entry : fs::recursive_directory_iterator(base / "a")) {
        if (!entry.is_regular_file()) continue;
        const fs::path rel = fs::relative(entry.path(), base / "a");
        if (rel.filename() == "timing.txt" || rel.filename() == "manifest.json") continue;
        ++compared;
        CHECK(slurp(entry.path()) == slurp(base / "b" / rel));
    }
    CHECK(compared >= 6);
    fs::remove_all(base);
}

TEST_CASE("field snapshot round trip with sidecar") {
    const fs::path dir = fs::temp_directory_path() / "splitkin_snapshot_test";
    fs::create_directories(dir);
    const TorusGrid grid(1, 16);
    Field f = Field::from_function(grid, [](double x) { return std::sin(2.0 * M_PI * x) / 3.0; });
    const SnapshotMeta meta{0.125, 7, 99};
    const std::string path = (dir / "f.csv").string();
    write_field_csv(path, f, meta);

    const std::string text = slurp(path);
    CHECK(text.rfind("# grid N=16 d=1\n", 0) == 0);
    const Field g = read_field_csv(path);
    CHECK(g == f);
    const SnapshotMeta back = read_field_sidecar(path);
    CHECK(back.time == meta.time);
    CHECK(back.sample == meta.sample);
    CHECK(back.seed == meta.seed);
    fs::remove_all(dir);
}

TEST_CASE("17-digit formatting survives the round trip") {
    for (double v : {1.0 / 3.0, 0.1, 2.5e-17, -3.14159e300}) {
        const std::string s = format_double(v);
        CHECK(std::stod(s) == v);
    }
}
