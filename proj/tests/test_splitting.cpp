#include <cmath>

#include <doctest.h>

#include "splitkin/harness.hpp"
#include "splitkin/model.hpp"
#include "splitkin/splitting.hpp"

using namespace splitkin;

namespace {

RunOptions small_options(double epsilon, int samples, int cells) {
    RunOptions opts;
    opts.epsilon = epsilon;
    opts.samples = samples;
    opts.grid_cells = cells;
    opts.seed = 4242;
    opts.threads = 2;
    return opts;
}

}  // namespace

TEST_CASE("partition rule: S = identity gives the uniform epsilon mesh") {
    const ProblemSpec p = builtin_problem("pure-sde");  // B = A = 0
    RunOptions opts = small_options(0.1, 4, 16);
    const RunResult run = run_splitting(p, opts);
    CHECK(run.partition.cells() == 5);  // ceil(0.5 / 0.1)
    for (std::size_t n = 0; n < run.partition.cells(); ++n)
        CHECK(std::fabs(run.partition.width(n) - 0.1) <= 1e-12);
    CHECK(run.partition.times.back() == p.horizon);
    CHECK(run.partition.max_width() <= 0.1 + 1e-14);
    // D is identically zero: no candidate ever crosses
    for (const DTrace& tr : run.d_traces)
        for (double d : tr.values) CHECK(d == 0.0);
}

TEST_CASE("partition rule: huge epsilon is capped at the horizon") {
    const ProblemSpec p = builtin_problem("pure-sde");
    RunOptions opts = small_options(1e6, 2, 8);
    const RunResult run = run_splitting(p, opts);
    CHECK(run.partition.cells() == 1);
    CHECK(run.partition.times.back() == p.horizon);
}

TEST_CASE("first-crossing rule verified against the recorded D trace") {
    // Burgers with sin initial data, epsilon = 0.05: the returned time is
    // either the first candidate whose D exceeds epsilon, or the cap.
    const ProblemSpec p = builtin_problem("burgers");
    RunOptions opts = small_options(0.05, 2, 64);
    const RunResult run = run_splitting(p, opts);
    REQUIRE(run.partition.cells() >= 2);
    for (std::size_t n = 0; n < run.partition.cells(); ++n) {
        const DTrace& tr = run.d_traces[n];
        const double width = run.partition.width(n);
        for (std::size_t j = 0; j + 1 < tr.values.size(); ++j)
            CHECK(tr.values[j] <= opts.epsilon);  // no earlier crossing
        if (!tr.values.empty() && tr.values.back() > opts.epsilon) {
            CHECK(tr.times.back() == run.partition.times[n + 1]);  // ended at the crossing
        } else {
            // cap bound: width = epsilon or end of horizon
            const bool at_eps = std::fabs(width - opts.epsilon) <= 1e-12;
            const bool at_T = run.partition.times[n + 1] == p.horizon;
            CHECK((at_eps || at_T));
        }
    }
}

TEST_CASE("advance_cell degenerate identities") {
    // zero noise: u~_{n+1} = u_n exactly
    {
        const ProblemSpec p = builtin_problem("burgers");
        RunOptions opts = small_options(0.05, 2, 32);
        opts.record_cell_states = true;
        const RunResult run = run_splitting(p, opts);
        for (const auto& tr : run.trajectories)
            for (const auto& cell : tr.cells) CHECK(cell.u_n == cell.u_tilde_next);
    }
    // zero flux and diffusion: u_n = u~_n exactly, v snapshots = noise flow
    {
        const ProblemSpec p = builtin_problem("pure-sde");
        RunOptions opts = small_options(0.1, 3, 16);
        opts.record_cell_states = true;
        const RunResult run = run_splitting(p, opts);
        for (const auto& tr : run.trajectories) {
            Field prev = run.initial;
            for (const auto& cell : tr.cells) {
                CHECK(cell.u_n == prev);  // S pass is the identity
                prev = cell.u_tilde_next;
            }
        }
    }
}

TEST_CASE("boundary identities at partition times are exact") {
    const ProblemSpec p = builtin_problem("degenerate-transport");
    RunOptions opts = small_options(0.05, 3, 32);
    opts.record_cell_states = true;
    // outputs exactly at partition-cell starts are cell-start snapshots
    opts.output_times = {0.0, 0.15, 0.3};
    const RunResult run = run_splitting(p, opts);
    for (const auto& tr : run.trajectories) {
        // v(0) = u_0 of the first cell (post-S state), vtilde(0) = initial
        CHECK(tr.v_tilde[0] == run.initial);
        CHECK(tr.v[0] == tr.cells[0].u_n);
        CHECK(tr.v_cell_start[0] == tr.cells[0].u_n);
        // final time: left limits of the last cell
        CHECK(tr.v.back() == tr.cells.back().u_tilde_next);
        CHECK(tr.v_tilde.back() == tr.cells.back().u_n);
    }
}

TEST_CASE("partition determinism: identical seeds, identical partitions") {
    const ProblemSpec p = builtin_problem("degenerate-transport");
    RunOptions opts = small_options(0.1, 4, 32);
    const RunResult a = run_splitting(p, opts);
    opts.threads = 1;
    const RunResult b = run_splitting(p, opts);
    REQUIRE(a.partition.times.size() == b.partition.times.size());
    for (std::size_t i = 0; i < a.partition.times.size(); ++i)
        CHECK(a.partition.times[i] == b.partition.times[i]);
    for (std::size_t s = 0; s < a.trajectories.size(); ++s)
        for (std::size_t o = 0; o < a.output_times.size(); ++o)
            CHECK(a.trajectories[s].v[o] == b.trajectories[s].v[o]);
}

TEST_CASE("zero-noise splitting equals the plain deterministic composition") {
    const ProblemSpec p = builtin_problem("burgers");
    RunOptions opts = small_options(0.05, 1, 64);
    opts.output_times = {p.horizon};
    const RunResult run = run_splitting(p, opts);

    // oracle: compose det_solve over the partition cells with the same
    // pinned ladder (one uniform substep per store cell subdivision)
    Field u = run.initial;
    for (std::size_t n = 0; n < run.partition.cells(); ++n) {
        const double bound = max_stable_dt(opts.det, u, p);
        const double dt_store = run.time_grid.dt_store();
        const double m = std::ceil(dt_store / std::min(bound, dt_store) - 1e-12);
        const double cell_dt = dt_store / std::max(1.0, m);
        const double width = run.partition.width(n);
        u = det_solve(opts.det, u, width, p, cell_dt).first;
    }
    CHECK(l1_distance(u, run.trajectories[0].v.back()) <= 1e-12);
}

TEST_CASE("within-cell deterministic deviation never exceeds 2 epsilon") {
    const ProblemSpec p = builtin_problem("degenerate-transport");
    RunOptions opts = small_options(0.1, 16, 32);
    opts.output_times.clear();
    for (int k = 1; k <= 24; ++k) opts.output_times.push_back(k * 0.0125);
    const RunResult run = run_splitting(p, opts);
    const IncrementSummary inc = within_cell_increments(run);
    CHECK(inc.max_vtilde_increment <= 2.0 * opts.epsilon + 1e-12);
}

TEST_CASE("ensemble moment bounds hold along the trajectory") {
    // E|v(t)|_p^p <= e^{KT}(|u_0|_p^p + K_T T) for p = 2, 4, within 3 SE
    const ProblemSpec p = builtin_problem("degenerate-transport");
    RunOptions opts = small_options(0.1, 64, 32);
    opts.output_times = {0.075, 0.15, 0.225, 0.3};
    const RunResult run = run_splitting(p, opts);
    const double cg = p.noise.linear_growth_const;
    for (double q : {2.0, 4.0}) {
        const SupNorm v_sup = sup_norm_over_outputs(run, q, false);
        const SupNorm t_sup = sup_norm_over_outputs(run, q, true);
        const double u0q = std::pow(lp_norm(run.initial, q), q);
        const double bound = std::exp(moment_bound_K(q, cg) * p.horizon) *
                             (u0q + moment_bound_KT(q, cg) * p.horizon);
        CHECK(v_sup.mean <= bound + 3.0 * v_sup.std_error);
        CHECK(t_sup.mean <= bound + 3.0 * t_sup.std_error);
    }
}

TEST_CASE("incommensurate epsilon is rejected with a config error") {
    const ProblemSpec p = builtin_problem("pure-sde");
    RunOptions opts = small_options(0.1, 2, 8);
    opts.dt_store = 0.003;  // does not divide 0.1
    CHECK_THROWS_AS(run_splitting(p, opts), ConfigError);
}

TEST_CASE("ragged horizon still ends the partition exactly at T") {
    ProblemSpec p = builtin_problem("pure-sde");
    p.horizon = 0.47;  // not a multiple of eps/16
    RunOptions opts = small_options(0.1, 2, 8);
    const RunResult run = run_splitting(p, opts);
    CHECK(run.partition.times.back() == 0.47);
    CHECK(run.partition.max_width() <= 0.1 + 1e-14);
    CHECK(run.partition.cells() == 5);
}

TEST_CASE("stepwise ensemble drive matches the partition rule contracts") {
    // S = identity: next_partition_time returns min(t_n + eps, T) exactly
    {
        const ProblemSpec p = builtin_problem("pure-sde");
        RunOptions opts = small_options(0.2, 2, 8);
        Ensemble ens(p, opts);
        double expected = 0.2;
        while (!ens.finished()) {
            const double t_next = ens.next_partition_time();
            CHECK(t_next == doctest::Approx(std::min(expected, p.horizon)).epsilon(1e-14));
            CHECK(t_next > ens.current_time());
            ens.advance_cell();
            expected = ens.current_time() + 0.2;
        }
        const RunResult run = std::move(ens).take_result();
        CHECK(run.partition.times.back() == p.horizon);
    }
    // crossing case: the returned time never exceeds the cap
    {
        const ProblemSpec p = builtin_problem("burgers");
        RunOptions opts = small_options(0.05, 1, 64);
        Ensemble ens(p, opts);
        while (!ens.finished()) {
            const double t_n = ens.current_time();
            const double t_next = ens.next_partition_time();
            CHECK(t_next > t_n);
            CHECK(t_next <= std::min(t_n + opts.epsilon, p.horizon) + 1e-14);
            ens.advance_cell();
        }
    }
}

TEST_CASE("observation never perturbs the trajectory") {
    // identical runs with and without interior output times must produce
    // bitwise identical end states: interior v snapshots are replays
    const ProblemSpec p = builtin_problem("degenerate-transport");
    RunOptions sparse = small_options(0.1, 4, 32);
    sparse.output_times = {0.3};
    RunOptions dense = sparse;
    dense.output_times = {0.0375, 0.075, 0.1125, 0.15, 0.1875, 0.225, 0.2625, 0.3};
    const RunResult a = run_splitting(p, sparse);
    const RunResult b = run_splitting(p, dense);
    REQUIRE(a.partition.times == b.partition.times);
    for (std::size_t s = 0; s < a.trajectories.size(); ++s)
        CHECK(a.trajectories[s].v.back() == b.trajectories[s].v.back());
}

TEST_CASE("interior vtilde snapshots equal their definition bitwise") {
    // vtilde(t) = S(t - t_n) utilde_n with the cell-pinned ladder
    const ProblemSpec p = builtin_problem("burgers-noise");
    RunOptions opts = small_options(0.1, 2, 32);
    opts.record_cell_states = true;
    opts.output_times = {0.1125, 0.225};
    const RunResult run = run_splitting(p, opts);
    for (std::size_t o = 0; o < run.output_times.size(); ++o) {
        const std::size_t cell = run.cell_of_output[o];
        const double t_n = run.partition.times[cell];
        const double t = run.output_times[o];
        if (t == t_n) continue;  // cell-start snapshot, trivially utilde_n
        for (std::size_t s = 0; s < run.trajectories.size(); ++s) {
            // utilde_n of this cell is the previous cell's post-noise state
            const Field& u_tilde_n =
                cell == 0 ? run.initial : run.trajectories[s].cells[cell - 1].u_tilde_next;
            const double bound = max_stable_dt(opts.det, u_tilde_n, p);
            const double dt_store = run.time_grid.dt_store();
            const double m = std::ceil(dt_store / std::min(bound, dt_store) - 1e-12);
            const Field expect =
                det_solve(opts.det, u_tilde_n, t - t_n, p, dt_store / std::max(1.0, m)).first;
            CHECK(expect == run.trajectories[s].v_tilde[o]);
        }
    }
}
