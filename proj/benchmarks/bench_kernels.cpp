// Microbenchmarks for the hot kernels: the monotone finite-volume step,
// the Euler-Maruyama ensemble update, the pairwise norms, and the banded
// quadruple quadrature of the doubling functional.

#include <cmath>

#include <benchmark/benchmark.h>

#include "splitkin/det_solver.hpp"
#include "splitkin/kinetic_diag.hpp"
#include "splitkin/model.hpp"
#include "splitkin/sde_solver.hpp"

using namespace splitkin;

namespace {

Field sine_field(int n) {
    return Field::from_function(TorusGrid(1, n), [](double x) { return std::sin(2.0 * M_PI * x); });
}

void bm_det_step(benchmark::State& state) {
    const ProblemSpec p = builtin_problem("degenerate-transport");
    const Field u = sine_field(static_cast<int>(state.range(0)));
    const DetScheme scheme;
    const double dt = 0.5 * max_stable_dt(scheme, u, p);
    for (auto _ : state) {
        auto [next, rep] = det_step(scheme, u, dt, p);
        benchmark::DoNotOptimize(next.values().data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void bm_det_solve_cell(benchmark::State& state) {
    const ProblemSpec p = builtin_problem("degenerate-transport");
    const Field u = sine_field(64);
    const DetScheme scheme;
    for (auto _ : state) {
        auto [next, rep] = det_solve(scheme, u, 0.05 / 16.0, p);
        benchmark::DoNotOptimize(next.values().data());
    }
}

void bm_sde_step(benchmark::State& state) {
    const ProblemSpec p = builtin_problem("degenerate-transport");
    const Field u = sine_field(static_cast<int>(state.range(0)));
    SdeStepPlan plan;
    plan.dt_sde = 1e-2;
    for (auto _ : state) {
        RngStream rng{7, 0, 0};
        Field next = sde_step(u, 1e-2, plan, p, rng);
        benchmark::DoNotOptimize(next.values().data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void bm_lp_norm(benchmark::State& state) {
    const Field u = sine_field(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(lp_norm(u, 2.0));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void bm_doubling_functional(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const Field u = sine_field(n);
    Field w = u;
    for (std::size_t i = 0; i < w.size(); ++i) w[i] *= 0.8;
    const std::vector<FieldTriple> a(4, FieldTriple{u, u, u});
    const std::vector<FieldTriple> b(4, FieldTriple{w, w, w});
    const XiGrid xg{-1.6, 1.6, 256};
    for (auto _ : state) {
        const DoublingReport rep = doubling_functional(a, b, 0.1, 0.05, xg, {});
        benchmark::DoNotOptimize(rep.value);
    }
}

void bm_counter_rng(benchmark::State& state) {
    const RngStream rng{42, 3, 0};
    std::uint64_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(rng.normal(0, i++));
    }
}

}  // namespace

BENCHMARK(bm_det_step)->Arg(64)->Arg(128)->Arg(1024);
BENCHMARK(bm_det_solve_cell);
BENCHMARK(bm_sde_step)->Arg(64)->Arg(1024);
BENCHMARK(bm_lp_norm)->Arg(64)->Arg(4096);
BENCHMARK(bm_doubling_functional)->Arg(32)->Arg(64);
BENCHMARK(bm_counter_rng);

BENCHMARK_MAIN();
