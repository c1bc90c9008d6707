#include "splitkin/acceptance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "splitkin/harness.hpp"
#include "splitkin/parallel.hpp"
#include "splitkin/snapshot_io.hpp"

namespace splitkin {

namespace {

namespace fs = std::filesystem;

double unit_from(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    return static_cast<double>(splitmix64(splitmix64(a ^ splitmix64(b)) ^ c) >> 11) * 0x1p-53;
}

Field random_field(const TorusGrid& grid, std::uint64_t seed, std::uint64_t tag) {
    Field f(grid);
    for (std::size_t i = 0; i < f.size(); ++i)
        f[i] = 2.0 * unit_from(seed, tag, i) - 1.0;
    return f;
}

std::string fmt(double v) { return format_double(v); }

// ---- criteria 1-6 ----

CriterionResult criterion_hypotheses() {
    CriterionResult r{1, "hypothesis validation (H1)-(H3) on builtin problems", true, ""};
    for (const ProblemSpec& p : builtin_problems()) {
        const ValidationReport rep = validate_hypotheses(p, 64);
        if (!rep.all_pass()) {
            r.pass = false;
            for (const auto& c : rep.checks)
                if (!c.pass) r.detail += p.name + ": " + c.name + " slack " + fmt(c.worst_slack) + "; ";
        }
    }
    if (r.pass) r.detail = "all builtin problems pass at default tolerances";
    return r;
}

// Criteria 2 and 3 share the 100 random pairs on the Burgers + degenerate
// diffusion problem (noise stripped; S only).
std::pair<CriterionResult, CriterionResult> criteria_det_contraction(const AcceptanceOptions& o) {
    ProblemSpec p = builtin_problem("degenerate-transport");
    p.noise = NoiseSpec{};
    const TorusGrid grid(1, 64);
    const DetScheme scheme;
    const double tau = 0.02;
    const int pairs = 100;

    std::vector<double> excess_l1(pairs, 0.0);
    std::vector<double> excess_lp(pairs, 0.0);
    std::vector<double> excess_max(pairs, 0.0);
    parallel_for(pairs, o.threads, [&](std::size_t k) {
        const Field u = random_field(grid, o.seed, 2 * k);
        const Field v = random_field(grid, o.seed, 2 * k + 1);
        const double d0 = l1_distance(u, v);
        const Field su = det_solve(scheme, u, tau, p).first;
        const Field sv = det_solve(scheme, v, tau, p).first;
        excess_l1[k] = l1_distance(su, sv) - d0;
        double elp = -kInf, emax = -kInf;
        for (double q : {1.0, 2.0, 4.0, kInf}) {
            elp = std::max(elp, lp_norm(su, q) - lp_norm(u, q));
            elp = std::max(elp, lp_norm(sv, q) - lp_norm(v, q));
        }
        emax = std::max(su.max() - u.max(), u.min() - su.min());
        emax = std::max(emax, std::max(sv.max() - v.max(), v.min() - sv.min()));
        excess_lp[k] = elp;
        excess_max[k] = emax;
    });
    const double worst_l1 = *std::max_element(excess_l1.begin(), excess_l1.end());
    const double worst_lp = *std::max_element(excess_lp.begin(), excess_lp.end());
    const double worst_max = *std::max_element(excess_max.begin(), excess_max.end());

    CriterionResult c2{2, "deterministic L1 contraction on 100 random pairs", worst_l1 <= 1e-12,
                       "worst L1 expansion " + fmt(worst_l1)};
    CriterionResult c3{3, "Lp nonexpansion (p=1,2,4,inf) and max principle",
                       worst_lp <= 1e-10 && worst_max <= 1e-12,
                       "worst Lp expansion " + fmt(worst_lp) + ", worst range excess " +
                           fmt(worst_max)};
    return {c2, c3};
}

CriterionResult criterion_det_oracles() {
    CriterionResult r{4, "deterministic oracles: shock position and heat decay", true, ""};

    {
        ProblemSpec p = builtin_problem("burgers");
        p.initial = [](double x) { return x < 0.5 ? 1.0 : 0.0; };
        const TorusGrid grid(1, 64);
        const Field u0 = Field::from_function(grid, p.initial);
        const Field u = det_solve(DetScheme{}, u0, 0.25, p).first;
        // Rankine-Hugoniot: shock from x=0.5 at speed 1/2; the rarefaction
        // from the wrap stays left of x=0.3.
        double shock = -1.0;
        for (std::size_t i = 0; i + 1 < u.size(); ++i) {
            const double x = grid.center(i);
            if (x < 0.3) continue;
            if (u[i] >= 0.5 && u[i + 1] < 0.5) {
                shock = x + grid.dx() * (u[i] - 0.5) / (u[i] - u[i + 1]);
                break;
            }
        }
        const double err = std::fabs(shock - 0.625);
        if (!(shock > 0.0) || err > 2.0 * grid.dx()) r.pass = false;
        r.detail += "shock position error " + fmt(err) + " (gate " + fmt(2.0 * grid.dx()) + "); ";
    }
    {
        const ProblemSpec p = builtin_problem("heat");
        const TorusGrid grid(1, 64);
        const Field u0 = Field::from_function(grid, p.initial);
        const double tau = 0.25, nu = 0.1;
        const DetScheme scheme;
        const double bound = max_stable_dt(scheme, u0, p);
        const double n_steps = std::ceil(tau / bound - 1e-12);
        const double dt = tau / n_steps;
        const Field u = det_solve(scheme, u0, tau, p).first;
        auto amplitude = [&](const Field& f) {
            double acc = 0.0;
            for (std::size_t i = 0; i < f.size(); ++i)
                acc += f[i] * std::sin(2.0 * M_PI * grid.center(i));
            return 2.0 * acc * grid.dx();
        };
        const double expected = amplitude(u0) * std::exp(-4.0 * M_PI * M_PI * nu * tau);
        const double rel = std::fabs(amplitude(u) - expected) / std::fabs(expected);
        const double gate = 5.0 * (grid.dx() * grid.dx() + dt);
        if (rel > gate) r.pass = false;
        r.detail += "heat decay relative error " + fmt(rel) + " (gate " + fmt(gate) + ")";
    }
    return r;
}

CriterionResult criterion_sde_moment(const AcceptanceOptions& o, int scale) {
    const ProblemSpec p = builtin_problem("pure-sde");
    const double lambda = 0.5, t_end = 0.5;
    const int M = 10000 * scale;
    const TorusGrid grid(1, 8);
    const Field v0(grid, 1.0);
    SdeStepPlan plan;
    plan.dt_sde = 1.0 / 128.0;

    std::vector<double> vals(M);
    parallel_for(M, o.threads, [&](std::size_t s) {
        RngStream rng{o.seed + 5, s, 0};
        const Field v = sde_solve(v0, 0.0, t_end, plan, p, rng);
        const double n2 = lp_norm(v, 2.0);
        vals[s] = n2 * n2;
    });
    const auto [mean, se] = mean_and_std_error(vals);
    const double closed = std::exp(lambda * lambda * t_end);
    const double K = moment_bound_K(2.0, p.noise.linear_growth_const);
    const double KT = moment_bound_KT(2.0, p.noise.linear_growth_const);
    const double gronwall = std::exp(K * t_end) * (1.0 + KT * t_end);

    const bool pass = std::fabs(mean - closed) <= 3.0 * se && mean <= gronwall + 3.0 * se;
    return {5, "SDE moment bound: Monte Carlo vs closed form and Gronwall constant", pass,
            "E|v|_2^2 = " + fmt(mean) + " +- " + fmt(se) + ", closed form " + fmt(closed) +
                ", Gronwall bound " + fmt(gronwall)};
}

CriterionResult criterion_partition(const AcceptanceOptions& o) {
    CriterionResult r{6, "partition: uniform mesh for S=identity, exact horizon, width cap", true,
                      ""};
    {
        const ProblemSpec p = builtin_problem("pure-sde");
        RunOptions opts;
        opts.epsilon = 0.1;
        opts.samples = 8;
        opts.seed = o.seed;
        opts.grid_cells = 16;
        opts.threads = o.threads;
        const RunResult run = run_splitting(p, opts);
        const auto M = static_cast<std::size_t>(std::ceil(p.horizon / opts.epsilon - 1e-12));
        if (run.partition.cells() != M) r.pass = false;
        for (std::size_t n = 0; n < run.partition.cells(); ++n)
            if (std::fabs(run.partition.width(n) - opts.epsilon) > 1e-12) r.pass = false;
        if (run.partition.times.back() != p.horizon) r.pass = false;
        r.detail += "pure-sde: M = " + std::to_string(run.partition.cells()) + " (expect " +
                    std::to_string(M) + "), max width " + fmt(run.partition.max_width()) + "; ";
    }
    for (const char* name : {"burgers-noise", "degenerate-transport"}) {
        const ProblemSpec p = builtin_problem(name);
        RunOptions opts;
        opts.epsilon = name[0] == 'b' ? 0.1 : 0.05;
        opts.samples = 8;
        opts.seed = o.seed;
        opts.grid_cells = 32;
        opts.threads = o.threads;
        const RunResult run = run_splitting(p, opts);
        if (run.partition.times.back() != p.horizon) r.pass = false;
        if (run.partition.max_width() > opts.epsilon + 1e-14) r.pass = false;
        r.detail += std::string(name) + ": ends at " + fmt(run.partition.times.back()) +
                    ", max width " + fmt(run.partition.max_width()) + " (eps " + fmt(opts.epsilon) +
                    "); ";
    }
    return r;
}

// ---- the shared degenerate-transport ladder feeding criteria 7-11 ----

struct SharedLadder {
    LadderRuns ladder;
    ProblemSpec problem;
};

SharedLadder build_shared(const AcceptanceOptions& o, int scale) {
    ExperimentPlan plan;
    plan.problem = "degenerate-transport";
    plan.epsilon_ladder = {0.2, 0.1, 0.05, 0.025};
    plan.samples = 256 * scale;
    plan.seed = o.seed;
    plan.threads = o.threads;
    plan.base.grid_cells = 64;
    plan.output_times.clear();
    for (int k = 1; k <= 24; ++k) plan.output_times.push_back(k * 0.0125);
    SharedLadder shared;
    shared.problem = plan.resolve_problem();
    shared.ladder = run_ladder(plan);
    return shared;
}

CriterionResult criterion_increments(const SharedLadder& shared, const AcceptanceOptions& o,
                                     int scale) {
    CriterionResult r{7, "within-cell increments: 2 eps gate and sqrt(eps) rate", true, ""};

    // 2 eps gate on the shared degenerate-transport ladder.
    for (const RunResult& run : shared.ladder.runs) {
        const IncrementSummary inc = within_cell_increments(run);
        if (inc.max_vtilde_increment > 2.0 * inc.epsilon + 1e-12) r.pass = false;
    }

    // The sqrt(eps) rate of the noise increment E|v(t_{n+1}-0) - v(t_n)|_1
    // is measured on Burgers with one additive mode: state-independent
    // noise amplitude and a longer horizon keep every ladder entry in the
    // full-width-cell regime, so the width-matched statistic scales cleanly.
    ProblemSpec p = builtin_problem("burgers");
    p.name = "burgers-additive";
    p.noise.modes = {[](double x, double) { return 0.25 * std::sin(2.0 * M_PI * x); }};
    p.noise.linear_growth_const = 0.25 * 0.25;
    p.noise.modulus_r = [](double d) { return d; };
    p.noise.modulus_const = 2.0 * 0.25 * 0.25 * 4.0 * M_PI * M_PI;
    p.horizon = 0.6;

    std::vector<std::pair<double, double>> points;
    const double dt_store = 0.025 / 16.0;
    for (double eps : {0.2, 0.1, 0.05, 0.025}) {
        RunOptions opts;
        opts.epsilon = eps;
        opts.samples = 192 * scale;
        opts.seed = o.seed + 7;
        opts.threads = o.threads;
        opts.grid_cells = 64;
        opts.dt_store = dt_store;
        for (int k = 1; k <= 48; ++k) opts.output_times.push_back(k * 0.0125);
        const RunResult run = run_splitting(p, opts);
        const IncrementSummary inc = within_cell_increments(run);
        if (inc.max_vtilde_increment > 2.0 * inc.epsilon + 1e-12) r.pass = false;
        points.emplace_back(eps, inc.cap_cell_jump > 0.0 ? inc.cap_cell_jump : inc.max_v_jump);
        r.detail += "eps " + fmt(eps) + ": vtilde " + fmt(inc.max_vtilde_increment) + " (gate " +
                    fmt(2.0 * eps) + "), v jump " + fmt(points.back().second) + "; ";
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (auto& [x, y] : points) {
        if (y <= 0) continue;
        sx += std::log(x);
        sy += std::log(y);
        sxx += std::log(x) * std::log(x);
        sxy += std::log(x) * std::log(y);
        ++m;
    }
    const double slope = m >= 2 ? (m * sxy - sx * sy) / (m * sxx - sx * sx) : 0.0;
    if (slope < 0.45) r.pass = false;
    r.detail += "fitted exponent " + fmt(slope) + " (gate >= 0.45)";
    return r;
}

CriterionResult criterion_apriori(const SharedLadder& shared) {
    // Gate: E sup_t |w|_p^p <= e^{KT}(|u0|_p^p + K_T T) uniformly over the
    // ladder. A trend test is the wrong operational form here: with
    // common-path coupling the Monte Carlo error is tiny while
    // E sup_t |v|_p^p converges upward to the limit's supremum as the
    // first cells shrink; the meaningful statement is the uniform bound.
    CriterionResult r{8, "uniform a-priori Lp bounds over the epsilon ladder", true, ""};
    const double cg = shared.problem.noise.linear_growth_const;
    const double T = shared.problem.horizon;
    const Norms0 norms = shared.ladder.runs.front().initial_norms();
    for (double p : {2.0, 4.0}) {
        const double u0p = p == 2.0 ? norms.l2_sq : norms.l4_p4;
        const double bound =
            std::exp(moment_bound_K(p, cg) * T) * (u0p + moment_bound_KT(p, cg) * T);
        for (bool vtilde : {false, true}) {
            double worst = -kInf;
            for (const RunResult& run : shared.ladder.runs) {
                const SupNorm sn = sup_norm_over_outputs(run, p, vtilde);
                if (!std::isfinite(sn.mean)) r.pass = false;
                if (sn.mean > bound + 3.0 * sn.std_error) r.pass = false;
                worst = std::max(worst, sn.mean);
            }
            r.detail += std::string(vtilde ? "vtilde" : "v") + " p=" + fmt(p) + ": worst " +
                        fmt(worst) + " <= " + fmt(bound) + "; ";
        }
    }
    return r;
}

CriterionResult criterion_kinetic_mass(const SharedLadder& shared) {
    CriterionResult r{9, "kinetic measure masses, E|m|^2, and m >= n1", true, ""};
    // Gates: masses and E m^2 stay under the explicit a-priori constants
    // uniformly over the ladder. Common-path coupling makes the systematic
    // O(eps) convergence of the coupled means exceed any 3 SE band, so the
    // uniform constant is the meaningful test.
    const Norms0 norms = shared.ladder.runs.front().initial_norms();
    const double cg = shared.problem.noise.linear_growth_const;
    const double T = shared.problem.horizon;
    for (double p : {0.0, 2.0}) {
        for (const RunResult& run : shared.ladder.runs) {
            const KineticMassReport rep = kinetic_measure_mass(run.ledgers, p, cg, T, norms);
            if (!std::isfinite(rep.mean)) r.pass = false;
            if (rep.mean > rep.bound_C + 3.0 * rep.std_error) r.pass = false;
            if (rep.mean < -1e-10 - 3.0 * rep.std_error) r.pass = false;
            if (p == 0.0) {
                if (rep.mean_sq > rep.bound_m_sq + 3.0 * rep.sq_std_error) r.pass = false;
                r.detail += "eps " + fmt(run.options.epsilon) + ": m " + fmt(rep.mean) + " <= C " +
                            fmt(rep.bound_C) + ", m^2 " + fmt(rep.mean_sq) + " <= " +
                            fmt(rep.bound_m_sq) + "; ";
            }
        }
    }
    // ledger inequality per sample
    double worst_gap = kInf;
    for (const RunResult& run : shared.ladder.runs) {
        for (const auto& led : run.ledgers) worst_gap = std::min(worst_gap, led.m_mass - led.n1_mass);
    }
    if (worst_gap < -1e-10) r.pass = false;
    r.detail += "min(m - n1) over all samples " + fmt(worst_gap);
    return r;
}

CriterionResult criterion_cauchy(const SharedLadder& shared) {
    LadderRuns first_three;
    first_three.dt_store = shared.ladder.dt_store;
    first_three.runs.assign(shared.ladder.runs.begin(), shared.ladder.runs.begin() + 3);
    const CauchyTable table = cauchy_table_from_runs(first_three);
    CriterionResult r{10, "Cauchy in eps: E sup_t |v^eps - v^eps/2|_1 decreasing", true, ""};
    for (std::size_t i = 0; i < table.pairs.size(); ++i) {
        const auto& p = table.pairs[i];
        r.detail += "(" + fmt(p.eps_coarse) + "," + fmt(p.eps_fine) + "): " + fmt(p.sup_mean) +
                    " +- " + fmt(p.sup_std_error) + "; ";
        if (i > 0) {
            const auto& prev = table.pairs[i - 1];
            if (p.sup_mean > 0.8 * prev.sup_mean + 3.0 * (prev.sup_std_error + p.sup_std_error))
                r.pass = false;
        }
    }
    r.detail += "fitted order " + fmt(table.fitted_order);
    return r;
}

CriterionResult criterion_doubling(const SharedLadder& shared, const AcceptanceOptions& o) {
    CriterionResult r{11, "doubling functional: nonnegative, decreasing ladder, overlap oracle",
                      true, ""};
    const double theta = 1.5;
    // compare at t = 0.225, an interior output shared by the whole ladder
    std::size_t o_cmp = 0;
    const auto& times = shared.ladder.runs[0].output_times;
    for (std::size_t i = 0; i < times.size(); ++i)
        if (std::fabs(times[i] - 0.225) < 1e-12) o_cmp = i;

    std::vector<DoublingLadderInput> inputs;
    const double etas[3] = {0.2, 0.1, 0.05};
    double lo = kInf, hi = -kInf;
    for (std::size_t k = 0; k < 3; ++k) {
        DoublingLadderInput in;
        in.eta = etas[k];
        in.epsilon = shared.ladder.runs[k].options.epsilon;
        in.epsilon_prime = shared.ladder.runs[k + 1].options.epsilon;
        in.first = shared.ladder.runs[k].triples_at(o_cmp);
        in.second = shared.ladder.runs[k + 1].triples_at(o_cmp);
        for (const auto& t : in.first) {
            lo = std::min({lo, t.v.min(), t.v_tilde.min(), t.v_cell_start.min()});
            hi = std::max({hi, t.v.max(), t.v_tilde.max(), t.v_cell_start.max()});
        }
        for (const auto& t : in.second) {
            lo = std::min({lo, t.v.min(), t.v_tilde.min(), t.v_cell_start.min()});
            hi = std::max({hi, t.v.max(), t.v_tilde.max(), t.v_cell_start.max()});
        }
        inputs.push_back(std::move(in));
    }
    const double min_delta = std::pow(0.05, theta);
    const double pad = 0.5 + min_delta;
    const int bins = static_cast<int>(std::ceil((hi - lo + 2.0 * pad) / (min_delta / 2.5)));
    const XiGrid xg{lo - pad, hi + pad, bins};
    DoublingOptions opts;
    opts.gamma = shared.problem.diffusion.gamma;
    opts.horizon = shared.problem.horizon;
    opts.modulus_r = shared.problem.noise.modulus_r;
    opts.noise = &shared.problem.noise;
    const DoublingRateTable table = doubling_rate_table(inputs, theta, opts, xg);
    for (const auto& row : table.rows) {
        if (row.value < -1e-10) r.pass = false;
        r.detail += "eta " + fmt(row.eta) + ": value " + fmt(row.value) + " +- " +
                    fmt(row.std_error) + "; ";
    }
    if (!table.nonincreasing_within_3se) r.pass = false;

    // Constant-field overlap against an independent 2D quadrature oracle.
    {
        const double eta = 0.2, delta = std::pow(eta, theta), c = 0.3;
        const TorusGrid grid(1, 64);
        const XiGrid xq{-1.5, 1.5, 640};
        const Field cf(grid, c);
        const std::vector<FieldTriple> ens(1, FieldTriple{cf, cf, cf});
        const DoublingReport rep = doubling_functional(ens, ens, eta, delta, xq, {});
        const Mollifier psi(MollifierKind::value, delta);
        const int band = static_cast<int>(std::ceil(delta / xq.dxi())) + 1;
        double mass = 0.0;
        for (int m2 = -band; m2 <= band; ++m2) mass += psi(m2 * xq.dxi()) * xq.dxi();
        double oracle = 0.0;
        for (int k = 0; k < xq.bins; ++k) {
            if (!(xq.center(k) < c)) continue;
            for (int l = 0; l < xq.bins; ++l) {
                if (!(xq.center(l) > c)) continue;
                oracle += psi(xq.center(k) - xq.center(l)) / mass * xq.dxi() * xq.dxi();
            }
        }
        const double gap = std::fabs(rep.value - oracle);
        if (gap > 1e-8 || !(rep.value > 0.0) || rep.value > 0.5 * delta * (1.0 + 1e-6))
            r.pass = false;
        r.detail += "constant-field value " + fmt(rep.value) + ", oracle gap " + fmt(gap) +
                    ", delta/2 " + fmt(0.5 * delta);
    }
    (void)o;
    return r;
}

CriterionResult criterion_reproducibility(const AcceptanceOptions& o) {
    CriterionResult r{12, "byte-identical manifest rerun across thread counts", true, ""};
    RunManifest m;
    m.subcommand = "run";
    m.problem = "degenerate-transport";
    m.epsilon = 0.1;
    m.samples = 16;
    m.seed = o.seed;
    m.grid_cells = 32;
    m.output_times = {0.15, 0.3};

    const fs::path base = fs::temp_directory_path() / "splitkin_acceptance";
    const fs::path dir_a = base / "rerun_a", dir_b = base / "rerun_b";
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
    m.threads = 1;
    execute_manifest(m, dir_a.string());
    m.threads = 4;
    execute_manifest(m, dir_b.string());

    std::size_t compared = 0;
    for (const auto& entry : fs::recursive_directory_iterator(dir_a)) {
        if (!entry.is_regular_file()) continue;
        const fs::path rel = fs::relative(entry.path(), dir_a);
        if (rel.filename() == "timing.txt" || rel.filename() == "manifest.json") continue;
        std::ifstream fa(entry.path(), std::ios::binary), fb(dir_b / rel, std::ios::binary);
        std::stringstream sa, sb;
        sa << fa.rdbuf();
        sb << fb.rdbuf();
        ++compared;
        if (sa.str() != sb.str()) {
            r.pass = false;
            r.detail += rel.string() + " differs; ";
        }
    }
    if (compared == 0) r.pass = false;
    r.detail += std::to_string(compared) + " files compared";
    return r;
}

void print_result(const CriterionResult& r) {
    std::printf("criterion %2d [%s] %s\n              %s\n", r.id, r.pass ? "PASS" : "FAIL",
                r.name.c_str(), r.detail.c_str());
    std::fflush(stdout);
}

}  // namespace

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opts) {
    std::vector<CriterionResult> results;
    auto push = [&](CriterionResult r) {
        if (opts.verbose) print_result(r);
        results.push_back(std::move(r));
    };

    push(criterion_hypotheses());
    {
        auto [c2, c3] = criteria_det_contraction(opts);
        push(std::move(c2));
        push(std::move(c3));
    }
    push(criterion_det_oracles());
    {
        CriterionResult c5 = criterion_sde_moment(opts, 1);
        if (!c5.pass && opts.retry_with_more_samples) c5 = criterion_sde_moment(opts, 4);
        push(std::move(c5));
    }
    push(criterion_partition(opts));

    auto evaluate_shared = [&](const SharedLadder& shared, int scale) {
        std::vector<CriterionResult> out;
        out.push_back(criterion_increments(shared, opts, scale));
        out.push_back(criterion_apriori(shared));
        out.push_back(criterion_kinetic_mass(shared));
        out.push_back(criterion_cauchy(shared));
        out.push_back(criterion_doubling(shared, opts));
        return out;
    };
    {
        SharedLadder shared = build_shared(opts, 1);
        std::vector<CriterionResult> group = evaluate_shared(shared, 1);
        const bool any_fail =
            std::any_of(group.begin(), group.end(), [](const auto& r) { return !r.pass; });
        if (any_fail && opts.retry_with_more_samples) {
            // Monte Carlo flakiness control: one retry with 4x samples.
            SharedLadder big = build_shared(opts, 4);
            std::vector<CriterionResult> retry = evaluate_shared(big, 4);
            for (std::size_t i = 0; i < group.size(); ++i)
                if (!group[i].pass) group[i] = retry[i];
        }
        for (auto& r : group) push(std::move(r));
    }

    push(criterion_reproducibility(opts));

    if (opts.verbose) {
        const auto passed = std::count_if(results.begin(), results.end(),
                                          [](const auto& r) { return r.pass; });
        std::printf("acceptance: %zd/%zu criteria passed\n", passed, results.size());
    }
    return results;
}

}  // namespace splitkin
