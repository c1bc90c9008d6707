#include "splitkin/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "splitkin/snapshot_io.hpp"

namespace splitkin {

namespace {

double fit_loglog_slope(std::span<const std::pair<double, double>> xy) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (const auto& [x, y] : xy) {
        if (x <= 0.0 || y <= 0.0) continue;
        const double lx = std::log(x), ly = std::log(y);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++m;
    }
    if (m < 2) return 0.0;
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

std::vector<double> default_outputs(double T) {
    return {0.25 * T, 0.5 * T, 0.75 * T, T};
}

}  // namespace

ProblemSpec ExperimentPlan::resolve_problem() const {
    if (!config_text.empty())
        return problem_from_config(Config::parse_string(config_text, "<plan>"));
    return builtin_problem(problem);
}

RunOptions ExperimentPlan::options_for(double epsilon, double dt_store) const {
    RunOptions opts = base;
    opts.epsilon = epsilon;
    opts.samples = samples;
    opts.seed = seed;
    opts.threads = threads;
    opts.dt_store = dt_store;
    opts.output_times = output_times;
    return opts;
}

LadderRuns run_ladder(const ExperimentPlan& plan) {
    if (plan.epsilon_ladder.empty()) throw ConfigError("empty epsilon ladder");
    for (std::size_t i = 1; i < plan.epsilon_ladder.size(); ++i)
        if (!(plan.epsilon_ladder[i] < plan.epsilon_ladder[i - 1]))
            throw ConfigError("epsilon ladder must be strictly decreasing");
    const ProblemSpec problem = plan.resolve_problem();
    LadderRuns out;
    out.dt_store = std::min(plan.epsilon_ladder.back(), problem.horizon) / 16.0;
    for (double eps : plan.epsilon_ladder) {
        RunOptions opts = plan.options_for(eps, out.dt_store);
        if (opts.output_times.empty()) opts.output_times = default_outputs(problem.horizon);
        out.runs.push_back(run_splitting(problem, opts));
    }
    return out;
}

CauchyTable cauchy_table_from_runs(const LadderRuns& ladder, bool use_vtilde) {
    CauchyTable table;
    std::vector<std::pair<double, double>> fit_points;
    for (std::size_t r = 1; r < ladder.runs.size(); ++r) {
        const RunResult& coarse = ladder.runs[r - 1];
        const RunResult& fine = ladder.runs[r];
        const std::size_t n_out = coarse.output_indices.size();
        const std::size_t n_samples = coarse.trajectories.size();
        std::vector<double> sup_per_sample(n_samples, 0.0);
        for (std::size_t o = 0; o < n_out; ++o) {
            std::vector<double> d(n_samples);
            for (std::size_t s = 0; s < n_samples; ++s) {
                d[s] = use_vtilde
                           ? l1_distance(coarse.trajectories[s].v_tilde[o],
                                         fine.trajectories[s].v_tilde[o])
                           : l1_distance(coarse.trajectories[s].v[o], fine.trajectories[s].v[o]);
                sup_per_sample[s] = std::max(sup_per_sample[s], d[s]);
            }
            const auto [m, se] = mean_and_std_error(d);
            table.rows.push_back({coarse.options.epsilon, fine.options.epsilon,
                                  coarse.output_times[o], m, se});
        }
        const auto [sup_m, sup_se] = mean_and_std_error(sup_per_sample);
        table.pairs.push_back({coarse.options.epsilon, fine.options.epsilon, sup_m, sup_se});
        fit_points.emplace_back(fine.options.epsilon, sup_m);
    }
    table.fitted_order = fit_loglog_slope(fit_points);
    return table;
}

CauchyTable cauchy_study(const ExperimentPlan& plan) {
    if (plan.epsilon_ladder.size() < 3)
        throw ConfigError("cauchy study needs at least three ladder entries");
    return cauchy_table_from_runs(run_ladder(plan));
}

VtildeTable vtilde_coupling_check(const RunResult& run) {
    VtildeTable table;
    const std::size_t n_out = run.output_indices.size();
    const std::size_t n_samples = run.trajectories.size();
    double sup = 0.0;
    for (std::size_t o = 0; o < n_out; ++o) {
        std::vector<double> d(n_samples);
        for (std::size_t s = 0; s < n_samples; ++s)
            d[s] = l1_distance(run.trajectories[s].v[o], run.trajectories[s].v_tilde[o]);
        const auto [m, se] = mean_and_std_error(d);
        table.rows.push_back({run.options.epsilon, run.output_times[o], m, se});
        sup = std::max(sup, m);
    }
    table.sup_per_eps.emplace_back(run.options.epsilon, sup);
    return table;
}

VtildeTable vtilde_table_from_runs(const LadderRuns& ladder) {
    VtildeTable table;
    std::vector<std::pair<double, double>> fit_points;
    for (const RunResult& run : ladder.runs) {
        VtildeTable one = vtilde_coupling_check(run);
        table.rows.insert(table.rows.end(), one.rows.begin(), one.rows.end());
        table.sup_per_eps.push_back(one.sup_per_eps.front());
        fit_points.push_back(one.sup_per_eps.front());
    }
    table.fitted_exponent = fit_loglog_slope(fit_points);
    return table;
}

VtildeTable vtilde_ladder_study(const ExperimentPlan& plan) {
    return vtilde_table_from_runs(run_ladder(plan));
}

std::vector<ContractionTable> contraction_study(const ExperimentPlan& plan,
                                                const std::function<double(double)>& initial_one,
                                                const std::function<double(double)>& initial_two) {
    const ProblemSpec base_problem = plan.resolve_problem();
    ProblemSpec p1 = base_problem, p2 = base_problem;
    p1.initial = initial_one;
    p2.initial = initial_two;

    std::vector<ContractionTable> tables;
    const double dt_store = plan.epsilon_ladder.back() / 16.0;
    for (double eps : plan.epsilon_ladder) {
        RunOptions opts = plan.options_for(eps, dt_store);
        if (opts.output_times.empty()) opts.output_times = default_outputs(base_problem.horizon);
        const RunResult one = run_splitting(p1, opts);
        const RunResult two = run_splitting(p2, opts);

        ContractionTable table;
        table.epsilon = eps;
        table.initial_distance = l1_distance(one.initial, two.initial);
        const std::size_t n_samples = one.trajectories.size();
        for (std::size_t o = 0; o < one.output_indices.size(); ++o) {
            std::vector<double> d(n_samples);
            for (std::size_t s = 0; s < n_samples; ++s)
                d[s] = l1_distance(one.trajectories[s].v[o], two.trajectories[s].v[o]);
            const auto [m, se] = mean_and_std_error(d);
            table.rows.push_back({one.output_times[o], m, se});
            table.worst_excess = std::max(table.worst_excess, m - table.initial_distance);
        }
        tables.push_back(std::move(table));
    }
    return tables;
}

IncrementSummary within_cell_increments(const RunResult& run) {
    IncrementSummary out;
    out.epsilon = run.options.epsilon;
    const std::size_t n_out = run.output_indices.size();
    const std::size_t n_samples = run.trajectories.size();
    for (std::size_t o1 = 0; o1 < n_out; ++o1) {
        for (std::size_t o2 = o1 + 1; o2 < n_out; ++o2) {
            if (run.cell_of_output[o1] != run.cell_of_output[o2]) continue;
            // The snapshot at the horizon is the left limit of the last
            // cell; the 2 eps bound is for times strictly inside, so the
            // vtilde gate skips it.
            const bool at_horizon = run.output_indices[o2] == run.time_grid.cells();
            std::vector<double> dv(n_samples), dvt(n_samples);
            for (std::size_t s = 0; s < n_samples; ++s) {
                dv[s] = l1_distance(run.trajectories[s].v[o1], run.trajectories[s].v[o2]);
                dvt[s] =
                    l1_distance(run.trajectories[s].v_tilde[o1], run.trajectories[s].v_tilde[o2]);
            }
            out.max_v_increment = std::max(out.max_v_increment, mean_and_std_error(dv).first);
            if (!at_horizon)
                out.max_vtilde_increment =
                    std::max(out.max_vtilde_increment, mean_and_std_error(dvt).first);
        }
    }
    if (!run.trajectories.empty()) {
        const std::size_t cells = run.partition.cells();
        std::vector<double> cap_means;
        for (std::size_t n = 0; n < cells; ++n) {
            std::vector<double> jump(n_samples);
            for (std::size_t s = 0; s < n_samples; ++s)
                jump[s] = run.trajectories[s].cell_noise_jump[n];
            const double m = mean_and_std_error(jump).first;
            out.max_v_jump = std::max(out.max_v_jump, m);
            if (run.partition.width(n) >= 0.95 * run.options.epsilon) cap_means.push_back(m);
        }
        if (!cap_means.empty()) out.cap_cell_jump = pairwise_sum(cap_means) / cap_means.size();
    }
    return out;
}

SupNorm sup_norm_over_outputs(const RunResult& run, double p, bool use_vtilde) {
    const std::size_t n_samples = run.trajectories.size();
    std::vector<double> sup(n_samples, 0.0);
    for (std::size_t s = 0; s < n_samples; ++s) {
        for (std::size_t o = 0; o < run.output_indices.size(); ++o) {
            const Field& f =
                use_vtilde ? run.trajectories[s].v_tilde[o] : run.trajectories[s].v[o];
            sup[s] = std::max(sup[s], std::pow(lp_norm(f, p), p));
        }
    }
    const auto [m, se] = mean_and_std_error(sup);
    return {m, se};
}

// ---- persistence ----

std::string RunManifest::to_json() const {
    nlohmann::json j;
    j["subcommand"] = subcommand;
    j["problem"] = problem;
    j["config_text"] = config_text;
    j["epsilon_ladder"] = epsilon_ladder;
    j["epsilon"] = epsilon;
    j["samples"] = samples;
    j["seed"] = seed;
    j["output_times"] = output_times;
    j["grid_cells"] = grid_cells;
    j["threads"] = threads;
    j["theta"] = theta;
    j["etas"] = etas;
    j["det_flux"] = det_flux;
    j["cfl_adv"] = cfl_adv;
    j["cfl_diff"] = cfl_diff;
    j["dt_sde"] = dt_sde;
    j["search_resolution"] = search_resolution;
    j["wall_clock_seconds"] = wall_clock_seconds;
    return j.dump(2);
}

RunManifest RunManifest::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    RunManifest m;
    m.subcommand = j.value("subcommand", "run");
    m.problem = j.value("problem", "");
    m.config_text = j.value("config_text", "");
    m.epsilon_ladder = j.value("epsilon_ladder", std::vector<double>{});
    m.epsilon = j.value("epsilon", 0.0);
    m.samples = j.value("samples", 0);
    m.seed = j.value("seed", std::uint64_t{0});
    m.output_times = j.value("output_times", std::vector<double>{});
    m.grid_cells = j.value("grid_cells", 64);
    m.threads = j.value("threads", 1);
    m.theta = j.value("theta", 1.5);
    m.etas = j.value("etas", std::vector<double>{});
    m.det_flux = j.value("det_flux", "engquist-osher");
    m.cfl_adv = j.value("cfl_adv", 0.0);
    m.cfl_diff = j.value("cfl_diff", 0.0);
    m.dt_sde = j.value("dt_sde", 0.0);
    m.search_resolution = j.value("search_resolution", 0.0);
    return m;
}

namespace {

namespace fs = std::filesystem;

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");
    out << text;
}

ExperimentPlan plan_from_manifest(const RunManifest& m) {
    ExperimentPlan plan;
    plan.problem = m.problem;
    plan.config_text = m.config_text;
    // config files may carry [split]/[det]/[sde]/[grid] run keys; explicit
    // manifest fields override them
    if (!m.config_text.empty()) {
        plan.base = run_options_from_config(Config::parse_string(m.config_text, "<manifest>"));
    }
    plan.epsilon_ladder = m.epsilon_ladder;
    plan.samples = m.samples > 0 ? m.samples : plan.base.samples;
    plan.seed = m.seed;
    plan.output_times = m.output_times.empty() ? plan.base.output_times : m.output_times;
    plan.threads = m.threads;
    if (m.grid_cells > 0) plan.base.grid_cells = m.grid_cells;
    if (m.det_flux == "lax-friedrichs") plan.base.det.flux = NumericalFlux::lax_friedrichs;
    if (m.cfl_adv > 0.0) plan.base.det.cfl_adv = m.cfl_adv;
    if (m.cfl_diff > 0.0) plan.base.det.cfl_diff = m.cfl_diff;
    if (m.dt_sde > 0.0) plan.base.dt_sde = m.dt_sde;
    if (m.search_resolution > 0.0) plan.base.search_resolution = m.search_resolution;
    return plan;
}

}  // namespace

void write_run_outputs(const RunResult& run, const std::string& out_dir) {
    fs::create_directories(fs::path(out_dir) / "tables");
    fs::create_directories(fs::path(out_dir) / "fields");

    {
        std::string csv = "cell,t_begin,t_end,width\n";
        for (std::size_t n = 0; n < run.partition.cells(); ++n) {
            csv += std::to_string(n) + "," + format_double(run.partition.times[n]) + "," +
                   format_double(run.partition.times[n + 1]) + "," +
                   format_double(run.partition.width(n)) + "\n";
        }
        write_text((fs::path(out_dir) / "tables" / "partition.csv").string(), csv);
    }
    {
        std::string csv = "cell,tau,D\n";
        for (std::size_t n = 0; n < run.d_traces.size(); ++n) {
            const DTrace& tr = run.d_traces[n];
            for (std::size_t j = 0; j < tr.times.size(); ++j)
                csv += std::to_string(n) + "," + format_double(tr.times[j]) + "," +
                       format_double(tr.values[j]) + "\n";
        }
        write_text((fs::path(out_dir) / "tables" / "dtrace.csv").string(), csv);
    }
    {
        std::string csv = "time,v_l2_sq_mean,v_l4_p4_mean,vtilde_l2_sq_mean,vtilde_l4_p4_mean\n";
        const std::size_t n_samples = run.trajectories.size();
        for (std::size_t o = 0; o < run.output_indices.size(); ++o) {
            std::vector<double> v2(n_samples), v4(n_samples), t2(n_samples), t4(n_samples);
            for (std::size_t s = 0; s < n_samples; ++s) {
                const auto& tr = run.trajectories[s];
                v2[s] = std::pow(lp_norm(tr.v[o], 2.0), 2.0);
                v4[s] = std::pow(lp_norm(tr.v[o], 4.0), 4.0);
                t2[s] = std::pow(lp_norm(tr.v_tilde[o], 2.0), 2.0);
                t4[s] = std::pow(lp_norm(tr.v_tilde[o], 4.0), 4.0);
            }
            csv += format_double(run.output_times[o]) + "," +
                   format_double(mean_and_std_error(v2).first) + "," +
                   format_double(mean_and_std_error(v4).first) + "," +
                   format_double(mean_and_std_error(t2).first) + "," +
                   format_double(mean_and_std_error(t4).first) + "\n";
        }
        write_text((fs::path(out_dir) / "tables" / "moments.csv").string(), csv);
    }
    {
        std::string csv =
            "sample,n1_mass,m_mass,m_mass_p2,scheme_dissipation,clamp_count\n";
        for (std::size_t s = 0; s < run.ledgers.size(); ++s) {
            const auto& led = run.ledgers[s];
            csv += std::to_string(s) + "," + format_double(led.n1_mass) + "," +
                   format_double(led.m_mass) + "," + format_double(led.m_mass_p2) + "," +
                   format_double(led.scheme_dissipation) + "," +
                   std::to_string(led.clamp_count) + "\n";
        }
        write_text((fs::path(out_dir) / "tables" / "ledger.csv").string(), csv);
    }
    {
        // ensemble-mean n1 mass binned at xi = u(x,t)
        std::string csv = "xi,n1_mass_mean\n";
        const XiGrid& xg = run.xi_grid;
        for (int k = 0; k < xg.bins; ++k) {
            std::vector<double> vals(run.ledgers.size());
            for (std::size_t s = 0; s < run.ledgers.size(); ++s)
                vals[s] = run.ledgers[s].n1_xi_hist[static_cast<std::size_t>(k)];
            csv += format_double(xg.center(k)) + "," +
                   format_double(mean_and_std_error(vals).first) + "\n";
        }
        write_text((fs::path(out_dir) / "tables" / "n1_xi_hist.csv").string(), csv);
    }
    // Field snapshots: ensemble mean and sample 0 at every output time.
    for (std::size_t o = 0; o < run.output_indices.size(); ++o) {
        Field mean_field(run.initial.grid(), 0.0);
        for (const auto& tr : run.trajectories)
            for (std::size_t i = 0; i < mean_field.size(); ++i) mean_field[i] += tr.v[o][i];
        for (std::size_t i = 0; i < mean_field.size(); ++i)
            mean_field[i] /= static_cast<double>(run.trajectories.size());
        SnapshotMeta meta{run.output_times[o], -1, run.options.seed};
        write_field_csv((fs::path(out_dir) / "fields" /
                         ("v_mean_t" + std::to_string(o) + ".csv")).string(),
                        mean_field, meta);
        meta.sample = 0;
        write_field_csv((fs::path(out_dir) / "fields" /
                         ("v_sample0_t" + std::to_string(o) + ".csv")).string(),
                        run.trajectories[0].v[o], meta);
    }
}

void write_cauchy_csv(const CauchyTable& table, const std::string& path) {
    std::string csv = "eps_coarse,eps_fine,time,mean_distance,std_error\n";
    for (const auto& r : table.rows)
        csv += format_double(r.eps_coarse) + "," + format_double(r.eps_fine) + "," +
               format_double(r.time) + "," + format_double(r.mean) + "," +
               format_double(r.std_error) + "\n";
    csv += "# pair summaries: eps_coarse,eps_fine,sup_mean,sup_std_error\n";
    for (const auto& p : table.pairs)
        csv += format_double(p.eps_coarse) + "," + format_double(p.eps_fine) + "," +
               format_double(p.sup_mean) + "," + format_double(p.sup_std_error) + "\n";
    csv += "# fitted_order," + format_double(table.fitted_order) + "\n";
    write_text(path, csv);
}

void write_contraction_csv(const ContractionTable& table, const std::string& path) {
    std::string csv = "time,mean_distance,std_error\n";
    csv += "# epsilon," + format_double(table.epsilon) + "\n";
    csv += "# initial_distance," + format_double(table.initial_distance) + "\n";
    for (const auto& r : table.rows)
        csv += format_double(r.time) + "," + format_double(r.mean) + "," +
               format_double(r.std_error) + "\n";
    write_text(path, csv);
}

void write_doubling_csv(const DoublingRateTable& table, const std::string& path) {
    std::string csv = "eta,delta,epsilon,epsilon_prime,value,envelope,std_error\n";
    for (const auto& r : table.rows)
        csv += format_double(r.eta) + "," + format_double(r.delta) + "," +
               format_double(r.epsilon) + "," + format_double(r.epsilon_prime) + "," +
               format_double(r.value) + "," + format_double(r.envelope) + "," +
               format_double(r.std_error) + "\n";
    csv += "# fitted_slope," + format_double(table.fitted_slope) + "\n";
    csv += "# envelope_slope_reference," + format_double(table.envelope_slope_reference) + "\n";
    write_text(path, csv);
}

void write_vtilde_csv(const VtildeTable& table, const std::string& path) {
    std::string csv = "epsilon,time,mean_gap,std_error\n";
    for (const auto& r : table.rows)
        csv += format_double(r.epsilon) + "," + format_double(r.time) + "," +
               format_double(r.mean) + "," + format_double(r.std_error) + "\n";
    csv += "# fitted_exponent," + format_double(table.fitted_exponent) + "\n";
    write_text(path, csv);
}

int execute_manifest(const RunManifest& manifest, const std::string& out_dir) {
    const auto t0 = std::chrono::steady_clock::now();
    fs::create_directories(fs::path(out_dir) / "tables");
    ExperimentPlan plan = plan_from_manifest(manifest);

    if (manifest.subcommand == "run") {
        const ProblemSpec problem = plan.resolve_problem();
        const double eps = manifest.epsilon > 0.0 ? manifest.epsilon : plan.base.epsilon;
        RunOptions opts = plan.options_for(eps, 0.0);
        if (opts.output_times.empty()) opts.output_times = default_outputs(problem.horizon);
        const RunResult run = run_splitting(problem, opts);
        write_run_outputs(run, out_dir);
    } else if (manifest.subcommand == "cauchy") {
        const CauchyTable table = cauchy_study(plan);
        write_cauchy_csv(table, (fs::path(out_dir) / "tables" / "cauchy.csv").string());
    } else if (manifest.subcommand == "contraction") {
        const ProblemSpec problem = plan.resolve_problem();
        const auto one = problem.initial;
        const auto two = [one](double x) { return 0.5 * one(x); };
        const auto tables = contraction_study(plan, one, two);
        fs::create_directories(fs::path(out_dir) / "tables");
        for (std::size_t i = 0; i < tables.size(); ++i)
            write_contraction_csv(tables[i], (fs::path(out_dir) / "tables" /
                                              ("contraction_" + std::to_string(i) + ".csv"))
                                                 .string());
    } else if (manifest.subcommand == "doubling") {
        const LadderRuns ladder = run_ladder(plan);
        const ProblemSpec problem = plan.resolve_problem();
        if (ladder.runs.size() < 2) throw ConfigError("doubling needs >= 2 ladder entries");
        // comparison time: the last common interior output
        const std::size_t n_out = ladder.runs[0].output_indices.size();
        const std::size_t o_cmp = n_out >= 2 ? n_out - 2 : n_out - 1;
        std::vector<DoublingLadderInput> inputs;
        for (std::size_t r = 0; r + 1 < ladder.runs.size(); ++r) {
            DoublingLadderInput in;
            in.eta = manifest.etas.empty() ? ladder.runs[r].options.epsilon : manifest.etas[r];
            in.epsilon = ladder.runs[r].options.epsilon;
            in.epsilon_prime = ladder.runs[r + 1].options.epsilon;
            in.first = ladder.runs[r].triples_at(o_cmp);
            in.second = ladder.runs[r + 1].triples_at(o_cmp);
            inputs.push_back(std::move(in));
        }
        // xi grid spanning all states with margin and a band-resolving step
        double lo = kInf, hi = -kInf, min_delta = kInf;
        for (const auto& in : inputs) {
            min_delta = std::min(min_delta, std::pow(in.eta, manifest.theta));
            for (const auto* ens : {&in.first, &in.second}) {
                for (const auto& t : *ens) {
                    lo = std::min({lo, t.v.min(), t.v_tilde.min(), t.v_cell_start.min()});
                    hi = std::max({hi, t.v.max(), t.v_tilde.max(), t.v_cell_start.max()});
                }
            }
        }
        const double pad = std::max(0.5, min_delta);
        const int bins = static_cast<int>(std::ceil((hi - lo + 2 * pad) / (min_delta / 2.5)));
        const XiGrid xg{lo - pad, hi + pad, bins};
        DoublingOptions opts;
        opts.gamma = problem.diffusion.is_zero() ? 1.0 : problem.diffusion.gamma;
        opts.horizon = problem.horizon;
        opts.modulus_r = problem.noise.modulus_r;
        opts.noise = &problem.noise;
        const DoublingRateTable table = doubling_rate_table(inputs, manifest.theta, opts, xg);
        fs::create_directories(fs::path(out_dir) / "tables");
        write_doubling_csv(table, (fs::path(out_dir) / "tables" / "doubling.csv").string());
    } else {
        throw ConfigError("unknown manifest subcommand '" + manifest.subcommand + "'");
    }

    RunManifest echo = manifest;
    echo.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    // wall clock goes to a separate file so manifest.json stays rerun-stable
    write_text((fs::path(out_dir) / "manifest.json").string(), manifest.to_json() + "\n");
    write_text((fs::path(out_dir) / "timing.txt").string(),
               format_double(echo.wall_clock_seconds) + "\n");
    return 0;
}

}  // namespace splitkin
