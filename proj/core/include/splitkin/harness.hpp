#pragma once

#include <optional>
#include <string>
#include <vector>

#include "splitkin/config.hpp"
#include "splitkin/kinetic_diag.hpp"
#include "splitkin/model.hpp"
#include "splitkin/splitting.hpp"

namespace splitkin {

struct ExperimentPlan {
    std::string problem = "degenerate-transport";
    std::string config_text;             // overrides problem when nonempty
    std::vector<double> epsilon_ladder;  // strictly decreasing
    int samples = 64;
    std::uint64_t seed = 42;
    std::vector<double> output_times;    // defaulted per problem when empty
    int threads = 1;
    RunOptions base;                     // scheme knobs; epsilon etc. overridden

    ProblemSpec resolve_problem() const;
    RunOptions options_for(double epsilon, double dt_store) const;
};

/// Coupled ladder: one store grid at min(epsilon)/16 so every run reads the
/// same Brownian path; coarser partitions consume aggregated increments.
struct LadderRuns {
    std::vector<RunResult> runs;  // ordered as the ladder
    double dt_store = 0.0;
};
LadderRuns run_ladder(const ExperimentPlan& plan);

struct CauchyRow {
    double eps_coarse, eps_fine, time, mean, std_error;
};
struct CauchyPairSummary {
    double eps_coarse, eps_fine, sup_mean, sup_std_error;
};
struct CauchyTable {
    std::vector<CauchyRow> rows;
    std::vector<CauchyPairSummary> pairs;
    double fitted_order = 0.0;  // log sup-distance vs log eps_fine
};
/// E sup_t |v^eps - v^eps'|_1 over consecutive ladder pairs with
/// common-path coupling.
CauchyTable cauchy_study(const ExperimentPlan& plan);
CauchyTable cauchy_table_from_runs(const LadderRuns& ladder, bool use_vtilde = false);

struct VtildeRow {
    double epsilon, time, mean, std_error;
};
struct VtildeTable {
    std::vector<VtildeRow> rows;
    std::vector<std::pair<double, double>> sup_per_eps;  // (eps, sup_t mean)
    double fitted_exponent = 0.0;
};
/// E|v(t) - vtilde(t)|_1 per output time for one run.
VtildeTable vtilde_coupling_check(const RunResult& run);
VtildeTable vtilde_ladder_study(const ExperimentPlan& plan);
VtildeTable vtilde_table_from_runs(const LadderRuns& ladder);

struct ContractionRow {
    double time, mean, std_error;
};
struct ContractionTable {
    double epsilon = 0.0;
    double initial_distance = 0.0;
    std::vector<ContractionRow> rows;
    double worst_excess = 0.0;  // max_t (mean - initial_distance)
};
/// Paired-initial-data study under common noise (identical seeds), one
/// table per ladder entry.
std::vector<ContractionTable> contraction_study(const ExperimentPlan& plan,
                                                const std::function<double(double)>& initial_one,
                                                const std::function<double(double)>& initial_two);

/// Within-cell increment summaries: max over same-cell output pairs of
/// E|w(t) - w(s)|_1, plus the full-cell noise jump statistics.
struct IncrementSummary {
    double epsilon = 0.0;
    double max_v_increment = 0.0;       // over same-cell snapshot pairs
    double max_vtilde_increment = 0.0;  // over same-cell snapshot pairs
    double max_v_jump = 0.0;            // over cells: E|u~_{n+1} - u_n|_1
    // mean jump over full-width (cap-bound) cells; width-matched, so the
    // sqrt(eps) regression is free of max-selection bias. 0 if no cap cell.
    double cap_cell_jump = 0.0;
};
IncrementSummary within_cell_increments(const RunResult& run);

/// sup_t per-sample p-norms: E sup_t |w(t)|_p^p with standard error.
struct SupNorm {
    double mean = 0.0, std_error = 0.0;
};
SupNorm sup_norm_over_outputs(const RunResult& run, double p, bool use_vtilde);

// ---- persistence ----

/// Everything needed to reproduce a run byte-exactly (thread count aside).
struct RunManifest {
    std::string subcommand;  // run | cauchy | contraction | doubling
    std::string problem;
    std::string config_text;
    std::vector<double> epsilon_ladder;
    double epsilon = 0.0;
    int samples = 0;
    std::uint64_t seed = 0;
    std::vector<double> output_times;
    int grid_cells = 64;
    int threads = 1;
    double theta = 1.5;              // doubling
    std::vector<double> etas;        // doubling
    std::string det_flux = "engquist-osher";
    double cfl_adv = 0.0, cfl_diff = 0.0, dt_sde = 0.0, search_resolution = 0.0;
    double wall_clock_seconds = 0.0;

    std::string to_json() const;
    static RunManifest from_json(const std::string& text);
};

/// Executes the manifest and writes manifest.json, tables/*.csv and
/// fields/*.csv under out_dir. Rerunning the same manifest reproduces
/// every CSV byte for byte regardless of thread count.
int execute_manifest(const RunManifest& manifest, const std::string& out_dir);

void write_run_outputs(const RunResult& run, const std::string& out_dir);
void write_cauchy_csv(const CauchyTable& table, const std::string& path);
void write_contraction_csv(const ContractionTable& table, const std::string& path);
void write_doubling_csv(const DoublingRateTable& table, const std::string& path);
void write_vtilde_csv(const VtildeTable& table, const std::string& path);

}  // namespace splitkin
