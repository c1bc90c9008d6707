#pragma once

#include <cstdint>
#include <vector>

#include "splitkin/det_solver.hpp"
#include "splitkin/kinetic_diag.hpp"
#include "splitkin/model.hpp"
#include "splitkin/sde_solver.hpp"

namespace splitkin {

/// The adaptive times {t_n} shared by the whole ensemble. Times sit on the
/// store grid; boundary indices are the authoritative representation.
struct Partition {
    double epsilon = 0.0;
    double cap_T = 0.0;
    double search_resolution = 0.0;
    std::vector<double> times;           // t_0 = 0 < ... < t_M = T
    std::vector<std::int64_t> indices;   // store boundary indices of times

    std::size_t cells() const { return times.empty() ? 0 : times.size() - 1; }
    double width(std::size_t n) const { return times[n + 1] - times[n]; }
    double max_width() const;
};

struct RunOptions {
    double epsilon = 0.1;
    int samples = 64;
    std::uint64_t seed = 42;
    std::vector<double> output_times;  // snapped to the store grid
    int grid_cells = 64;
    DetScheme det;
    double dt_sde = 0.0;             // 0 = epsilon/8
    int sde_modes = 0;               // 0 = all modes of the problem
    double search_resolution = 0.0;  // 0 = min(epsilon, T)/16
    double dt_store = 0.0;           // 0 = search_resolution; fix across coupled runs
    int threads = 1;
    int xi_bins = 128;
    double state_margin = 0.0;       // 0 = auto pad of the xi range
    bool record_cell_states = false; // keep per-cell boundary fields (tests)
};

/// Ensemble-mean L1 drift of the deterministic flow, sampled at the
/// candidate times of one partition cell.
struct DTrace {
    std::vector<double> times;
    std::vector<double> values;
};

struct CellRecord {
    Field u_n;            // S(t_{n+1}-t_n) applied to u~_n
    Field u_tilde_next;   // R(t_{n+1}, t_n) applied to u_n
};

/// Per-sample snapshots of the two interpolants at the output times.
/// v_cell_start holds u_n of the cell containing each output time, the
/// third state entering the doubling comparison.
struct SampleTrajectory {
    std::vector<Field> v;
    std::vector<Field> v_tilde;
    std::vector<Field> v_cell_start;
    // |u~_{n+1} - u_n|_1 per cell: the within-cell noise increment
    // E|v(t_{n+1}-0) - v(t_n)|_1 feeding the sqrt(eps) rate check
    std::vector<double> cell_noise_jump;
    std::vector<CellRecord> cells;  // only when record_cell_states
};

struct RunResult {
    ProblemSpec problem;
    RunOptions options;
    TimeGrid time_grid;
    Partition partition;
    std::vector<double> output_times;
    std::vector<std::int64_t> output_indices;
    std::vector<std::size_t> cell_of_output;  // containing partition cell
    std::vector<SampleTrajectory> trajectories;
    std::vector<DissipationLedger> ledgers;
    std::vector<DTrace> d_traces;  // one per partition cell
    Field initial;
    XiGrid xi_grid;

    Norms0 initial_norms() const;
    /// Paired field triples of all samples at one output time.
    std::vector<FieldTriple> triples_at(std::size_t output_index) const;
};

/// Internal state of one splitting run under construction: the per-sample
/// fields u~_n (post-noise) carried between cells, their RNG streams, and
/// the shared partition. Exposed for the step-level operations below.
class Ensemble {
  public:
    Ensemble(const ProblemSpec& spec, const RunOptions& options);

    const TimeGrid& time_grid() const { return grid_; }
    const Partition& partition() const { return partition_; }
    int samples() const { return static_cast<int>(states_.size()); }
    const Field& state(int s) const { return states_[s]; }
    double current_time() const;
    bool finished() const;

    /// The partition rule: first candidate on the search grid where the
    /// ensemble-mean deviation D(tau) = E|S(tau - t_n)u~_n - u~_n|_1
    /// exceeds epsilon, capped at t_n + epsilon and at T. The deterministic
    /// evolutions advance incrementally and are retained, so the subsequent
    /// advance_cell reuses them. Never returns <= t_n.
    double next_partition_time();

    /// Completes the current cell: freezes u_n from the retained S-pass,
    /// runs the noise operator to t_next, records snapshots and ledgers.
    void advance_cell();

    RunResult&& take_result() &&;

  private:
    ProblemSpec spec_;
    RunOptions opts_;
    TimeGrid grid_;
    Partition partition_;
    SdeStepPlan plan_;
    std::int64_t eps_cells_ = 0;
    std::int64_t search_cells_ = 0;
    std::int64_t group_cells_ = 0;
    std::int64_t t_idx_ = 0;
    std::int64_t t_next_idx_ = 0;
    std::vector<Field> states_;        // u~_n per sample
    std::vector<Field> post_s_;        // u_n per sample (retained S-pass)
    std::vector<RngStream> streams_;
    RunResult result_;
    DTrace current_trace_;
    std::vector<double> cell_n1_;      // per-sample n1 of the current cell
    std::vector<std::vector<std::pair<std::size_t, Field>>> staged_;  // v~ snapshots
    double ledgers_init_l2_ = 0.0;
    double ledgers_init_l4_ = 0.0;
};

/// The product-formula driver: iterates next_partition_time / advance_cell
/// until t_M = T and returns the partition, trajectories and diagnostics.
RunResult run_splitting(const ProblemSpec& spec, const RunOptions& options);

}  // namespace splitkin
