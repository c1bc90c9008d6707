#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "splitkin/grid_field.hpp"
#include "splitkin/model.hpp"

namespace splitkin {

/// splitmix64 finalizer; the one fixed hash behind every random draw.
std::uint64_t splitmix64(std::uint64_t x);

/// Counter-based RNG stream. A variate is a pure function of
/// (seed, sample, mode, counter), so identical draws are identical bits
/// regardless of platform threading or evaluation order, and replaying a
/// stretch of noise is just re-reading the same counters.
/// The per-sample key is splitmix64(splitmix64(seed) ^ splitmix64(sample)).
struct RngStream {
    std::uint64_t seed = 0;
    std::uint64_t sample = 0;
    std::uint64_t cursor = 0;  // draw index used by the next increment

    std::uint64_t key() const;
    /// Standard normal at (key, mode, counter); Box-Muller on two uniforms.
    double normal(std::uint32_t mode, std::uint64_t counter) const;
};

/// Gaussian increment with mean 0 and variance dt for the given mode, read
/// at the stream's current cursor. Does not advance the cursor.
double sample_increments(const RngStream& rng, std::uint32_t mode, double dt);

enum class SdeScheme { euler_maruyama, exact_linear };

struct SdeStepPlan {
    double dt_sde = 0.0;  // substep cap; run layers default this to epsilon/8
    int k_modes = 0;      // 0 = all modes of the problem
    SdeScheme scheme = SdeScheme::euler_maruyama;
    double linear_lambda = 0.0;  // coefficient for the exact_linear oracle
};

/// One noise step: v_i += sum_k g_k(x_i, v_i) dbeta_k with one shared
/// increment per mode (drawn at rng.cursor, which then advances by one).
/// Throws NonFiniteState if the update leaves the finite range.
Field sde_step(const Field& v, double dt, const SdeStepPlan& plan, const ProblemSpec& spec,
               RngStream& rng);

/// The stochastic operator R(t,s): substeps of equal length <= dt_sde
/// covering [s,t]; draw indices advance deterministically with the substep
/// count.
Field sde_solve(const Field& v, double s, double t, const SdeStepPlan& plan,
                const ProblemSpec& spec, RngStream& rng);

/// Constants of the L^p moment bound E|v(t)|_p^p <= e^{K(t-s)}(E|v_s|_p^p
/// + K_T (t-s)). From the Ito/Gronwall proof with the Young split
/// |v|^{p-2} <= (p-2)/p |v|^p + 2/p on the unit torus: c_p = 2(p-1)/p,
/// K = p(p-1)/2 * C_g * c_p = (p-1)^2 C_g and K_T = (p-1) C_g.
double moment_bound_K(double p, double linear_growth_const);
double moment_bound_KT(double p, double linear_growth_const);

// --- store-grid machinery used by the splitting engine and the studies ---

/// Uniform store grid on [0, t_end]: full cells of width dt_store plus at
/// most one ragged final cell when t_end is not commensurate. All engine
/// times are boundary indices into this grid, so adaptive partitions,
/// substeps and output times stay exactly aligned across runs that share
/// the grid (the common-path coupling of the studies).
class TimeGrid {
  public:
    TimeGrid() = default;
    TimeGrid(double t_end, double dt_store);

    double t_end() const { return t_end_; }
    double dt_store() const { return dt_store_; }
    std::int64_t cells() const { return cells_; }
    std::int64_t boundaries() const { return cells_ + 1; }
    double boundary_time(std::int64_t i) const;
    double cell_width(std::int64_t c) const;
    double duration(std::int64_t i, std::int64_t j) const;
    /// Nearest boundary index; throws ConfigError if t is not within
    /// tol of a boundary.
    std::int64_t index_of(double t, double tol = 1e-9) const;
    /// Whether x is an integer multiple of dt_store within relative 1e-9.
    bool commensurate(double x) const;

  private:
    double t_end_ = 0.0;
    double dt_store_ = 0.0;
    std::int64_t cells_ = 0;
    bool ragged_ = false;
};

/// Brownian increment of one mode over one store cell, as a pure function
/// of (stream, mode, cell index).
double store_increment(const RngStream& rng, const TimeGrid& grid, std::uint32_t mode,
                       std::int64_t cell);

/// Brownian path value beta_k(boundary i) = sum of store increments.
double store_path(const RngStream& rng, const TimeGrid& grid, std::uint32_t mode,
                  std::int64_t boundary);

/// Per-substep hook: pre-noise state, shared increments, substep length.
using SdeStepObserver =
    std::function<void(const Field& pre_state, std::span<const double> dbeta, double dt)>;

/// R(t,s) on the store grid: walks boundaries [from, to), grouping
/// group_cells store cells per Euler-Maruyama substep (last group short)
/// and feeding each substep the aggregated increments of its cells.
/// Coarsening or refining group_cells re-reads the same Brownian path.
Field sde_solve_on_grid(const Field& v, const TimeGrid& grid, std::int64_t from, std::int64_t to,
                        std::int64_t group_cells, const SdeStepPlan& plan,
                        const ProblemSpec& spec, const RngStream& rng,
                        const SdeStepObserver& observer = nullptr);

}  // namespace splitkin
