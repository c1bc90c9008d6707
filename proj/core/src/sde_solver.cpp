#include "splitkin/sde_solver.hpp"

#include <cmath>

namespace splitkin {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t RngStream::key() const {
    return splitmix64(splitmix64(seed) ^ splitmix64(sample));
}

namespace {

double to_unit(std::uint64_t h) {
    // (0,1), never exactly 0, so log() below is safe.
    return (static_cast<double>(h >> 11) + 0.5) * 0x1p-53;
}

}  // namespace

double RngStream::normal(std::uint32_t mode, std::uint64_t counter) const {
    std::uint64_t h = key();
    h = splitmix64(h ^ (0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(mode) + 1)));
    h = splitmix64(h ^ (0xBF58476D1CE4E5B9ULL * (counter + 1)));
    const double u1 = to_unit(h);
    const double u2 = to_unit(splitmix64(h));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

double sample_increments(const RngStream& rng, std::uint32_t mode, double dt) {
    if (!(dt > 0.0)) throw Error("sample_increments: dt must be > 0");
    return std::sqrt(dt) * rng.normal(mode, rng.cursor);
}

namespace {

std::size_t effective_modes(const SdeStepPlan& plan, const ProblemSpec& spec) {
    const std::size_t all = spec.noise.mode_count();
    if (plan.k_modes <= 0) return all;
    return std::min<std::size_t>(static_cast<std::size_t>(plan.k_modes), all);
}

Field apply_noise(const Field& v, std::span<const double> dbeta, double dt,
                  const SdeStepPlan& plan, const ProblemSpec& spec) {
    Field out = v;
    const auto& grid = v.grid();
    if (plan.scheme == SdeScheme::exact_linear) {
        // Pathwise-exact geometric update for g(x,xi) = lambda xi; oracle use.
        const double lam = plan.linear_lambda;
        const double factor = std::exp(lam * (dbeta.empty() ? 0.0 : dbeta[0]) -
                                       0.5 * lam * lam * dt);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] *= factor;
    } else {
        for (std::size_t i = 0; i < out.size(); ++i) {
            const double x = grid.center(i);
            double acc = v[i];
            for (std::size_t k = 0; k < dbeta.size(); ++k)
                acc += spec.noise.g(k, x, v[i]) * dbeta[k];
            out[i] = acc;
        }
    }
    if (!out.all_finite()) throw NonFiniteState("sde update produced a non-finite value");
    return out;
}

}  // namespace

Field sde_step(const Field& v, double dt, const SdeStepPlan& plan, const ProblemSpec& spec,
               RngStream& rng) {
    if (!(plan.dt_sde > 0.0)) throw Error("sde_step: plan.dt_sde must be > 0");
    if (dt > plan.dt_sde + 1e-12) throw Error("sde_step: dt exceeds plan.dt_sde");
    const std::size_t K = effective_modes(plan, spec);
    std::vector<double> dbeta(K);
    for (std::size_t k = 0; k < K; ++k)
        dbeta[k] = sample_increments(rng, static_cast<std::uint32_t>(k), dt);
    ++rng.cursor;
    return apply_noise(v, dbeta, dt, plan, spec);
}

Field sde_solve(const Field& v, double s, double t, const SdeStepPlan& plan,
                const ProblemSpec& spec, RngStream& rng) {
    if (t < s) throw Error("sde_solve: t must be >= s");
    if (t == s || spec.noise.is_zero()) return v;
    const auto n = std::max<std::int64_t>(
        1, static_cast<std::int64_t>(std::ceil((t - s) / plan.dt_sde - 1e-12)));
    const double dt = (t - s) / static_cast<double>(n);
    Field state = v;
    for (std::int64_t j = 0; j < n; ++j) state = sde_step(state, dt, plan, spec, rng);
    return state;
}

double moment_bound_K(double p, double linear_growth_const) {
    return (p - 1.0) * (p - 1.0) * linear_growth_const;
}

double moment_bound_KT(double p, double linear_growth_const) {
    return (p - 1.0) * linear_growth_const;
}

TimeGrid::TimeGrid(double t_end, double dt_store) : t_end_(t_end), dt_store_(dt_store) {
    if (!(t_end > 0.0)) throw ConfigError("TimeGrid: horizon must be > 0");
    if (!(dt_store > 0.0)) throw ConfigError("TimeGrid: dt_store must be > 0");
    const double q = t_end / dt_store;
    const double snap = 1e-9 * std::max(1.0, q);  // relative: q itself carries O(q) ulps
    auto full = static_cast<std::int64_t>(std::floor(q + snap));
    ragged_ = (q - static_cast<double>(full)) > snap;
    cells_ = full + (ragged_ ? 1 : 0);
    if (cells_ < 1) throw ConfigError("TimeGrid: dt_store larger than the horizon");
}

double TimeGrid::boundary_time(std::int64_t i) const {
    if (i >= cells_) return t_end_;
    return static_cast<double>(i) * dt_store_;
}

double TimeGrid::cell_width(std::int64_t c) const {
    return boundary_time(c + 1) - boundary_time(c);
}

double TimeGrid::duration(std::int64_t i, std::int64_t j) const {
    return boundary_time(j) - boundary_time(i);
}

std::int64_t TimeGrid::index_of(double t, double tol) const {
    const auto i = std::llround(t / dt_store_);
    const auto idx = std::min(std::max<std::int64_t>(i, 0), cells_);
    if (std::fabs(boundary_time(idx) - t) > tol * std::max(1.0, std::fabs(t)))
        throw ConfigError("time does not lie on the store grid");
    return idx;
}

bool TimeGrid::commensurate(double x) const {
    const auto m = std::llround(x / dt_store_);
    return m >= 1 && std::fabs(static_cast<double>(m) * dt_store_ - x) <=
                         1e-9 * std::max(std::fabs(x), dt_store_);
}

double store_increment(const RngStream& rng, const TimeGrid& grid, std::uint32_t mode,
                       std::int64_t cell) {
    return std::sqrt(grid.cell_width(cell)) * rng.normal(mode, static_cast<std::uint64_t>(cell));
}

double store_path(const RngStream& rng, const TimeGrid& grid, std::uint32_t mode,
                  std::int64_t boundary) {
    double acc = 0.0;
    for (std::int64_t c = 0; c < boundary; ++c) acc += store_increment(rng, grid, mode, c);
    return acc;
}

Field sde_solve_on_grid(const Field& v, const TimeGrid& grid, std::int64_t from, std::int64_t to,
                        std::int64_t group_cells, const SdeStepPlan& plan,
                        const ProblemSpec& spec, const RngStream& rng,
                        const SdeStepObserver& observer) {
    if (from > to) throw Error("sde_solve_on_grid: from > to");
    if (group_cells < 1) throw Error("sde_solve_on_grid: group_cells must be >= 1");
    const std::size_t K = effective_modes(plan, spec);
    Field state = v;
    std::vector<double> dbeta(K, 0.0);
    std::int64_t c = from;
    while (c < to) {
        // Groups are anchored at the interval start, so a replay truncated
        // at an interior boundary consumes the exact same increments.
        const std::int64_t g_end = std::min(c + group_cells - (c - from) % group_cells, to);
        const double dt = grid.duration(c, g_end);
        for (std::size_t k = 0; k < K; ++k) {
            double acc = 0.0;
            for (std::int64_t cc = c; cc < g_end; ++cc)
                acc += store_increment(rng, grid, static_cast<std::uint32_t>(k), cc);
            dbeta[k] = acc;
        }
        Field next = apply_noise(state, dbeta, dt, plan, spec);
        if (observer) observer(state, dbeta, dt);
        state = std::move(next);
        c = g_end;
    }
    return state;
}

}  // namespace splitkin
