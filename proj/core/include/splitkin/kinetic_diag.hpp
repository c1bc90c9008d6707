#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "splitkin/det_solver.hpp"
#include "splitkin/grid_field.hpp"
#include "splitkin/model.hpp"

namespace splitkin {

/// Uniform grid in the kinetic variable xi. Must cover the range of every
/// field it is applied to.
struct XiGrid {
    double lo = -1.0;
    double hi = 1.0;
    int bins = 128;

    double dxi() const { return (hi - lo) / bins; }
    double center(int k) const { return lo + (k + 0.5) * dxi(); }
    /// Containing bin, ties at bin edges going to the lower bin.
    /// Throws QuadratureRangeExceeded outside the range.
    int bin_of(double u) const;
};

/// Kinetic functions of the formulation: f+ = 1_{xi<u}, f- = -1_{xi>u}.
inline int f_plus(double u, double xi) { return xi < u ? 1 : 0; }
inline int f_minus(double u, double xi) { return xi > u ? -1 : 0; }
/// Equilibrium function: 1 on 0<xi<u, -1 on u<xi<0, 0 otherwise.
inline int chi(double u, double xi) {
    if (0.0 < xi && xi < u) return 1;
    if (u < xi && xi < 0.0) return -1;
    return 0;
}
/// sign = +1 selects f+, sign = -1 selects f-.
inline int kinetic_f(double u, double xi, int sign) {
    return sign >= 0 ? f_plus(u, xi) : f_minus(u, xi);
}

/// Per-sample dissipation accounting for one splitting run.
struct DissipationLedger {
    // parabolic dissipation n_1, accumulated over every det substep
    double n1_mass = 0.0;
    std::vector<double> n1_per_cell_interval;  // one entry per partition cell
    std::vector<double> n1_xi_hist;            // XiGrid-binned, Dirac at xi = u(x,t)
    // scheme-level quadratic entropy dissipation (cross-check object)
    double scheme_dissipation = 0.0;
    long clamp_count = 0;
    // accumulators of the kinetic-formulation balance, p in {0, 2}:
    // stoch_a_p = sum_k int g_k(x,v) |v|^p v dx dbeta_k,
    // g2_b_p    = int G^2(x,v) |v|^p dx dt along the noise interpolant
    double stoch_a0 = 0.0, stoch_a2 = 0.0;
    double g2_b0 = 0.0, g2_b2 = 0.0;
    bool has_accumulators = false;
    // endpoint norms of the run
    double initial_l2_sq = 0.0, initial_l4_p4 = 0.0;
    double final_l2_sq = 0.0, final_l4_p4 = 0.0;
    // total kinetic measure masses from the balance, filled at run end
    double m_mass = 0.0;     // p = 0
    double m_mass_p2 = 0.0;  // p = 2
};

struct ParabolicDissipation {
    double mass = 0.0;
    Field per_cell;
    std::vector<double> xi_hist;
};

/// n_1 from a sequence of (field, dt) snapshots: sum over steps and cells of
/// |D_x Q(u)|^2 dx dt with the central difference of the sigma quadrature,
/// mass binned at xi = u(x,t).
ParabolicDissipation parabolic_dissipation(
    std::span<const std::pair<Field, double>> weighted_snapshots, const ProblemSpec& spec,
    const SigmaQuadrature& quadrature, const XiGrid& xi_grid);

struct Norms0 {
    double l2_sq = 0.0;  // |u0|_2^2
    double l4_p4 = 0.0;  // |u0|_4^4
};

struct KineticMassReport {
    double p = 0.0;
    std::vector<double> per_sample;
    double mean = 0.0;
    double std_error = 0.0;
    double bound_C = 0.0;    // a-priori constant C(p, u0, T) from moment bounds
    double n1_mean = 0.0;    // ensemble mean parabolic mass, for m >= n1
    double mean_sq = 0.0;    // ensemble mean of m^2 (filled for p = 0)
    double sq_std_error = 0.0;
    double bound_m_sq = 0.0;  // a-priori bound on E m^2 (filled for p = 0)
};

/// Evaluates the discrete kinetic-measure balance per sample and the
/// ensemble mean; p must be one of the accumulated exponents {0, 2}.
/// Throws MissingAccumulators otherwise.
KineticMassReport kinetic_measure_mass(std::span<const DissipationLedger> ledgers, double p,
                                       double linear_growth_const, double horizon,
                                       const Norms0& u0_norms);

/// The three states entering the doubled kinetic comparison at one time:
/// v (noise interpolant), v_tilde (deterministic interpolant), and the
/// noise interpolant frozen at the cell start.
struct FieldTriple {
    Field v;
    Field v_tilde;
    Field v_cell_start;
};

struct DoublingOptions {
    double epsilon = 0.0;
    double epsilon_prime = 0.0;
    double gamma = 1.0;
    double horizon = 0.0;          // scales the envelope
    ScalarMap modulus_r;           // optional, enters the envelope
    const NoiseSpec* noise = nullptr;  // optional, enables the K term
};

struct DoublingReport {
    double eta = 0.0, delta = 0.0, epsilon = 0.0, epsilon_prime = 0.0;
    double value = 0.0;  // ensemble mean of the mollified doubled product
    std::vector<double> per_sample;
    double std_error = 0.0;
    // F-decomposition of the comparison against the plain L1-type distance
    double F1 = 0.0, F2 = 0.0, F3 = 0.0;
    // component magnitudes where computable from snapshots; the time
    // integrated terms I, J, J1', J2' are not reconstructible from
    // final-time fields and stay unset
    std::optional<double> I, J, K, I_prime, J1_prime, J2_prime, K_prime;
    double K_rate = 0.0;  // instantaneous K integrand at the snapshot time
    double envelope = 0.0;  // eta^-1 d + eta^-2 d^2g + eta^2 d^-1 + r(d)
    double surrogate_v_increment = 0.0;   // E|v(t)-v(t^eps)|_1, feeds I'
    double surrogate_vtilde_gap = 0.0;    // E|vtilde(t)-v(t^eps)|_1, feeds K'
};

/// Tensor quadrature of the quadruple mollified integral over paired
/// ensembles, (xi,zeta) sum restricted to the psi support band. Discrete
/// mollifier masses are normalized to 1 on the actual grids so that the
/// constant-field overlap identity is exact at the grid level.
/// Requires eta >= 2 dx and delta >= 2 dxi (ResolutionTooCoarse otherwise).
DoublingReport doubling_functional(std::span<const FieldTriple> first,
                                   std::span<const FieldTriple> second, double eta, double delta,
                                   const XiGrid& xi_grid, const DoublingOptions& opts = {});

struct DoublingLadderInput {
    double eta = 0.0;
    double epsilon = 0.0;
    double epsilon_prime = 0.0;
    std::vector<FieldTriple> first;
    std::vector<FieldTriple> second;
};

struct DoublingRateRow {
    double eta, delta, epsilon, epsilon_prime, value, std_error, envelope;
};

struct DoublingRateTable {
    double theta = 0.0;
    double gamma = 1.0;
    std::vector<DoublingRateRow> rows;
    double fitted_slope = 0.0;            // log value vs log eta
    double envelope_slope_reference = 0.0;  // min(theta-1, 2 gamma theta - 2, 2 - theta)
    bool nonincreasing_within_3se = false;
};

/// Doubling values along a (eta, epsilon) ladder with delta = eta^theta,
/// fitted against the theoretical envelope.
DoublingRateTable doubling_rate_table(std::span<const DoublingLadderInput> ladder, double theta,
                                      const DoublingOptions& opts, const XiGrid& xi_grid);

/// Mean and standard error with pairwise-deterministic reductions.
std::pair<double, double> mean_and_std_error(std::span<const double> values);

}  // namespace splitkin
