#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "splitkin/grid_field.hpp"
#include "splitkin/model.hpp"

namespace splitkin {

/// Cumulative xi-quadrature of sigma: Q(u) = int_0^u sigma(zeta) dzeta,
/// trapezoid on a uniform xi grid of step dxi with exact partial cells.
/// This is the discrete object behind the parabolic dissipation n_1.
class SigmaQuadrature {
  public:
    SigmaQuadrature(const DiffusionSpec& diffusion, double lo, double hi, double dxi);

    double operator()(double u) const;  // throws QuadratureRangeExceeded
    double lo() const { return lo_; }
    double hi() const { return hi_; }
    double dxi() const { return dxi_; }

  private:
    ScalarMap sigma_;
    double lo_, hi_, dxi_;
    std::vector<double> cumulative_;  // from lo, trapezoid
    double at_zero_ = 0.0;
    double cumulative_at(double u) const;
};

enum class NumericalFlux { engquist_osher, lax_friedrichs };

struct DetScheme {
    NumericalFlux flux = NumericalFlux::engquist_osher;
    // Defaults satisfy cfl_adv + 2*cfl_diff <= 1, which keeps the combined
    // advection-diffusion update monotone; the pure cases allow up to 1/0.5.
    double cfl_adv = 0.45;
    double cfl_diff = 0.2;
    double lf_viscosity = 0.0;  // 0 = derive from the state hull per solve
    double xi_quadrature = 0.0;  // dxi for SigmaQuadrature; 0 = range/128
    std::shared_ptr<const SigmaQuadrature> sigma_q;  // optional, built per run
};

struct DetStepReport {
    double dt_taken = 0.0;
    double advective_cfl_used = 0.0;
    long steps = 0;
    // Quadratic-entropy dissipation increments per cell. The raw per-step
    // values telescope so that their grand total equals
    // (|u^n|_2^2 - |u^{n+1}|_2^2)/2 exactly; entries below -1e-12 are
    // clamped to 0 and counted, smaller negative roundoff is clamped
    // silently.
    std::vector<double> dissipation_cells;
    // |D_x Q(u)|^2 * dx * dt increments per cell (the n_1 density).
    std::vector<double> parabolic_cells;
    long clamp_count = 0;
    double dissipation_total_raw = 0.0;  // unclamped telescoped total

    void accumulate(const DetStepReport& step);
};

/// dt = min(cfl_adv dx / max|b|, cfl_diff dx^2 / max a) over the state hull
/// of u; returns the horizon cap when both maxima vanish.
double max_stable_dt(const DetScheme& scheme, const Field& u, const ProblemSpec& spec);

/// Exposed for monotonicity/consistency tests: the two-point numerical flux.
double numerical_flux(const DetScheme& scheme, const ProblemSpec& spec, double a, double b,
                      double lf_viscosity);

/// One explicit monotone finite-volume step with periodic wrap.
/// Throws CflViolation if dt exceeds the stable bound by more than 1e-12.
std::pair<Field, DetStepReport> det_step(const DetScheme& scheme, const Field& u, double dt,
                                         const ProblemSpec& spec);

using DetStepObserver =
    std::function<void(const Field& pre_state, const DetStepReport& step)>;

/// The deterministic semigroup S(tau): composition of det_step over a
/// uniform internal ladder reaching exactly tau. With fixed_dt > 0 the
/// ladder is pinned to that step (tau must be an integer multiple), which
/// makes the semigroup identity S(a)S(b) = S(a+b) hold bitwise.
std::pair<Field, DetStepReport> det_solve(const DetScheme& scheme, const Field& u, double tau,
                                          const ProblemSpec& spec, double fixed_dt = 0.0,
                                          const DetStepObserver& observer = nullptr);

}  // namespace splitkin
