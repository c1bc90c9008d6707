#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "splitkin/grid_field.hpp"

namespace splitkin {

using ScalarMap = std::function<double(double)>;
/// Noise mode g_k(x, xi): x is a torus point, xi the state value.
using ModeMap = std::function<double(double, double)>;

/// Flux data B with derivative b and its declared polynomial growth.
/// eo_plus/eo_minus are the primitives of max(b,0) and min(b,0); the
/// Engquist-Osher scheme needs them in closed form so that the two-point
/// flux is consistent to machine precision.
struct FluxSpec {
    ScalarMap B;
    ScalarMap b;
    double growth_exponent = 1.0;  // p_b
    double growth_const = 1.0;     // C_b in |b| <= C_b (1+|xi|^p_b)
    double eval_lo = -1.0;
    double eval_hi = 1.0;
    ScalarMap eo_plus;   // integral of max(b,0) from 0
    ScalarMap eo_minus;  // integral of min(b,0) from 0
    ScalarMap B_primitive;  // integral of B from 0, for entropy accounting

    /// max |b| over [lo, hi], dense scan plus endpoints.
    double max_abs_b(double lo, double hi) const;
    bool is_zero() const { return !static_cast<bool>(B); }
};

/// Diffusion data: scalar a(u) = A(u) in 1D, sigma = sqrt(a), and the
/// primitive beta(u) = int_0^u a used by the monotone scheme.
struct DiffusionSpec {
    ScalarMap A;
    ScalarMap sigma;
    ScalarMap beta;
    double sigma_bound = 0.0;
    double gamma = 1.0;  // Hoelder exponent in (1/2, 1]
    double hoelder_const = 0.0;

    double max_a(double lo, double hi) const;
    bool is_zero() const { return !static_cast<bool>(A); }
};

struct NoiseSpec {
    std::vector<ModeMap> modes;
    double linear_growth_const = 0.0;  // C_g in G^2 <= C_g (1+xi^2)
    ScalarMap modulus_r;               // nondecreasing, r(0) = 0
    double modulus_const = 0.0;

    double g(std::size_t k, double x, double xi) const { return modes[k](x, xi); }
    /// G^2(x, xi) = sum_k g_k(x, xi)^2.
    double G2(double x, double xi) const;
    std::size_t mode_count() const { return modes.size(); }
    bool is_zero() const { return modes.empty(); }
};

struct ProblemSpec {
    std::string name;
    FluxSpec flux;
    DiffusionSpec diffusion;
    NoiseSpec noise;
    std::function<double(double)> initial;
    double horizon = 1.0;
    int dimension = 1;
};

struct ValidationTolerances {
    double tol_fd = 1e-6;     // relative, against (1+|xi|^p_b)
    double tol_psd = 1e-12;
    double tol_sqrt = 1e-10;
    double rel_slack = 1e-9;  // slack on declared-constant inequalities
};

struct CheckResult {
    std::string name;
    double worst_slack = 0.0;  // max over samples of (lhs - rhs); <= 0 passes
    bool pass = false;
};

struct ValidationReport {
    std::string problem;
    std::vector<CheckResult> checks;
    bool all_pass() const;
    std::string summary() const;
};

/// Samples every inequality of (H1)-(H3) on the declared range and reports
/// the worst slack per check. Throws NonFiniteEvaluation if a user map
/// returns NaN or infinity on the range, RangeEmpty if the range is
/// degenerate. Never mutates the spec.
ValidationReport validate_hypotheses(const ProblemSpec& spec, int samples,
                                     const ValidationTolerances& tol = {});

/// The stock desk-scale problems: pure SDE, inviscid Burgers, the degenerate
/// porous-medium-with-transport case, a smooth heat case, and Burgers with
/// multiplicative noise.
std::vector<ProblemSpec> builtin_problems();

/// Look up a builtin problem by name. Throws ConfigError if unknown.
ProblemSpec builtin_problem(const std::string& name);

}  // namespace splitkin
