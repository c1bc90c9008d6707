#include "splitkin/model.hpp"

#include <cmath>
#include <sstream>

namespace splitkin {

namespace {

double checked(double v, const char* what) {
    if (!std::isfinite(v)) {
        throw NonFiniteEvaluation(std::string("validate_hypotheses: ") + what +
                                  " returned a non-finite value");
    }
    return v;
}

double scan_max(const ScalarMap& f, double lo, double hi, bool absolute) {
    const int n = 256;
    double m = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double xi = lo + (hi - lo) * i / n;
        const double v = f(xi);
        m = std::max(m, absolute ? std::fabs(v) : v);
    }
    return m;
}

}  // namespace

double FluxSpec::max_abs_b(double lo, double hi) const {
    if (is_zero()) return 0.0;
    return scan_max(b, lo, hi, true);
}

double DiffusionSpec::max_a(double lo, double hi) const {
    if (is_zero()) return 0.0;
    return scan_max(A, lo, hi, false);
}

double NoiseSpec::G2(double x, double xi) const {
    double s = 0.0;
    for (const auto& gk : modes) {
        const double g = gk(x, xi);
        s += g * g;
    }
    return s;
}

bool ValidationReport::all_pass() const {
    for (const auto& c : checks)
        if (!c.pass) return false;
    return true;
}

std::string ValidationReport::summary() const {
    std::ostringstream os;
    os.precision(17);
    os << "hypothesis validation for '" << problem << "'\n";
    for (const auto& c : checks)
        os << "  [" << (c.pass ? "pass" : "FAIL") << "] " << c.name
           << "  worst slack " << c.worst_slack << "\n";
    os << (all_pass() ? "all checks passed" : "SOME CHECKS FAILED") << "\n";
    return os.str();
}

ValidationReport validate_hypotheses(const ProblemSpec& spec, int samples,
                                     const ValidationTolerances& tol) {
    if (samples < 2) throw Error("validate_hypotheses: samples must be >= 2");
    const double lo = spec.flux.eval_lo;
    const double hi = spec.flux.eval_hi;
    if (!(hi > lo)) throw RangeEmpty("validate_hypotheses: eval_range is degenerate");

    ValidationReport rep;
    rep.problem = spec.name;
    auto grid_point = [&](int i) { return lo + (hi - lo) * i / (samples - 1); };
    auto add = [&](const std::string& name, double worst) {
        rep.checks.push_back({name, worst, worst <= 0.0});
    };

    // (H1) finite-difference consistency of b with B, and polynomial growth.
    {
        double worst_fd = -kInf, worst_growth = -kInf;
        const auto& fx = spec.flux;
        if (!fx.is_zero()) {
            for (int i = 0; i < samples; ++i) {
                const double xi = grid_point(i);
                const double h = 1e-5 * std::max(1.0, std::fabs(xi));
                const double fd =
                    (checked(fx.B(xi + h), "B") - checked(fx.B(xi - h), "B")) / (2.0 * h);
                const double bxi = checked(fx.b(xi), "b");
                const double envelope = 1.0 + std::pow(std::fabs(xi), fx.growth_exponent);
                worst_fd = std::max(worst_fd, std::fabs(fd - bxi) - tol.tol_fd * envelope);
                worst_growth = std::max(
                    worst_growth, std::fabs(bxi) - fx.growth_const * envelope * (1.0 + tol.rel_slack));
            }
        }
        add("H1 flux derivative matches finite difference", worst_fd);
        add("H1 polynomial growth of b", worst_growth);
    }

    // (H2) diffusion matrix checks. In 1D positive semidefinite means a >= 0.
    {
        double worst_psd = -kInf, worst_sqrt = -kInf, worst_bound = -kInf, worst_beta0 = -kInf,
               worst_mono = -kInf, worst_hoelder = -kInf;
        const auto& df = spec.diffusion;
        if (!df.is_zero()) {
            for (int i = 0; i < samples; ++i) {
                const double xi = grid_point(i);
                const double a = checked(df.A(xi), "A");
                const double s = checked(df.sigma(xi), "sigma");
                worst_psd = std::max(worst_psd, -a - tol.tol_psd);
                worst_sqrt = std::max(worst_sqrt, std::fabs(s * s - a) - tol.tol_sqrt);
                worst_bound = std::max(
                    worst_bound, std::fabs(s) - df.sigma_bound * (1.0 + tol.rel_slack) - tol.tol_psd);
            }
            worst_beta0 = std::fabs(checked(df.beta(0.0), "beta")) - 1e-12;
            for (int i = 0; i + 1 < samples; ++i) {
                const double b0 = checked(df.beta(grid_point(i)), "beta");
                const double b1 = checked(df.beta(grid_point(i + 1)), "beta");
                worst_mono = std::max(worst_mono, b0 - b1 - 1e-12);
            }
            const int pair_n = std::min(samples, 200);
            for (int i = 0; i < pair_n; ++i) {
                const double xi = lo + (hi - lo) * i / (pair_n - 1);
                const double si = df.sigma(xi);
                for (int j = i + 1; j < pair_n; ++j) {
                    const double zj = lo + (hi - lo) * j / (pair_n - 1);
                    const double gap = std::fabs(si - df.sigma(zj));
                    const double rhs = df.hoelder_const *
                                       std::pow(std::fabs(xi - zj), df.gamma) *
                                       (1.0 + tol.rel_slack);
                    worst_hoelder = std::max(worst_hoelder, gap - rhs - tol.tol_psd);
                }
            }
        }
        add("H2 A positive semidefinite", worst_psd);
        add("H2 sigma squares to A", worst_sqrt);
        add("H2 sigma bounded", worst_bound);
        add("H2 sigma Hoelder continuous", worst_hoelder);
        add("H2 beta(0) = 0", worst_beta0);
        add("H2 beta nondecreasing", worst_mono);
    }

    // (H3) noise growth and joint modulus of continuity.
    {
        double worst_growth = -kInf, worst_modulus = -kInf, worst_r = -kInf;
        const auto& nz = spec.noise;
        if (!nz.is_zero()) {
            const int nx = std::min(samples, 24);
            const int nxi = std::min(samples, 24);
            auto xat = [&](int i) { return static_cast<double>(i) / nx; };
            auto xiat = [&](int i) { return lo + (hi - lo) * i / (nxi - 1); };
            for (int i = 0; i < nx; ++i) {
                for (int j = 0; j < nxi; ++j) {
                    const double g2 = checked(nz.G2(xat(i), xiat(j)), "G2");
                    const double rhs = nz.linear_growth_const *
                                       (1.0 + xiat(j) * xiat(j)) * (1.0 + tol.rel_slack);
                    worst_growth = std::max(worst_growth, g2 - rhs - tol.tol_psd);
                }
            }
            for (int ix = 0; ix < nx; ++ix) {
                for (int iy = 0; iy < nx; ++iy) {
                    const double x = xat(ix), y = xat(iy);
                    const double dxy = TorusGrid::distance(x, y);
                    for (int jx = 0; jx < nxi; ++jx) {
                        for (int jy = 0; jy < nxi; ++jy) {
                            const double xi = xiat(jx), zeta = xiat(jy);
                            double sum = 0.0;
                            for (const auto& gk : nz.modes) {
                                const double d = checked(gk(x, xi), "g_k") -
                                                 checked(gk(y, zeta), "g_k");
                                sum += d * d;
                            }
                            const double dv = std::fabs(xi - zeta);
                            const double rhs =
                                nz.modulus_const *
                                (dxy * dxy + dv * checked(nz.modulus_r(dv), "r")) *
                                (1.0 + tol.rel_slack);
                            worst_modulus = std::max(worst_modulus, sum - rhs - tol.tol_psd);
                        }
                    }
                }
            }
            worst_r = std::fabs(checked(nz.modulus_r(0.0), "r")) - 1e-14;
            double prev = 0.0;
            for (int i = 0; i <= 64; ++i) {
                const double d = (hi - lo) * i / 64.0;
                const double r = checked(nz.modulus_r(d), "r");
                worst_r = std::max(worst_r, prev - r - 1e-14);
                prev = r;
            }
        }
        add("H3 linear growth of G^2", worst_growth);
        add("H3 joint modulus of continuity", worst_modulus);
        add("H3 modulus r admissible", worst_r);
    }

    // Initial data must evaluate finite.
    {
        double worst = -1.0;
        if (spec.initial) {
            for (int i = 0; i < samples; ++i) {
                const double u0 = spec.initial(static_cast<double>(i) / samples);
                if (!std::isfinite(u0)) worst = 1.0;
            }
        }
        add("initial data finite", worst);
    }

    return rep;
}

namespace {

FluxSpec burgers_flux() {
    FluxSpec fx;
    fx.B = [](double u) { return 0.5 * u * u; };
    fx.b = [](double u) { return u; };
    fx.growth_exponent = 1.0;
    fx.growth_const = 1.0;
    fx.eval_lo = -3.0;
    fx.eval_hi = 3.0;
    fx.eo_plus = [](double u) { double p = std::max(u, 0.0); return 0.5 * p * p; };
    fx.eo_minus = [](double u) { double m = std::min(u, 0.0); return 0.5 * m * m; };
    fx.B_primitive = [](double u) { return u * u * u / 6.0; };
    return fx;
}

DiffusionSpec constant_diffusion(double nu) {
    DiffusionSpec df;
    df.A = [nu](double) { return nu; };
    df.sigma = [nu](double) { return std::sqrt(nu); };
    df.beta = [nu](double u) { return nu * u; };
    df.sigma_bound = std::sqrt(nu);
    df.gamma = 1.0;
    df.hoelder_const = 0.0;
    return df;
}

// a(u) = min(|u|, u_max)^(2 gamma); sigma = min(|u|, u_max)^gamma is
// gamma-Hoelder with constant 1, saturating so that sigma stays bounded.
DiffusionSpec porous_diffusion(double gamma, double u_max) {
    DiffusionSpec df;
    df.A = [gamma, u_max](double u) { return std::pow(std::min(std::fabs(u), u_max), 2.0 * gamma); };
    df.sigma = [gamma, u_max](double u) { return std::pow(std::min(std::fabs(u), u_max), gamma); };
    const double q = 2.0 * gamma + 1.0;
    df.beta = [gamma, u_max, q](double u) {
        const double au = std::fabs(u);
        double val;
        if (au <= u_max) {
            val = std::pow(au, q) / q;
        } else {
            val = std::pow(u_max, q) / q + (au - u_max) * std::pow(u_max, 2.0 * gamma);
        }
        return u >= 0.0 ? val : -val;
    };
    df.sigma_bound = std::pow(u_max, gamma);
    df.gamma = gamma;
    df.hoelder_const = 1.0;
    return df;
}

ModeMap linear_mode(double lambda) {
    return [lambda](double, double xi) { return lambda * xi; };
}

// lambda sin(2 pi k x) * xi / sqrt(1 + xi^2): multiplicative, bounded in xi,
// Lipschitz in both arguments.
ModeMap sine_mode(double lambda, int wavenumber) {
    return [lambda, wavenumber](double x, double xi) {
        return lambda * std::sin(2.0 * M_PI * wavenumber * x) * xi / std::sqrt(1.0 + xi * xi);
    };
}

ScalarMap lipschitz_modulus() {
    return [](double d) { return d; };
}

ScalarMap hoelder_modulus(double gamma) {
    // r(d) = d^(2 gamma - 1), the natural modulus when sigma is gamma-Hoelder.
    return [gamma](double d) { return std::pow(d, 2.0 * gamma - 1.0); };
}

}  // namespace

std::vector<ProblemSpec> builtin_problems() {
    std::vector<ProblemSpec> out;

    {
        ProblemSpec p;
        p.name = "pure-sde";
        p.flux.eval_lo = -3.0;
        p.flux.eval_hi = 3.0;
        const double lambda = 0.5;
        p.noise.modes = {linear_mode(lambda)};
        p.noise.linear_growth_const = lambda * lambda;
        p.noise.modulus_r = lipschitz_modulus();
        p.noise.modulus_const = lambda * lambda;
        p.initial = [](double) { return 1.0; };
        p.horizon = 0.5;
        out.push_back(std::move(p));
    }
    {
        ProblemSpec p;
        p.name = "burgers";
        p.flux = burgers_flux();
        p.initial = [](double x) { return std::sin(2.0 * M_PI * x); };
        p.horizon = 0.3;
        out.push_back(std::move(p));
    }
    {
        ProblemSpec p;
        p.name = "degenerate-transport";
        p.flux = burgers_flux();
        p.diffusion = porous_diffusion(0.75, 1.0);
        p.noise.modes = {sine_mode(0.2, 1), sine_mode(0.1, 2)};
        p.noise.linear_growth_const = 0.2 * 0.2 + 0.1 * 0.1;
        p.noise.modulus_r = hoelder_modulus(0.75);
        p.noise.modulus_const = 8.0;
        p.initial = [](double x) { return std::sin(2.0 * M_PI * x); };
        p.horizon = 0.3;
        out.push_back(std::move(p));
    }
    {
        ProblemSpec p;
        p.name = "heat";
        p.flux.eval_lo = -3.0;
        p.flux.eval_hi = 3.0;
        p.diffusion = constant_diffusion(0.1);
        p.initial = [](double x) { return std::sin(2.0 * M_PI * x); };
        p.horizon = 0.25;
        out.push_back(std::move(p));
    }
    {
        ProblemSpec p;
        p.name = "burgers-noise";
        p.flux = burgers_flux();
        p.noise.modes = {sine_mode(0.2, 1)};
        p.noise.linear_growth_const = 0.2 * 0.2;
        p.noise.modulus_r = lipschitz_modulus();
        p.noise.modulus_const = 4.0;
        p.initial = [](double x) { return std::sin(2.0 * M_PI * x); };
        p.horizon = 0.3;
        out.push_back(std::move(p));
    }

    return out;
}

ProblemSpec builtin_problem(const std::string& name) {
    for (auto& p : builtin_problems())
        if (p.name == name) return p;
    throw ConfigError("unknown builtin problem '" + name + "'");
}

}  // namespace splitkin
