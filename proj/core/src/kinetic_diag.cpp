#include "splitkin/kinetic_diag.hpp"

#include <algorithm>
#include <cmath>

#include "splitkin/sde_solver.hpp"

namespace splitkin {

int XiGrid::bin_of(double u) const {
    if (u < lo || u > hi) throw QuadratureRangeExceeded("XiGrid: value outside the xi range");
    const double pos = (u - lo) / dxi();
    auto k = static_cast<int>(std::floor(pos));
    if (k > 0 && pos == std::floor(pos)) --k;  // ties to the lower bin
    return std::min(k, bins - 1);
}

std::pair<double, double> mean_and_std_error(std::span<const double> values) {
    const std::size_t n = values.size();
    if (n == 0) return {0.0, 0.0};
    const double m = pairwise_sum(values) / static_cast<double>(n);
    if (n == 1) return {m, 0.0};
    std::vector<double> sq(n);
    for (std::size_t i = 0; i < n; ++i) sq[i] = (values[i] - m) * (values[i] - m);
    const double var = pairwise_sum(sq) / static_cast<double>(n - 1);
    return {m, std::sqrt(var / static_cast<double>(n))};
}

ParabolicDissipation parabolic_dissipation(
    std::span<const std::pair<Field, double>> weighted_snapshots, const ProblemSpec& spec,
    const SigmaQuadrature& quadrature, const XiGrid& xi_grid) {
    ParabolicDissipation out;
    out.xi_hist.assign(xi_grid.bins, 0.0);
    if (weighted_snapshots.empty()) return out;
    out.per_cell = Field(weighted_snapshots.front().first.grid(), 0.0);
    if (spec.diffusion.is_zero()) return out;

    std::vector<double> mass_terms;
    for (const auto& [u, dt] : weighted_snapshots) {
        const std::size_t n = u.size();
        const double dx = u.grid().dx();
        std::vector<double> q(n);
        for (std::size_t i = 0; i < n; ++i) q[i] = quadrature(u[i]);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t im = (i + n - 1) % n, ip = (i + 1) % n;
            const double dq = (q[ip] - q[im]) / (2.0 * dx);
            const double inc = dq * dq * dx * dt;
            out.per_cell[i] += inc;
            out.xi_hist[static_cast<std::size_t>(xi_grid.bin_of(u[i]))] += inc;
            mass_terms.push_back(inc);
        }
    }
    out.mass = pairwise_sum(mass_terms);
    return out;
}

KineticMassReport kinetic_measure_mass(std::span<const DissipationLedger> ledgers, double p,
                                       double linear_growth_const, double horizon,
                                       const Norms0& u0_norms) {
    if (p != 0.0 && p != 2.0)
        throw MissingAccumulators("kinetic_measure_mass: accumulators exist for p in {0, 2}");
    KineticMassReport rep;
    rep.p = p;
    std::vector<double> n1(ledgers.size());
    rep.per_sample.resize(ledgers.size());
    for (std::size_t s = 0; s < ledgers.size(); ++s) {
        const DissipationLedger& led = ledgers[s];
        if (!led.has_accumulators)
            throw MissingAccumulators("kinetic_measure_mass: run recorded no accumulators");
        const double denom = (p + 1.0) * (p + 2.0);
        double mass;
        if (p == 0.0) {
            mass = (led.initial_l2_sq - led.final_l2_sq) / denom + led.stoch_a0 / (p + 1.0) +
                   0.5 * led.g2_b0;
        } else {
            mass = (led.initial_l4_p4 - led.final_l4_p4) / denom + led.stoch_a2 / (p + 1.0) +
                   0.5 * led.g2_b2;
        }
        rep.per_sample[s] = mass;
        n1[s] = led.n1_mass;
    }
    std::tie(rep.mean, rep.std_error) = mean_and_std_error(rep.per_sample);
    rep.n1_mean = ledgers.empty() ? 0.0 : pairwise_sum(n1) / static_cast<double>(n1.size());

    // A-priori constant from the moment bounds: E m_p <= |u0|_{p+2}^{p+2} /
    // ((p+1)(p+2)) + C_g T / 2 (M_p + M_{p+2}), with M_q the Gronwall bound
    // and M_0 = 1 on the unit torus.
    auto moment_bound = [&](double q, double u0_norm_q) {
        if (q == 0.0) return 1.0;
        const double K = moment_bound_K(q, linear_growth_const);
        const double KT = moment_bound_KT(q, linear_growth_const);
        return std::exp(K * horizon) * (u0_norm_q + KT * horizon);
    };
    const double norm_p = p == 0.0 ? 1.0 : u0_norms.l2_sq;
    const double norm_p2 = p == 0.0 ? u0_norms.l2_sq : u0_norms.l4_p4;
    rep.bound_C = norm_p2 / ((p + 1.0) * (p + 2.0)) +
                  0.5 * linear_growth_const * horizon *
                      (moment_bound(p, norm_p) + moment_bound(p + 2.0, norm_p2));

    if (p == 0.0) {
        std::vector<double> sq(rep.per_sample.size());
        for (std::size_t s = 0; s < sq.size(); ++s) sq[s] = rep.per_sample[s] * rep.per_sample[s];
        std::tie(rep.mean_sq, rep.sq_std_error) = mean_and_std_error(sq);
        // E m^2 <= 3 [ (|u0|_2^2/2)^2 + E A^2 + E (B/2)^2 ] with the Ito
        // isometry E A^2 <= C_g T (M_2 + M_4) (using |v|_2^4 <= |v|_4^4 on
        // the unit torus) and (B/2)^2 <= (C_g T/2)^2 2 (1 + M_4).
        const double m2 = moment_bound(2.0, u0_norms.l2_sq);
        const double m4 = moment_bound(4.0, u0_norms.l4_p4);
        const double drop_sq = 0.25 * u0_norms.l2_sq * u0_norms.l2_sq;
        const double a_sq = linear_growth_const * horizon * (m2 + m4);
        const double b_half = 0.5 * linear_growth_const * horizon;
        rep.bound_m_sq = 3.0 * (drop_sq + a_sq + b_half * b_half * 2.0 * (1.0 + m4));
    }
    return rep;
}

namespace {

// T+(x, xi) = f+(v) + f+(vtilde) - f+(v_cell_start), values in {-1,0,1,2};
// piecewise constant in xi, evaluated on the xi bin centers.
void fill_triple_plus(const FieldTriple& t, const XiGrid& xg, std::vector<signed char>& out) {
    const std::size_t n = t.v.size();
    out.assign(n * static_cast<std::size_t>(xg.bins), 0);
    for (std::size_t i = 0; i < n; ++i) {
        for (int k = 0; k < xg.bins; ++k) {
            const double xi = xg.center(k);
            out[i * xg.bins + k] = static_cast<signed char>(
                f_plus(t.v[i], xi) + f_plus(t.v_tilde[i], xi) - f_plus(t.v_cell_start[i], xi));
        }
    }
}

void fill_triple_minus(const FieldTriple& t, const XiGrid& xg, std::vector<signed char>& out) {
    const std::size_t n = t.v.size();
    out.assign(n * static_cast<std::size_t>(xg.bins), 0);
    for (std::size_t i = 0; i < n; ++i) {
        for (int k = 0; k < xg.bins; ++k) {
            const double xi = xg.center(k);
            out[i * xg.bins + k] = static_cast<signed char>(
                f_minus(t.v[i], xi) + f_minus(t.v_tilde[i], xi) - f_minus(t.v_cell_start[i], xi));
        }
    }
}

struct MollifierTables {
    std::vector<double> rho;  // rho_hat at displacement m*dx, normalized on the grid
    std::vector<double> psi;  // psi_hat at offset m*dxi, normalized, m in [-band, band]
    int band = 0;
};

MollifierTables build_tables(double eta, double delta, const TorusGrid& grid, const XiGrid& xg) {
    MollifierTables t;
    const Mollifier rho(MollifierKind::space, eta);
    const Mollifier psi(MollifierKind::value, delta);
    const int n = grid.cells_per_axis;
    const double dx = grid.dx();
    t.rho.resize(n);
    for (int m = 0; m < n; ++m) t.rho[m] = rho(TorusGrid::distance(0.0, m * dx));
    const double rho_mass = pairwise_sum(t.rho) * dx;
    for (double& v : t.rho) v /= rho_mass;

    t.band = static_cast<int>(std::ceil(delta / xg.dxi())) + 1;
    t.psi.resize(2 * t.band + 1);
    for (int m = -t.band; m <= t.band; ++m) t.psi[m + t.band] = psi(m * xg.dxi());
    const double psi_mass = pairwise_sum(t.psi) * xg.dxi();
    for (double& v : t.psi) v /= psi_mass;
    return t;
}

// - sum over (x,y,xi,zeta) of Tp(x,xi) Tm(y,zeta) rho(x-y) psi(xi-zeta)
double doubled_product(const std::vector<signed char>& tp, const std::vector<signed char>& tm,
                       std::size_t n, const XiGrid& xg, const MollifierTables& tab,
                       double dx) {
    const int nb = xg.bins;
    const double dxi = xg.dxi();
    // U(y, k) = sum_l Tm(y, zeta_l) psi(xi_k - zeta_l) dxi
    std::vector<double> U(n * static_cast<std::size_t>(nb), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        const signed char* row = &tm[j * nb];
        for (int k = 0; k < nb; ++k) {
            double acc = 0.0;
            const int l0 = std::max(0, k - tab.band), l1 = std::min(nb - 1, k + tab.band);
            for (int l = l0; l <= l1; ++l)
                acc += static_cast<double>(row[l]) * tab.psi[k - l + tab.band];
            U[j * nb + k] = acc * dxi;
        }
    }
    std::vector<double> outer(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double acc_i = 0.0;
        const signed char* prow = &tp[i * nb];
        for (std::size_t j = 0; j < n; ++j) {
            const double w = tab.rho[(j + n - i) % n];
            if (w == 0.0) continue;
            double inner = 0.0;
            const double* urow = &U[j * nb];
            for (int k = 0; k < nb; ++k) inner += static_cast<double>(prow[k]) * urow[k];
            acc_i += w * inner;
        }
        outer[i] = acc_i;
    }
    return -pairwise_sum(outer) * dx * dx * dxi;
}

// E sum (a_i - b_j)^+ rho(x_i - y_j) dx^2, the eta-mollified positive-part
// distance used by the F decomposition.
double mollified_positive_part(const Field& a, const Field& b, const MollifierTables& tab) {
    const std::size_t n = a.size();
    const double dx = a.grid().dx();
    std::vector<double> outer(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double gap = a[i] - b[j];
            if (gap > 0.0) acc += gap * tab.rho[(j + n - i) % n];
        }
        outer[i] = acc;
    }
    return pairwise_sum(outer) * dx * dx;
}

double positive_part_distance(const Field& a, const Field& b) {
    const std::size_t n = a.size();
    const double dx = a.grid().dx();
    std::vector<double> terms(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) terms[i] = std::max(a[i] - b[i], 0.0) * dx;
    return pairwise_sum(terms);
}

}  // namespace

DoublingReport doubling_functional(std::span<const FieldTriple> first,
                                   std::span<const FieldTriple> second, double eta, double delta,
                                   const XiGrid& xi_grid, const DoublingOptions& opts) {
    if (first.empty() || first.size() != second.size())
        throw Error("doubling_functional: paired nonempty ensembles required");
    const TorusGrid& grid = first[0].v.grid();
    if (!(second[0].v.grid() == grid))
        throw GridMismatch("doubling_functional: ensembles on different grids");
    if (eta < 2.0 * grid.dx() || delta < 2.0 * xi_grid.dxi())
        throw ResolutionTooCoarse("doubling_functional: eta < 2 dx or delta < 2 dxi");
    for (const auto* ens : {&first, &second}) {
        for (const auto& t : *ens) {
            const double lo = std::min({t.v.min(), t.v_tilde.min(), t.v_cell_start.min()});
            const double hi = std::max({t.v.max(), t.v_tilde.max(), t.v_cell_start.max()});
            if (lo - delta < xi_grid.lo || hi + delta > xi_grid.hi)
                throw QuadratureRangeExceeded(
                    "doubling_functional: xi grid does not cover the field range plus delta");
        }
    }

    const MollifierTables tab = build_tables(eta, delta, grid, xi_grid);
    const std::size_t n = grid.total_cells();
    const double dx = grid.dx();
    const std::size_t samples = first.size();

    DoublingReport rep;
    rep.eta = eta;
    rep.delta = delta;
    rep.epsilon = opts.epsilon;
    rep.epsilon_prime = opts.epsilon_prime;

    std::vector<double> vals(samples), plain(samples), rho_only(samples), same_x(samples),
        v_inc_a(samples), v_inc_b(samples), vt_gap_a(samples), vt_gap_b(samples),
        k_rate(samples, 0.0);
    std::vector<signed char> tp, tm;
    for (std::size_t s = 0; s < samples; ++s) {
        const FieldTriple& A = first[s];
        const FieldTriple& B = second[s];
        fill_triple_plus(A, xi_grid, tp);
        fill_triple_minus(B, xi_grid, tm);
        vals[s] = doubled_product(tp, tm, n, xi_grid, tab, dx);

        const FieldTriple plainA{A.v, A.v, A.v};
        const FieldTriple plainB{B.v, B.v, B.v};
        fill_triple_plus(plainA, xi_grid, tp);
        fill_triple_minus(plainB, xi_grid, tm);
        plain[s] = doubled_product(tp, tm, n, xi_grid, tab, dx);
        rho_only[s] = mollified_positive_part(A.v, B.v, tab);
        same_x[s] = positive_part_distance(A.v, B.v);

        v_inc_a[s] = l1_distance(A.v, A.v_cell_start);
        v_inc_b[s] = l1_distance(B.v, B.v_cell_start);
        vt_gap_a[s] = l1_distance(A.v_tilde, A.v_cell_start);
        vt_gap_b[s] = l1_distance(B.v_tilde, B.v_cell_start);

        if (opts.noise && !opts.noise->is_zero()) {
            std::vector<double> outer(n, 0.0);
            const Mollifier psi(MollifierKind::value, delta);
            for (std::size_t i = 0; i < n; ++i) {
                double acc = 0.0;
                const double xi_v = A.v[i];
                for (std::size_t j = 0; j < n; ++j) {
                    const double w = tab.rho[(j + n - i) % n] * psi(xi_v - B.v[j]);
                    if (w == 0.0) continue;
                    double sum = 0.0;
                    for (std::size_t k = 0; k < opts.noise->mode_count(); ++k) {
                        const double d = opts.noise->g(k, grid.center(i), xi_v) -
                                         opts.noise->g(k, grid.center(j), B.v[j]);
                        sum += d * d;
                    }
                    acc += w * sum;
                }
                outer[i] = acc;
            }
            k_rate[s] = 0.5 * pairwise_sum(outer) * dx * dx;
        }
    }

    std::tie(rep.value, rep.std_error) = mean_and_std_error(vals);
    rep.per_sample = std::move(vals);
    const double plain_mean = mean_and_std_error(plain).first;
    const double rho_mean = mean_and_std_error(rho_only).first;
    const double same_mean = mean_and_std_error(same_x).first;
    rep.F1 = std::fabs(rep.value - plain_mean);
    rep.F2 = std::fabs(plain_mean - rho_mean);
    rep.F3 = std::fabs(rho_mean - same_mean);

    rep.surrogate_v_increment =
        0.5 * (mean_and_std_error(v_inc_a).first + mean_and_std_error(v_inc_b).first);
    rep.surrogate_vtilde_gap =
        0.5 * (mean_and_std_error(vt_gap_a).first + mean_and_std_error(vt_gap_b).first);
    rep.I_prime = rep.surrogate_v_increment;
    rep.K_prime = rep.surrogate_vtilde_gap;
    if (opts.noise && !opts.noise->is_zero()) {
        rep.K_rate = mean_and_std_error(k_rate).first;
        rep.K = rep.K_rate;
    }

    const double g = opts.gamma;
    rep.envelope = delta / eta + std::pow(delta, 2.0 * g) / (eta * eta) + eta * eta / delta +
                   (opts.modulus_r ? opts.modulus_r(delta) : delta);
    if (opts.horizon > 0.0) rep.envelope *= opts.horizon;
    return rep;
}

DoublingRateTable doubling_rate_table(std::span<const DoublingLadderInput> ladder, double theta,
                                      const DoublingOptions& opts, const XiGrid& xi_grid) {
    DoublingRateTable table;
    table.theta = theta;
    table.gamma = opts.gamma;
    table.envelope_slope_reference =
        std::min({theta - 1.0, 2.0 * opts.gamma * theta - 2.0, 2.0 - theta});

    for (const auto& entry : ladder) {
        const double delta = std::pow(entry.eta, theta);
        DoublingOptions row_opts = opts;
        row_opts.epsilon = entry.epsilon;
        row_opts.epsilon_prime = entry.epsilon_prime;
        const DoublingReport rep =
            doubling_functional(entry.first, entry.second, entry.eta, delta, xi_grid, row_opts);
        table.rows.push_back({entry.eta, delta, entry.epsilon, entry.epsilon_prime, rep.value,
                              rep.std_error, rep.envelope});
    }

    table.nonincreasing_within_3se = true;
    for (std::size_t i = 1; i < table.rows.size(); ++i) {
        const auto& prev = table.rows[i - 1];
        const auto& cur = table.rows[i];
        if (cur.value > prev.value + 3.0 * (prev.std_error + cur.std_error))
            table.nonincreasing_within_3se = false;
    }

    // log-log least squares of the value against eta
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (const auto& row : table.rows) {
        if (row.value <= 0.0) continue;
        const double x = std::log(row.eta), y = std::log(row.value);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++m;
    }
    if (m >= 2) table.fitted_slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    return table;
}

}  // namespace splitkin
