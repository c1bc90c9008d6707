#include "splitkin/splitting.hpp"

#include <algorithm>
#include <cmath>

#include "splitkin/parallel.hpp"

namespace splitkin {

double Partition::max_width() const {
    double m = 0.0;
    for (std::size_t n = 0; n + 1 < times.size(); ++n) m = std::max(m, width(n));
    return m;
}

Norms0 RunResult::initial_norms() const {
    const double l2 = lp_norm(initial, 2.0), l4 = lp_norm(initial, 4.0);
    return {l2 * l2, l4 * l4 * l4 * l4};
}

std::vector<FieldTriple> RunResult::triples_at(std::size_t output_index) const {
    std::vector<FieldTriple> out;
    out.reserve(trajectories.size());
    for (const auto& tr : trajectories)
        out.push_back({tr.v[output_index], tr.v_tilde[output_index], tr.v_cell_start[output_index]});
    return out;
}

namespace {

std::int64_t commensurate_cells(double value, double dt_store, const char* what) {
    const auto m = std::llround(value / dt_store);
    if (m < 1 || std::fabs(static_cast<double>(m) * dt_store - value) >
                     1e-9 * std::max(std::fabs(value), dt_store)) {
        throw ConfigError(std::string(what) + " is not commensurate with the store resolution");
    }
    return m;
}

}  // namespace

Ensemble::Ensemble(const ProblemSpec& spec, const RunOptions& options)
    : spec_(spec), opts_(options) {
    if (!(opts_.epsilon > 0.0)) throw ConfigError("epsilon must be > 0");
    if (opts_.samples < 1) throw ConfigError("samples must be >= 1");
    if (spec_.dimension != 1) throw ConfigError("run_splitting: only the 1D torus is supported");

    const double T = spec_.horizon;
    const double search_default = std::min(opts_.epsilon, T) / 16.0;
    const double search =
        opts_.search_resolution > 0.0 ? opts_.search_resolution : search_default;
    const double dt_store = opts_.dt_store > 0.0 ? opts_.dt_store : search;
    grid_ = TimeGrid(T, dt_store);

    if (opts_.search_resolution > 0.0) {
        search_cells_ = commensurate_cells(search, dt_store, "split.search_resolution");
    } else {
        // defaulted search snaps to the store grid instead of erroring
        search_cells_ = std::max<std::int64_t>(1, std::llround(search / dt_store));
    }
    const double eps_ratio = opts_.epsilon / dt_store;
    if (eps_ratio >= static_cast<double>(grid_.cells())) {
        eps_cells_ = grid_.cells();  // the horizon cap always binds first
    } else {
        eps_cells_ = commensurate_cells(opts_.epsilon, dt_store, "split.epsilon");
    }
    const double dt_sde = opts_.dt_sde > 0.0 ? opts_.dt_sde : opts_.epsilon / 8.0;
    group_cells_ = std::max<std::int64_t>(1, std::llround(dt_sde / dt_store));
    plan_.dt_sde = dt_sde;
    plan_.k_modes = opts_.sde_modes;

    partition_.epsilon = opts_.epsilon;
    partition_.cap_T = T;
    partition_.search_resolution = static_cast<double>(search_cells_) * dt_store;
    partition_.times = {0.0};
    partition_.indices = {0};

    const TorusGrid torus(1, opts_.grid_cells);
    const Field u0 = Field::from_function(torus, spec_.initial);
    if (!u0.all_finite()) throw NonFiniteEvaluation("initial data is not finite");

    // State range with margin: xi grid for the ledgers and the sigma
    // quadrature table both live on it.
    const double lo = u0.min(), hi = u0.max();
    const double pad = opts_.state_margin > 0.0 ? opts_.state_margin : std::max(1.0, hi - lo);
    result_.xi_grid = XiGrid{lo - pad, hi + pad, opts_.xi_bins};
    if (!spec_.diffusion.is_zero() && !opts_.det.sigma_q) {
        const double dxi = opts_.det.xi_quadrature > 0.0 ? opts_.det.xi_quadrature
                                                         : (result_.xi_grid.hi - result_.xi_grid.lo) / 128.0;
        opts_.det.sigma_q = std::make_shared<SigmaQuadrature>(spec_.diffusion, result_.xi_grid.lo,
                                                              result_.xi_grid.hi, dxi);
    }

    // Output times snap to the store grid.
    for (double t : opts_.output_times) {
        auto idx = std::llround(t / dt_store);
        idx = std::clamp<std::int64_t>(idx, 0, grid_.cells());
        result_.output_indices.push_back(idx);
        result_.output_times.push_back(grid_.boundary_time(idx));
    }
    result_.cell_of_output.assign(result_.output_indices.size(), 0);

    states_.assign(static_cast<std::size_t>(opts_.samples), u0);
    post_s_.assign(static_cast<std::size_t>(opts_.samples), u0);
    streams_.resize(static_cast<std::size_t>(opts_.samples));
    for (int s = 0; s < opts_.samples; ++s)
        streams_[static_cast<std::size_t>(s)] = RngStream{opts_.seed, static_cast<std::uint64_t>(s), 0};

    const double l2 = lp_norm(u0, 2.0), l4 = lp_norm(u0, 4.0);
    ledgers_init_l2_ = l2 * l2;
    ledgers_init_l4_ = l4 * l4 * l4 * l4;
    result_.ledgers.assign(static_cast<std::size_t>(opts_.samples), DissipationLedger{});
    for (auto& led : result_.ledgers) {
        led.initial_l2_sq = ledgers_init_l2_;
        led.initial_l4_p4 = ledgers_init_l4_;
        led.n1_xi_hist.assign(static_cast<std::size_t>(opts_.xi_bins), 0.0);
        led.has_accumulators = true;
    }
    result_.trajectories.resize(static_cast<std::size_t>(opts_.samples));
    for (auto& tr : result_.trajectories) {
        tr.v.resize(result_.output_indices.size());
        tr.v_tilde.resize(result_.output_indices.size());
        tr.v_cell_start.resize(result_.output_indices.size());
    }
    staged_.assign(static_cast<std::size_t>(opts_.samples), {});
    cell_n1_.assign(static_cast<std::size_t>(opts_.samples), 0.0);

    result_.problem = spec_;
    result_.options = opts_;
    result_.time_grid = grid_;
    result_.initial = u0;
}

double Ensemble::current_time() const { return grid_.boundary_time(t_idx_); }

bool Ensemble::finished() const { return t_idx_ >= grid_.cells(); }

double Ensemble::next_partition_time() {
    if (finished()) throw Error("next_partition_time: already at the horizon");
    const std::int64_t cap = std::min(t_idx_ + eps_cells_, grid_.cells());
    current_trace_ = DTrace{};
    for (auto& v : cell_n1_) v = 0.0;
    for (auto& st : staged_) st.clear();

    // Stop list: candidates t_n + j * search, output times in between, cap.
    struct Stop {
        std::int64_t idx;
        bool candidate;
    };
    std::vector<Stop> stops;
    for (std::int64_t c = t_idx_ + search_cells_; c < cap; c += search_cells_)
        stops.push_back({c, true});
    const bool cap_on_search_grid = (cap - t_idx_) % search_cells_ == 0;
    stops.push_back({cap, cap_on_search_grid});
    for (std::size_t o = 0; o < result_.output_indices.size(); ++o) {
        const std::int64_t oi = result_.output_indices[o];
        if (oi <= t_idx_ || oi >= cap) continue;
        if ((oi - t_idx_) % search_cells_ != 0) stops.push_back({oi, false});
    }
    std::sort(stops.begin(), stops.end(), [](const Stop& a, const Stop& b) { return a.idx < b.idx; });
    stops.erase(std::unique(stops.begin(), stops.end(),
                            [](const Stop& a, const Stop& b) { return a.idx == b.idx; }),
                stops.end());

    const std::size_t n_samples = states_.size();
    for (std::size_t s = 0; s < n_samples; ++s) post_s_[s] = states_[s];

    // One uniform det substep per sample for the whole cell; inserting stops
    // then never perturbs the ladder, so the retained evolution is bitwise
    // the plain det_solve of the cell.
    std::vector<double> cell_dt(n_samples, 0.0);
    parallel_for(n_samples, opts_.threads, [&](std::size_t s) {
        const double bound = max_stable_dt(opts_.det, states_[s], spec_);
        const double m = std::ceil(grid_.dt_store() / std::min(bound, grid_.dt_store()) - 1e-12);
        cell_dt[s] = grid_.dt_store() / std::max(1.0, m);
    });

    std::vector<std::int64_t> pos(n_samples, t_idx_);
    std::vector<double> d_vals(n_samples, 0.0);
    t_next_idx_ = cap;
    for (const Stop& stop : stops) {
        parallel_for(n_samples, opts_.threads, [&](std::size_t s) {
            const double duration = grid_.duration(pos[s], stop.idx);
            if (duration > 0.0) {
                const auto k = std::llround(duration / cell_dt[s]);
                const bool pinned =
                    k >= 1 && std::fabs(static_cast<double>(k) * cell_dt[s] - duration) <=
                                  1e-9 * std::max(duration, 1.0);
                auto& led = result_.ledgers[s];
                auto observer = [&](const Field& pre, const DetStepReport& rep) {
                    const double n1_step = pairwise_sum(rep.parabolic_cells);
                    led.n1_mass += n1_step;
                    cell_n1_[s] += n1_step;
                    led.scheme_dissipation += rep.dissipation_total_raw;
                    led.clamp_count += rep.clamp_count;
                    for (std::size_t i = 0; i < rep.parabolic_cells.size(); ++i) {
                        if (rep.parabolic_cells[i] != 0.0)
                            led.n1_xi_hist[static_cast<std::size_t>(result_.xi_grid.bin_of(pre[i]))] +=
                                rep.parabolic_cells[i];
                    }
                };
                auto [next, rep] =
                    det_solve(opts_.det, post_s_[s], duration, spec_, pinned ? cell_dt[s] : 0.0,
                              observer);
                (void)rep;
                post_s_[s] = std::move(next);
            }
            pos[s] = stop.idx;
            for (std::size_t o = 0; o < result_.output_indices.size(); ++o) {
                if (result_.output_indices[o] == stop.idx)
                    staged_[s].push_back({o, post_s_[s]});
            }
            if (stop.candidate) d_vals[s] = l1_distance(post_s_[s], states_[s]);
        });
        if (stop.candidate) {
            const double D = pairwise_sum(d_vals) / static_cast<double>(n_samples);
            current_trace_.times.push_back(grid_.boundary_time(stop.idx));
            current_trace_.values.push_back(D);
            if (D > opts_.epsilon) {
                t_next_idx_ = stop.idx;
                break;
            }
        }
        if (stop.idx == cap) {
            t_next_idx_ = cap;
            break;
        }
    }
    return grid_.boundary_time(t_next_idx_);
}

void Ensemble::advance_cell() {
    const std::int64_t t_next = t_next_idx_;
    if (t_next <= t_idx_) throw HorizonNotReached("advance_cell: no partition progress");
    const std::size_t n_samples = states_.size();
    const std::size_t cell_index = partition_.cells();

    // output -> containing cell map is sample independent; fill it here so
    // the parallel bodies never touch shared slots
    for (std::size_t o = 0; o < result_.output_indices.size(); ++o) {
        const std::int64_t oi = result_.output_indices[o];
        if (oi >= t_idx_ && oi < t_next) result_.cell_of_output[o] = cell_index;
    }

    parallel_for(n_samples, opts_.threads, [&](std::size_t s) {
        // post_s_ sits exactly at t_next: the stop walk ended there.
        auto& tr = result_.trajectories[s];
        auto& led = result_.ledgers[s];
        const Field& u_n = post_s_[s];
        const Field& u_tilde_n = states_[s];

        // Snapshots at the cell start: v = u_n, v~ = u~_n.
        for (std::size_t o = 0; o < result_.output_indices.size(); ++o) {
            if (result_.output_indices[o] == t_idx_) {
                tr.v[o] = u_n;
                tr.v_tilde[o] = u_tilde_n;
                tr.v_cell_start[o] = u_n;
            }
        }
        // Deterministic interpolant snapshots staged during the search;
        // a stage exactly at t_next belongs to the next cell and is dropped.
        for (auto& [o, field] : staged_[s]) {
            if (result_.output_indices[o] < t_next) tr.v_tilde[o] = std::move(field);
        }
        staged_[s].clear();
        led.n1_per_cell_interval.push_back(cell_n1_[s]);

        // Noise interpolant snapshots strictly inside the cell: replay R
        // from u_n over the same store increments, so observation never
        // perturbs the trajectory.
        for (std::size_t o = 0; o < result_.output_indices.size(); ++o) {
            const std::int64_t oi = result_.output_indices[o];
            if (oi > t_idx_ && oi < t_next) {
                tr.v[o] = sde_solve_on_grid(u_n, grid_, t_idx_, oi, group_cells_, plan_, spec_,
                                            streams_[s]);
                tr.v_cell_start[o] = u_n;
            }
        }

        // Main noise pass with the balance accumulators.
        const double dx_meas = u_n.grid().cell_measure();
        auto observer = [&](const Field& pre, std::span<const double> dbeta, double dt) {
            const std::size_t K = dbeta.size();
            for (std::size_t k = 0; k < K; ++k) {
                double i0 = 0.0, i2 = 0.0;
                for (std::size_t i = 0; i < pre.size(); ++i) {
                    const double g = spec_.noise.g(k, pre.grid().center(i), pre[i]);
                    i0 += g * pre[i];
                    i2 += g * pre[i] * pre[i] * pre[i];
                }
                led.stoch_a0 += i0 * dx_meas * dbeta[k];
                led.stoch_a2 += i2 * dx_meas * dbeta[k];
            }
            double b0 = 0.0, b2 = 0.0;
            for (std::size_t i = 0; i < pre.size(); ++i) {
                const double g2 = spec_.noise.G2(pre.grid().center(i), pre[i]);
                b0 += g2;
                b2 += g2 * pre[i] * pre[i];
            }
            led.g2_b0 += b0 * dx_meas * dt;
            led.g2_b2 += b2 * dx_meas * dt;
        };
        Field u_tilde_next = sde_solve_on_grid(u_n, grid_, t_idx_, t_next, group_cells_, plan_,
                                               spec_, streams_[s],
                                               spec_.noise.is_zero() ? SdeStepObserver{} : observer);
        tr.cell_noise_jump.push_back(l1_distance(u_tilde_next, u_n));
        if (opts_.record_cell_states) tr.cells.push_back({u_n, u_tilde_next});
        states_[s] = std::move(u_tilde_next);
    });

    result_.d_traces.push_back(std::move(current_trace_));
    partition_.indices.push_back(t_next);
    partition_.times.push_back(grid_.boundary_time(t_next));
    t_idx_ = t_next;
}

RunResult&& Ensemble::take_result() && {
    if (!finished()) throw HorizonNotReached("run did not reach the horizon");
    if (partition_.times.back() != grid_.t_end())
        throw HorizonNotReached("partition does not end at T");

    // Snapshots at t = T are the left limits of the last cell.
    const std::size_t n_samples = states_.size();
    for (std::size_t o = 0; o < result_.output_indices.size(); ++o)
        if (result_.output_indices[o] == grid_.cells())
            result_.cell_of_output[o] = partition_.cells() - 1;
    for (std::size_t s = 0; s < n_samples; ++s) {
        auto& tr = result_.trajectories[s];
        for (std::size_t o = 0; o < result_.output_indices.size(); ++o) {
            if (result_.output_indices[o] == grid_.cells()) {
                tr.v[o] = states_[s];
                tr.v_tilde[o] = post_s_[s];
                tr.v_cell_start[o] = post_s_[s];
            }
        }
        auto& led = result_.ledgers[s];
        const double l2 = lp_norm(states_[s], 2.0), l4 = lp_norm(states_[s], 4.0);
        led.final_l2_sq = l2 * l2;
        led.final_l4_p4 = l4 * l4 * l4 * l4;
        led.m_mass = (led.initial_l2_sq - led.final_l2_sq) / 2.0 + led.stoch_a0 + 0.5 * led.g2_b0;
        led.m_mass_p2 = (led.initial_l4_p4 - led.final_l4_p4) / 12.0 + led.stoch_a2 / 3.0 +
                        0.5 * led.g2_b2;
    }
    result_.partition = partition_;
    return std::move(result_);
}

RunResult run_splitting(const ProblemSpec& spec, const RunOptions& options) {
    Ensemble ens(spec, options);
    const auto cell_bound =
        static_cast<std::size_t>(std::ceil(spec.horizon / ens.partition().search_resolution)) + 2;
    while (!ens.finished()) {
        ens.next_partition_time();
        ens.advance_cell();
        if (ens.partition().cells() > cell_bound)
            throw HorizonNotReached("partition cell count exceeded the progress bound");
    }
    return std::move(ens).take_result();
}

}  // namespace splitkin
