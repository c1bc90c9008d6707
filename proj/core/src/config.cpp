#include "splitkin/config.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

namespace splitkin {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

}  // namespace

Config Config::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str(), path);
}

Config Config::parse_string(const std::string& text, const std::string& origin) {
    Config cfg;
    cfg.origin_ = origin;
    std::istringstream in(text);
    std::string line, section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(origin + ":" + std::to_string(line_no) + ": unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
        const std::string full = section.empty() ? key : section + "." + key;
        cfg.entries_.insert({full, {value, line_no}});
    }
    return cfg;
}

const Config::Entry* Config::find(const std::string& key) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? nullptr : &it->second;
}

void Config::fail(const std::string& key, const std::string& what) const {
    throw ConfigError(origin_ + ": key '" + key + "': " + what);
}

bool Config::has(const std::string& key) const { return find(key) != nullptr; }

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
    const Entry* e = find(key);
    return e ? e->value : fallback;
}

double Config::get_double(const std::string& key, double fallback) const {
    const Entry* e = find(key);
    if (!e) return fallback;
    try {
        std::size_t used = 0;
        const double v = std::stod(e->value, &used);
        if (used != e->value.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError(origin_ + ":" + std::to_string(e->line) + ": key '" + key +
                          "': not a number: '" + e->value + "'");
    }
}

std::int64_t Config::get_int(const std::string& key, std::int64_t fallback) const {
    const Entry* e = find(key);
    if (!e) return fallback;
    try {
        std::size_t used = 0;
        const long long v = std::stoll(e->value, &used);
        if (used != e->value.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError(origin_ + ":" + std::to_string(e->line) + ": key '" + key +
                          "': not an integer: '" + e->value + "'");
    }
}

std::vector<double> Config::get_double_list(const std::string& key) const {
    const Entry* e = find(key);
    std::vector<double> out;
    if (!e) return out;
    std::istringstream in(e->value);
    std::string tok;
    while (std::getline(in, tok, ',')) {
        tok = trim(tok);
        if (tok.empty()) continue;
        try {
            out.push_back(std::stod(tok));
        } catch (const std::exception&) {
            throw ConfigError(origin_ + ":" + std::to_string(e->line) + ": key '" + key +
                              "': not a number: '" + tok + "'");
        }
    }
    return out;
}

std::vector<std::string> Config::get_all(const std::string& key) const {
    std::vector<std::string> out;
    auto [lo, hi] = entries_.equal_range(key);
    for (auto it = lo; it != hi; ++it) out.push_back(it->second.value);
    return out;
}

std::string Config::require_string(const std::string& key) const {
    const Entry* e = find(key);
    if (!e) fail(key, "missing required key");
    return e->value;
}

double Config::require_double(const std::string& key) const {
    if (!has(key)) fail(key, "missing required key");
    return get_double(key, 0.0);
}

ModeMap noise_mode_from_registry(const std::string& shape, double amplitude, int wavenumber) {
    if (shape == "linear") {
        return [amplitude](double, double xi) { return amplitude * xi; };
    }
    if (shape == "sine") {
        return [amplitude, wavenumber](double x, double xi) {
            return amplitude * std::sin(2.0 * M_PI * wavenumber * x) * xi /
                   std::sqrt(1.0 + xi * xi);
        };
    }
    if (shape == "additive-sine") {
        return [amplitude, wavenumber](double x, double) {
            return amplitude * std::sin(2.0 * M_PI * wavenumber * x);
        };
    }
    throw ConfigError("unknown noise shape '" + shape + "'");
}

namespace {

FluxSpec flux_from_config(const Config& cfg, FluxSpec base) {
    const std::string kind = cfg.get_string("flux.kind", "");
    if (kind.empty()) return base;
    FluxSpec fx;
    fx.eval_lo = cfg.get_double("flux.eval_lo", -3.0);
    fx.eval_hi = cfg.get_double("flux.eval_hi", 3.0);
    if (kind == "none" || kind == "zero") return fx;
    if (kind == "burgers") {
        fx.B = [](double u) { return 0.5 * u * u; };
        fx.b = [](double u) { return u; };
        fx.growth_exponent = 1.0;
        fx.growth_const = 1.0;
        fx.eo_plus = [](double u) { double p = std::max(u, 0.0); return 0.5 * p * p; };
        fx.eo_minus = [](double u) { double m = std::min(u, 0.0); return 0.5 * m * m; };
        fx.B_primitive = [](double u) { return u * u * u / 6.0; };
        return fx;
    }
    if (kind == "linear") {
        const double c = cfg.get_double("flux.speed", 1.0);
        fx.B = [c](double u) { return c * u; };
        fx.b = [c](double) { return c; };
        fx.growth_exponent = 0.0;
        fx.growth_const = std::fabs(c);
        fx.eo_plus = [c](double u) { return c > 0.0 ? c * u : 0.0; };
        fx.eo_minus = [c](double u) { return c < 0.0 ? c * u : 0.0; };
        fx.B_primitive = [c](double u) { return 0.5 * c * u * u; };
        return fx;
    }
    throw ConfigError("unknown flux kind '" + kind + "'");
}

DiffusionSpec diffusion_from_config(const Config& cfg, DiffusionSpec base) {
    const std::string kind = cfg.get_string("diffusion.kind", "");
    if (kind.empty()) return base;
    if (kind == "none" || kind == "zero") return DiffusionSpec{};
    if (kind == "constant") {
        const double nu = cfg.get_double("diffusion.nu", 0.1);
        DiffusionSpec df;
        df.A = [nu](double) { return nu; };
        df.sigma = [nu](double) { return std::sqrt(nu); };
        df.beta = [nu](double u) { return nu * u; };
        df.sigma_bound = std::sqrt(nu);
        df.gamma = 1.0;
        df.hoelder_const = 0.0;
        return df;
    }
    if (kind == "porous") {
        const double gamma = cfg.get_double("diffusion.gamma", 0.75);
        const double u_max = cfg.get_double("diffusion.u_max", 1.0);
        DiffusionSpec df;
        const double q = 2.0 * gamma + 1.0;
        df.A = [gamma, u_max](double u) {
            return std::pow(std::min(std::fabs(u), u_max), 2.0 * gamma);
        };
        df.sigma = [gamma, u_max](double u) {
            return std::pow(std::min(std::fabs(u), u_max), gamma);
        };
        df.beta = [u_max, q, gamma](double u) {
            const double au = std::fabs(u);
            const double val = au <= u_max
                                   ? std::pow(au, q) / q
                                   : std::pow(u_max, q) / q +
                                         (au - u_max) * std::pow(u_max, 2.0 * gamma);
            return u >= 0.0 ? val : -val;
        };
        df.sigma_bound = std::pow(u_max, gamma);
        df.gamma = gamma;
        df.hoelder_const = 1.0;
        return df;
    }
    throw ConfigError("unknown diffusion kind '" + kind + "'");
}

std::function<double(double)> initial_from_config(const Config& cfg,
                                                  std::function<double(double)> base) {
    const std::string kind = cfg.get_string("initial.kind", "");
    if (kind.empty()) return base;
    if (kind == "sine") {
        const double amp = cfg.get_double("initial.amplitude", 1.0);
        const int k = static_cast<int>(cfg.get_int("initial.wavenumber", 1));
        return [amp, k](double x) { return amp * std::sin(2.0 * M_PI * k * x); };
    }
    if (kind == "constant") {
        const double v = cfg.get_double("initial.value", 1.0);
        return [v](double) { return v; };
    }
    if (kind == "riemann") {
        const double l = cfg.get_double("initial.left", 1.0);
        const double r = cfg.get_double("initial.right", 0.0);
        return [l, r](double x) { return x < 0.5 ? l : r; };
    }
    throw ConfigError("unknown initial kind '" + kind + "'");
}

}  // namespace

ProblemSpec problem_from_config(const Config& cfg) {
    ProblemSpec p;
    const std::string base = cfg.get_string("problem.base", "");
    if (!base.empty()) p = builtin_problem(base);
    p.name = cfg.get_string("problem.name", base.empty() ? "custom" : base);
    p.horizon = cfg.get_double("problem.T", p.horizon);
    p.dimension = static_cast<int>(cfg.get_int("problem.dimension", p.dimension));

    p.flux = flux_from_config(cfg, p.flux);
    p.diffusion = diffusion_from_config(cfg, p.diffusion);
    p.initial = initial_from_config(cfg, p.initial);
    if (!p.initial) throw ConfigError("no initial data: set [initial] kind or problem.base");

    const auto mode_lines = cfg.get_all("noise.mode");
    if (!mode_lines.empty()) {
        NoiseSpec nz;
        for (const auto& line : mode_lines) {
            std::istringstream in(line);
            std::string shape;
            double amp = 0.0;
            int k = 1;
            in >> shape >> amp;
            if (!in) throw ConfigError("noise.mode expects '<shape> <amplitude> [wavenumber]'");
            in >> k;
            nz.modes.push_back(noise_mode_from_registry(shape, amp, k));
        }
        nz.linear_growth_const = cfg.require_double("noise.growth_const");
        nz.modulus_const = cfg.require_double("noise.modulus_const");
        const std::string r = cfg.get_string("noise.r", "lipschitz");
        if (r == "lipschitz") {
            nz.modulus_r = [](double d) { return d; };
        } else if (r == "holder") {
            const double g = p.diffusion.is_zero() ? 0.75 : p.diffusion.gamma;
            nz.modulus_r = [g](double d) { return std::pow(d, 2.0 * g - 1.0); };
        } else {
            throw ConfigError("unknown noise.r '" + r + "' (lipschitz | holder)");
        }
        p.noise = std::move(nz);
    }
    return p;
}

RunOptions run_options_from_config(const Config& cfg) {
    RunOptions opts;
    opts.epsilon = cfg.get_double("split.epsilon", opts.epsilon);
    opts.samples = static_cast<int>(cfg.get_int("split.samples", opts.samples));
    opts.search_resolution = cfg.get_double("split.search_resolution", 0.0);
    opts.output_times = cfg.get_double_list("split.output_times");
    opts.grid_cells = static_cast<int>(cfg.get_int("grid.N", opts.grid_cells));
    opts.seed = static_cast<std::uint64_t>(cfg.get_int("seed", cfg.get_int("run.seed", 42)));
    opts.threads = static_cast<int>(cfg.get_int("run.threads", 1));
    opts.dt_sde = cfg.get_double("sde.substep", 0.0);
    opts.sde_modes = static_cast<int>(cfg.get_int("sde.modes", 0));
    opts.xi_bins = static_cast<int>(cfg.get_int("diag.xi_bins", opts.xi_bins));
    opts.state_margin = cfg.get_double("diag.state_margin", 0.0);

    const std::string flux = cfg.get_string("det.flux", "engquist-osher");
    if (flux == "engquist-osher") {
        opts.det.flux = NumericalFlux::engquist_osher;
    } else if (flux == "lax-friedrichs") {
        opts.det.flux = NumericalFlux::lax_friedrichs;
    } else {
        throw ConfigError("unknown det.flux '" + flux + "'");
    }
    opts.det.cfl_adv = cfg.get_double("det.cfl_adv", opts.det.cfl_adv);
    opts.det.cfl_diff = cfg.get_double("det.cfl_diff", opts.det.cfl_diff);
    opts.det.lf_viscosity = cfg.get_double("det.lf_viscosity", 0.0);
    opts.det.xi_quadrature = cfg.get_double("det.xi_quadrature", 0.0);
    return opts;
}

}  // namespace splitkin
