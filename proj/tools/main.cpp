// splitkin CLI: validate builtin or config-defined problems, run the
// splitting construction, and drive the convergence studies.
//
// Exit codes: 0 success, 2 validation/acceptance failure, 1 runtime error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "splitkin/acceptance.hpp"
#include "splitkin/harness.hpp"
#include "splitkin/snapshot_io.hpp"

namespace fs = std::filesystem;
using namespace splitkin;

namespace {

struct CommonArgs {
    std::string problem = "degenerate-transport";
    std::string config_path;
    std::string out_dir = "out";
    std::uint64_t seed = 42;
    int samples = 64;
    int grid_cells = 64;
    int threads = 1;
    CLI::Option* seed_opt = nullptr;
    CLI::Option* samples_opt = nullptr;
    CLI::Option* grid_opt = nullptr;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--problem", args.problem, "builtin problem name");
    cmd->add_option("--config", args.config_path, "problem/run config file (key = value)");
    cmd->add_option("--out", args.out_dir, "output directory");
    args.seed_opt = cmd->add_option("--seed", args.seed, "RNG seed");
    args.samples_opt = cmd->add_option("--samples", args.samples, "Monte Carlo samples");
    args.grid_opt = cmd->add_option("--grid", args.grid_cells, "torus cells N");
    cmd->add_option("--threads", args.threads, "worker threads");
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

RunManifest base_manifest(const CommonArgs& args) {
    RunManifest m;
    m.problem = args.problem;
    if (!args.config_path.empty()) m.config_text = slurp(args.config_path);
    m.samples = args.samples;
    m.seed = args.seed;
    m.grid_cells = args.grid_cells;
    m.threads = args.threads;
    // config run keys apply where no flag was given; flags win
    if (!m.config_text.empty()) {
        const Config cfg = Config::parse_string(m.config_text, args.config_path);
        const RunOptions base = run_options_from_config(cfg);
        if (args.seed_opt && !args.seed_opt->count()) m.seed = base.seed;
        if (args.samples_opt && !args.samples_opt->count()) m.samples = base.samples;
        if (args.grid_opt && !args.grid_opt->count()) m.grid_cells = base.grid_cells;
    }
    return m;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"splitkin: time-splitting lab for degenerate parabolic-hyperbolic SPDEs"};
    app.require_subcommand(1);

    CommonArgs args;
    double epsilon = 0.1;
    std::vector<double> ladder;
    std::vector<double> output_times;
    std::vector<double> etas;
    double theta = 1.5;
    std::string manifest_path;

    auto* validate = app.add_subcommand("validate", "check (H1)-(H3) on a problem");
    add_common(validate, args);

    auto* run = app.add_subcommand("run", "one splitting run at a fixed epsilon");
    add_common(run, args);
    auto* epsilon_opt = run->add_option("--epsilon", epsilon, "splitting epsilon");
    run->add_option("--output-times", output_times, "snapshot times")->delimiter(',');
    run->add_option("--from-manifest", manifest_path, "rerun a stored manifest");

    auto* cauchy = app.add_subcommand("cauchy", "coupled epsilon-ladder Cauchy study");
    add_common(cauchy, args);
    cauchy->add_option("--ladder", ladder, "strictly decreasing epsilons")->delimiter(',');
    cauchy->add_option("--output-times", output_times, "snapshot times")->delimiter(',');

    auto* contraction = app.add_subcommand("contraction", "paired initial data contraction study");
    add_common(contraction, args);
    contraction->add_option("--ladder", ladder, "strictly decreasing epsilons")->delimiter(',');
    contraction->add_option("--output-times", output_times, "snapshot times")->delimiter(',');

    auto* doubling = app.add_subcommand("doubling", "doubling-functional ladder table");
    add_common(doubling, args);
    doubling->add_option("--ladder", ladder, "epsilon ladder (pairs are consecutive)")->delimiter(',');
    doubling->add_option("--etas", etas, "space mollifier widths")->delimiter(',');
    doubling->add_option("--theta", theta, "delta = eta^theta");
    doubling->add_option("--output-times", output_times, "snapshot times")->delimiter(',');

    auto* report = app.add_subcommand("report", "run the acceptance suite");
    add_common(report, args);

    CLI11_PARSE(app, argc, argv);

    try {
        if (validate->parsed()) {
            ProblemSpec p = args.config_path.empty()
                                ? builtin_problem(args.problem)
                                : problem_from_config(Config::parse_file(args.config_path));
            const ValidationReport rep = validate_hypotheses(p, 64);
            std::cout << rep.summary();
            fs::create_directories(args.out_dir);
            std::ofstream out(fs::path(args.out_dir) / "validation.txt");
            out << rep.summary();
            return rep.all_pass() ? 0 : 2;
        }
        if (run->parsed()) {
            RunManifest m;
            if (!manifest_path.empty()) {
                m = RunManifest::from_json(slurp(manifest_path));
                m.threads = args.threads;
            } else {
                m = base_manifest(args);
                m.subcommand = "run";
                // with a config file and no flag, [split] epsilon applies
                m.epsilon = (epsilon_opt->count() || m.config_text.empty()) ? epsilon : 0.0;
                m.output_times = output_times;
            }
            execute_manifest(m, args.out_dir);
            std::cout << "run written to " << args.out_dir << "\n";
            return 0;
        }
        auto ladder_manifest = [&](const char* sub) {
            RunManifest m = base_manifest(args);
            m.subcommand = sub;
            m.epsilon_ladder = ladder.empty() ? std::vector<double>{0.2, 0.1, 0.05} : ladder;
            m.output_times = output_times;
            m.theta = theta;
            m.etas = etas;
            return m;
        };
        if (cauchy->parsed()) {
            execute_manifest(ladder_manifest("cauchy"), args.out_dir);
            std::cout << "cauchy table written to " << args.out_dir << "\n";
            return 0;
        }
        if (contraction->parsed()) {
            execute_manifest(ladder_manifest("contraction"), args.out_dir);
            std::cout << "contraction tables written to " << args.out_dir << "\n";
            return 0;
        }
        if (doubling->parsed()) {
            execute_manifest(ladder_manifest("doubling"), args.out_dir);
            std::cout << "doubling table written to " << args.out_dir << "\n";
            return 0;
        }
        if (report->parsed()) {
            AcceptanceOptions opts;
            opts.threads = args.threads;
            const auto results = run_acceptance(opts);
            fs::create_directories(fs::path(args.out_dir) / "tables");
            std::string csv = "id,name,pass,detail\n";
            bool all = true;
            for (const auto& r : results) {
                csv += std::to_string(r.id) + ",\"" + r.name + "\"," + (r.pass ? "1" : "0") +
                       ",\"" + r.detail + "\"\n";
                all = all && r.pass;
            }
            std::ofstream out(fs::path(args.out_dir) / "tables" / "acceptance.csv");
            out << csv;
            return all ? 0 : 2;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
