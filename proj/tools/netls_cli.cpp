// netls: command-line front end for scenario runs and analyses.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "netls/error.hpp"
#include "netls/finite_time.hpp"
#include "netls/kernels.hpp"
#include "netls/scenario.hpp"
#include "netls/spectral.hpp"

#ifndef NETLS_SCENARIO_DIR
#define NETLS_SCENARIO_DIR "scenarios"
#endif

namespace fs = std::filesystem;
using namespace netls;

namespace {

struct Common {
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<double> alpha;
};

void add_common(CLI::App* cmd, Common& c, bool with_alpha = true) {
    cmd->add_option("--out", c.out, "Directory for artifacts");
    cmd->add_option("--seed", c.seed, "Replace x0 by a seeded random initial state");
    if (with_alpha) cmd->add_option("--alpha", c.alpha, "Override the step size");
}

Scenario load(const std::string& path, const Common& c) {
    Scenario s = load_scenario(path);
    if (c.seed) {
        s.x0_seed = *c.seed;
        s.x0 = seeded_x0(static_cast<int>(s.x0.size()), *c.seed);
    }
    if (c.alpha) s.solver.step_size = *c.alpha;
    return s;
}

void emit(const nlohmann::json& j, const Common& c, const std::string& file) {
    std::cout << j.dump(2) << '\n';
    if (!c.out.empty()) {
        fs::create_directories(c.out);
        std::ofstream(fs::path(c.out) / file) << j.dump(2) << '\n';
    }
}

int cmd_solve(const std::vector<std::string>& paths, const Common& c) {
    for (const auto& path : paths) {
        const Scenario s = load(path, c);
        std::string dir = c.out;
        if (!dir.empty() && paths.size() > 1) dir = (fs::path(dir) / fs::path(path).stem()).string();
        const RunReport r = run_scenario(s, dir);
        std::printf("%s: %s after %ld iterations, max error %.3e\n", path.c_str(), to_string(r.run.verdict),
                    r.run.iterations, r.run.final_error);
        if (!r.trace_path.empty()) std::printf("  trace  %s\n  report %s/report.json\n", r.trace_path.c_str(), dir.c_str());
    }
    return kExitPass;
}

int cmd_analyze(const std::string& path, const Common& c) {
    const Scenario s = load(path, c);
    const ClosedLoopMatrix m = s.undirected() ? assemble_m_undirected(s.w(), s.problem, s.solver.step_size)
                                              : assemble_m_directed(s.mixing, s.problem, s.solver.step_size);
    SpectralReport r = convergence_predicate(m, s.problem.dim());
    if (s.undirected()) r.alpha_bar = critical_step_size(s.w(), s.problem);
    emit(to_json(r), c, "spectral.json");
    return kExitPass;
}

int cmd_critical(const std::string& path, const Common& c) {
    const Scenario s = load(path, c);
    nlohmann::json j;
    if (s.undirected()) {
        j["alpha_bar"] = critical_step_size(s.w(), s.problem);
    } else {
        // no closed form: halve to a stable step, then bisect upwards
        const auto lo = find_directed_step(s.mixing, s.problem);
        j["alpha_bar"] = nullptr;
        if (!lo) {
            j["stable_step"] = nullptr;
        } else {
            j["stable_step"] = *lo;
            double hi = 2.0 * *lo;
            const auto stable = [&](double a) {
                return convergence_predicate(assemble_m_directed(s.mixing, s.problem, a), s.problem.dim()).verdict ==
                       Stability::converges;
            };
            while (stable(hi) && hi < 1e6) hi *= 2.0;
            if (!stable(hi)) {
                const auto [a, b] = stability_threshold(s.mixing, s.problem, hi / 2.0, hi);
                j["threshold_bracket"] = {a, b};
            }
        }
    }
    emit(j, c, "critical_alpha.json");
    return kExitPass;
}

int cmd_bound(const std::string& path, const Common& c) {
    const Scenario s = load(path, c);
    const double b = conservative_bound(s.graph, s.problem);
    const DecentralizedBound d = conservative_bound_decentralized(s.graph, s.problem);
    const double abar = critical_step_size(s.w(), s.problem);
    nlohmann::json j{{"bound", b},
                     {"alpha_bar", abar},
                     {"per_node_bound", std::vector<double>(d.per_node.data(), d.per_node.data() + d.per_node.size())},
                     {"max_consensus_rounds", d.rounds}};
    emit(j, c, "bound.json");
    return b <= abar ? kExitPass : kExitFail;
}

int cmd_finite_time(const std::string& path, const Common& c, std::optional<int> node, std::optional<double> tol) {
    const Scenario s = load(path, c);
    const Network<Extended> net(s.problem, s.mixing, &s.graph);
    const auto t = tol ? static_cast<Extended>(*tol) : default_hankel_tol<Extended>();
    const auto reports = run_finite_time_all<Extended>(net, s.solver, s.x0, t);
    const Vector oracle = direct_least_squares(s.problem);
    nlohmann::json j = nlohmann::json::array();
    for (const auto& r : reports) {
        if (node && r.node != *node) continue;
        auto e = to_json(r);
        e["error_inf"] = (r.y_star - oracle).cwiseAbs().maxCoeff();
        j.push_back(e);
    }
    emit(j, c, "finite_time.json");
    return kExitPass;
}

int cmd_reproduce(int which, const std::string& dir, const Common& c) {
    const ExampleResult r = reproduce_example(which, dir, c.out);
    for (const auto& cp : r.checkpoints) {
        std::printf("%s  %s  (%s)\n", cp.passed ? "PASS" : "FAIL", cp.name.c_str(), cp.detail.c_str());
    }
    if (!c.out.empty()) {
        fs::create_directories(c.out);
        std::ofstream(fs::path(c.out) / ("example" + std::to_string(which) + ".json")) << to_json(r).dump(2) << '\n';
    }
    std::printf("example %d: %s\n", which, r.passed() ? "PASS" : "FAIL");
    return r.passed() ? kExitPass : kExitFail;
}

int cmd_validate(const std::string& path) {
    const Scenario s = load_scenario(path);
    const ValidationReport r =
        s.undirected() ? validate_w(s.mixing.p, s.graph) : validate_pq(s.mixing.p, s.mixing.q, s.graph);
    std::cout << r.to_json().dump(2) << '\n';
    return r.ok() ? kExitPass : kExitFail;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Distributed least squares over networks: simulation and analysis"};
    app.require_subcommand(1);
    std::string kernels;
    app.add_option("--kernels", kernels, "Force the vector kernel backend (scalar, avx2, neon)");

    Common c;
    std::vector<std::string> paths;
    std::string path;
    std::optional<int> node;
    std::optional<double> tol;
    int which = 0;
    std::string scenario_dir = NETLS_SCENARIO_DIR;

    auto* solve = app.add_subcommand("solve", "Run scenarios and write trace.csv, errors.csv, report.json");
    solve->add_option("scenario", paths, "Scenario JSON files")->required()->check(CLI::ExistingFile);
    add_common(solve, c);

    auto* analyze = app.add_subcommand("analyze", "Spectral report of the closed-loop matrix");
    analyze->add_option("scenario", path)->required()->check(CLI::ExistingFile);
    add_common(analyze, c);

    auto* critical = app.add_subcommand("critical-alpha", "Critical step size (threshold bracket if directed)");
    critical->add_option("scenario", path)->required()->check(CLI::ExistingFile);
    add_common(critical, c, false);

    auto* bound = app.add_subcommand("bound", "Conservative step-size bound and its max-consensus form");
    bound->add_option("scenario", path)->required()->check(CLI::ExistingFile);
    add_common(bound, c, false);

    auto* ft = app.add_subcommand("finite-time", "Recover y* at each node from its own iterates");
    ft->add_option("scenario", path)->required()->check(CLI::ExistingFile);
    ft->add_option("--node", node, "Only report this node (1-based)");
    ft->add_option("--tol", tol, "Hankel singularity threshold");
    add_common(ft, c);

    auto* repro = app.add_subcommand("reproduce-example", "Check a bundled example against its reference values");
    repro->add_option("which", which)->required()->check(CLI::Range(1, 3));
    repro->add_option("--scenarios", scenario_dir, "Directory holding example1.json .. example3.json");
    repro->add_option("--out", c.out, "Directory for artifacts");

    auto* validate = app.add_subcommand("validate", "Load a scenario and check the mixing assumptions");
    validate->add_option("scenario", path)->required()->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitPass : kExitInput;
    }

    try {
        if (!kernels.empty()) {
            bool found = false;
            for (auto b : {kernels::Backend::scalar, kernels::Backend::avx2, kernels::Backend::neon}) {
                if (kernels == kernels::to_string(b)) {
                    kernels::set_backend(b);
                    found = true;
                }
            }
            if (!found) throw std::invalid_argument("unknown kernel backend " + kernels);
        }
        if (*solve) return cmd_solve(paths, c);
        if (*analyze) return cmd_analyze(path, c);
        if (*critical) return cmd_critical(path, c);
        if (*bound) return cmd_bound(path, c);
        if (*ft) return cmd_finite_time(path, c, node, tol);
        if (*repro) return cmd_reproduce(which, scenario_dir, c);
        if (*validate) return cmd_validate(path);
    } catch (const AssumptionError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitFail;
    } catch (const InputError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitInput;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitFail;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitInput;
    }
    return kExitInput;
}
