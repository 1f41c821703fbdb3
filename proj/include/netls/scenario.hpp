#pragma once

// Scenario files and the end-to-end pipeline:
// validate -> spectral / alpha_bar / bound -> solver run -> finite-time -> export.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "netls/finite_time.hpp"
#include "netls/graph.hpp"
#include "netls/mixing.hpp"
#include "netls/problem.hpp"
#include "netls/solver.hpp"
#include "netls/spectral.hpp"

namespace netls {

/// Exit codes shared by the CLI and the acceptance runner.
inline constexpr int kExitPass = 0;
inline constexpr int kExitFail = 1;
inline constexpr int kExitInput = 2;

struct MixingRule {
    enum class Kind { explicit_w, explicit_pq, laplacian, pq_degree };
    Kind kind = Kind::laplacian;
    std::optional<double> tau;  ///< laplacian only; default max weighted degree + 1
    Matrix w;                   ///< explicit_w
    Matrix p;                   ///< explicit_pq
    Matrix q;                   ///< explicit_pq

    friend bool operator==(const MixingRule&, const MixingRule&) = default;
};

struct Analyses {
    bool spectral = true;
    bool critical_alpha = false;
    bool conservative_bound = false;
    bool finite_time = false;
    bool max_consensus = false;

    friend bool operator==(const Analyses&, const Analyses&) = default;
};

struct Scenario {
    std::string name;
    LinearProblem problem;
    Graph graph;
    MixingRule rule;
    MixingDirected mixing;  ///< rule expanded; P = Q = W when undirected
    SolverConfig solver;
    Vector x0;
    std::optional<std::uint64_t> x0_seed;  ///< set when x0 was generated
    Analyses analyses;

    [[nodiscard]] bool undirected() const { return !graph.directed(); }
    [[nodiscard]] MixingUndirected w() const { return {mixing.p}; }
};

bool operator==(const Scenario& a, const Scenario& b);

/// x0 entries uniform in [-5, 5] from a seeded generator.
[[nodiscard]] Vector seeded_x0(int length, std::uint64_t seed);

/// Parses, checks dimensions and validates the mixing assumptions. Throws
/// InputError on malformed data and AssumptionError on a violated assumption.
[[nodiscard]] Scenario scenario_from_json(const nlohmann::json& j);
[[nodiscard]] Scenario load_scenario(const std::string& path);
[[nodiscard]] nlohmann::json to_json(const Scenario& s);
void save_scenario(const std::string& path, const Scenario& s);

struct RunSummary {
    Verdict verdict = Verdict::max_iters;
    long iterations = 0;
    Vector final_x;          ///< stacked
    double final_error = 0;  ///< max_i ||x_i - y*||_inf
    /// Per node, first t with ||x_i(t) - y*||_inf <= kEarlyTol (-1 if never).
    std::vector<long> first_within;
};

inline constexpr double kEarlyTol = 1e-3;

struct RunReport {
    std::string scenario;
    Vector oracle;
    ValidationReport validation;
    std::optional<SpectralReport> spectral;
    std::optional<double> alpha_bar;
    std::optional<double> bound;
    std::optional<DecentralizedBound> consensus;
    RunSummary run;
    std::vector<FiniteTimeReport> finite_time;
    std::string finite_time_skipped;  ///< reason when requested but not run
    std::string trace_path;
    std::string error_curve_path;
};

[[nodiscard]] nlohmann::json to_json(const RunReport& r);

/// Writes trace.csv, errors.csv and report.json into `out_dir` when it is non-empty.
[[nodiscard]] RunReport run_scenario(const Scenario& s, const std::string& out_dir = {});

struct Checkpoint {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct ExampleResult {
    int which = 0;
    std::vector<RunReport> reports;
    std::vector<Checkpoint> checkpoints;

    [[nodiscard]] bool passed() const;
};

[[nodiscard]] nlohmann::json to_json(const ExampleResult& r);

/// Runs bundled scenario `which` (1, 2 or 3) from `scenario_dir` and checks
/// the reference values.
[[nodiscard]] ExampleResult reproduce_example(int which, const std::string& scenario_dir,
                                              const std::string& out_dir = {});

}  // namespace netls
