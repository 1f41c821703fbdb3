#pragma once

// Shared fixtures and seeded instance generators for the test binaries.

#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "netls/graph.hpp"
#include "netls/mixing.hpp"
#include "netls/problem.hpp"
#include "netls/scenario.hpp"
#include "netls/solver.hpp"
#include "netls/spectral.hpp"

#ifndef NETLS_SCENARIO_DIR
#define NETLS_SCENARIO_DIR "scenarios"
#endif

namespace netls::test {

inline std::string scenario_path(const std::string& name) {
    return std::string(NETLS_SCENARIO_DIR) + "/" + name + ".json";
}

inline Scenario example(int which) { return load_scenario(scenario_path("example" + std::to_string(which))); }

inline std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

/// A random problem on a random (strongly) connected graph with its default mixing.
struct Instance {
    LinearProblem problem;
    Graph graph;
    MixingDirected mixing;
    Vector x0;

    [[nodiscard]] bool directed() const { return graph.directed(); }
    [[nodiscard]] int nodes() const { return problem.nodes(); }
    [[nodiscard]] int dim() const { return problem.dim(); }
    [[nodiscard]] ClosedLoopMatrix closed_loop(double alpha) const {
        return directed() ? assemble_m_directed(mixing, problem, alpha)
                          : assemble_m_undirected({mixing.p}, problem, alpha);
    }
};

/// N in [2, max_n], m in [1, min(max_m, N)], edge probability 0.5.
inline Instance random_instance(std::uint64_t seed, bool directed, int max_n = 6, int max_m = 3) {
    std::mt19937_64 rng(seed);
    const int n = std::uniform_int_distribution<int>(2, max_n)(rng);
    const int m = std::uniform_int_distribution<int>(1, std::min(max_m, n))(rng);
    Graph g = random_connected_graph(n, 0.5, directed, rng);
    LinearProblem p = random_problem(n, m, rng);
    MixingDirected mix = directed ? build_pq(g) : as_directed(build_w_laplacian(g));
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    Vector x0(n * m);
    for (int i = 0; i < n * m; ++i) x0(i) = u(rng);
    return {std::move(p), std::move(g), std::move(mix), std::move(x0)};
}

/// Instance with at most `max_state` = 2Nm state entries.
inline Instance small_instance(std::uint64_t seed, bool directed, int max_state) {
    for (std::uint64_t s = seed;; s += 1000003) {
        Instance in = random_instance(s, directed);
        if (2 * in.nodes() * in.dim() <= max_state) return in;
    }
}

/// A step size with a convergent closed loop: half the critical value when
/// undirected, the halving search otherwise.
inline double stable_alpha(const Instance& in) {
    if (!in.directed()) return 0.5 * critical_step_size({in.mixing.p}, in.problem);
    return find_directed_step(in.mixing, in.problem).value();
}

}  // namespace netls::test
