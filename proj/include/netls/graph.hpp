#pragma once

// Interaction graphs over nodes 1..N. Self-loops are never stored; every
// neighbor set and degree count treats a node as its own neighbor.

#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "netls/types.hpp"

namespace netls {

struct Edge {
    int source = 0;  ///< 1-based
    int target = 0;  ///< 1-based
    double weight = 1.0;

    friend bool operator==(const Edge&, const Edge&) = default;
};

/// Degrees of one node. Counts include the node itself, the weighted degree does not.
struct Degree {
    int in = 0;
    int out = 0;
    double weighted = 0.0;
};

class Graph {
public:
    /// Validates ids, weights, duplicates and self-loops. Undirected edges are
    /// canonicalized to source < target so orientation in the input is immaterial.
    Graph(int n_nodes, bool directed, std::vector<Edge> edges = {});

    [[nodiscard]] int size() const noexcept { return n_; }
    [[nodiscard]] bool directed() const noexcept { return directed_; }
    [[nodiscard]] const std::vector<Edge>& edges() const noexcept { return edges_; }

    /// True if `from` sends to `to`. Symmetric for undirected graphs. No self-loops.
    [[nodiscard]] bool has_edge(int from, int to) const;
    [[nodiscard]] double weight(int from, int to) const;

    /// {j : (j, i) in E} plus i itself, ascending.
    [[nodiscard]] std::vector<int> in_neighbors(int i) const;
    /// {j : (i, j) in E} plus i itself, ascending.
    [[nodiscard]] std::vector<int> out_neighbors(int i) const;

    /// Directed graph with both orientations of every undirected edge.
    [[nodiscard]] Graph bidirected() const;

    friend bool operator==(const Graph& a, const Graph& b) {
        return a.n_ == b.n_ && a.directed_ == b.directed_ && a.edges_ == b.edges_;
    }

private:
    void check_id(int i) const;

    int n_;
    bool directed_;
    std::vector<Edge> edges_;
    Matrix weights_;  // weights_(to, from), 0 when absent; symmetric if undirected
};

[[nodiscard]] bool is_connected(const Graph& g);
[[nodiscard]] bool is_strongly_connected(const Graph& g);
[[nodiscard]] std::vector<Degree> degrees(const Graph& g);

/// Weighted Laplacian L = D - A of an undirected graph.
[[nodiscard]] Matrix laplacian(const Graph& g);

/// reach[i][j] == true iff node j+1 is reachable from node i+1 (every node reaches itself).
using Reachability = std::vector<std::vector<bool>>;
[[nodiscard]] Reachability reachability_bfs(const Graph& g);
/// Same relation from boolean powers of (I + A); used to cross-check the BFS.
[[nodiscard]] Reachability reachability_matrix_powers(const Graph& g);

/// Longest shortest hop path over reachable pairs.
[[nodiscard]] int diameter(const Graph& g);

/// Seeded Erdos-Renyi sample, redrawn until (strongly) connected.
[[nodiscard]] Graph random_connected_graph(int n, double p, bool directed, std::mt19937_64& rng);

// {"n": N, "directed": bool, "edges": [[i, j, w], ...]}, w optional (1).
[[nodiscard]] Graph graph_from_json(const nlohmann::json& j);
[[nodiscard]] nlohmann::json to_json(const Graph& g);
[[nodiscard]] Graph load_graph(const std::string& path);

}  // namespace netls
