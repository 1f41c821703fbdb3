#include "netls/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <set>
#include <utility>

#include "netls/error.hpp"

namespace netls {

Graph::Graph(int n_nodes, bool directed, std::vector<Edge> edges)
    : n_(n_nodes), directed_(directed), edges_(std::move(edges)) {
    if (n_ < 1) {
        throw InputError(Module::graph, "graph needs at least one node");
    }
    weights_ = Matrix::Zero(n_, n_);
    std::set<std::pair<int, int>> seen;
    for (auto& e : edges_) {
        check_id(e.source);
        check_id(e.target);
        if (e.source == e.target) {
            throw InputError(Module::graph, "explicit self-loop at node " + std::to_string(e.source));
        }
        if (!(e.weight > 0.0) || !std::isfinite(e.weight)) {
            throw InputError(Module::graph, "edge weight must be positive and finite");
        }
        if (!directed_ && e.source > e.target) {
            std::swap(e.source, e.target);
        }
        if (!seen.emplace(e.source, e.target).second) {
            throw InputError(Module::graph, "duplicate edge (" + std::to_string(e.source) + ", " +
                                                std::to_string(e.target) + ")");
        }
        weights_(e.target - 1, e.source - 1) = e.weight;
        if (!directed_) {
            weights_(e.source - 1, e.target - 1) = e.weight;
        }
    }
}

void Graph::check_id(int i) const {
    if (i < 1 || i > n_) {
        throw InputError(Module::graph, "node id " + std::to_string(i) + " outside [1, " +
                                            std::to_string(n_) + "]");
    }
}

bool Graph::has_edge(int from, int to) const {
    check_id(from);
    check_id(to);
    return from != to && weights_(to - 1, from - 1) > 0.0;
}

double Graph::weight(int from, int to) const {
    check_id(from);
    check_id(to);
    return weights_(to - 1, from - 1);
}

std::vector<int> Graph::in_neighbors(int i) const {
    check_id(i);
    std::vector<int> out;
    for (int j = 1; j <= n_; ++j) {
        if (j == i || weights_(i - 1, j - 1) > 0.0) {
            out.push_back(j);
        }
    }
    return out;
}

std::vector<int> Graph::out_neighbors(int i) const {
    check_id(i);
    std::vector<int> out;
    for (int j = 1; j <= n_; ++j) {
        if (j == i || weights_(j - 1, i - 1) > 0.0) {
            out.push_back(j);
        }
    }
    return out;
}

Graph Graph::bidirected() const {
    if (directed_) {
        return *this;
    }
    std::vector<Edge> both;
    both.reserve(2 * edges_.size());
    for (const auto& e : edges_) {
        both.push_back(e);
        both.push_back({e.target, e.source, e.weight});
    }
    return Graph(n_, true, std::move(both));
}

namespace {

std::vector<int> bfs_from(const Graph& g, int start) {
    std::vector<int> dist(g.size(), -1);
    std::deque<int> queue{start};
    dist[start - 1] = 0;
    while (!queue.empty()) {
        const int u = queue.front();
        queue.pop_front();
        for (int v : g.out_neighbors(u)) {
            if (dist[v - 1] < 0) {
                dist[v - 1] = dist[u - 1] + 1;
                queue.push_back(v);
            }
        }
    }
    return dist;
}

}  // namespace

bool is_connected(const Graph& g) {
    if (g.directed()) {
        throw InputError(Module::graph, "is_connected expects an undirected graph");
    }
    const auto dist = bfs_from(g, 1);
    return std::ranges::none_of(dist, [](int d) { return d < 0; });
}

bool is_strongly_connected(const Graph& g) {
    if (!g.directed()) {
        throw InputError(Module::graph, "is_strongly_connected expects a directed graph");
    }
    const auto reach = reachability_bfs(g);
    return std::ranges::all_of(reach, [](const auto& row) {
        return std::ranges::all_of(row, [](bool b) { return b; });
    });
}

std::vector<Degree> degrees(const Graph& g) {
    std::vector<Degree> out(g.size());
    for (int i = 1; i <= g.size(); ++i) {
        auto& d = out[i - 1];
        d.in = static_cast<int>(g.in_neighbors(i).size());
        d.out = static_cast<int>(g.out_neighbors(i).size());
    }
    for (const auto& e : g.edges()) {
        out[e.source - 1].weighted += e.weight;
        if (!g.directed()) {
            out[e.target - 1].weighted += e.weight;
        }
    }
    return out;
}

Matrix laplacian(const Graph& g) {
    if (g.directed()) {
        throw InputError(Module::graph, "laplacian expects an undirected graph");
    }
    Matrix l = Matrix::Zero(g.size(), g.size());
    for (const auto& e : g.edges()) {
        const int a = e.source - 1;
        const int b = e.target - 1;
        l(a, b) -= e.weight;
        l(b, a) -= e.weight;
        l(a, a) += e.weight;
        l(b, b) += e.weight;
    }
    return l;
}

Reachability reachability_bfs(const Graph& g) {
    Reachability reach(g.size(), std::vector<bool>(g.size(), false));
    for (int i = 1; i <= g.size(); ++i) {
        const auto dist = bfs_from(g, i);
        for (int j = 0; j < g.size(); ++j) {
            reach[i - 1][j] = dist[j] >= 0;
        }
    }
    return reach;
}

Reachability reachability_matrix_powers(const Graph& g) {
    const int n = g.size();
    // step(i, j): one hop (or stay) from i to j
    std::vector<std::vector<bool>> step(n, std::vector<bool>(n, false));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            step[i][j] = (i == j) || g.has_edge(i + 1, j + 1);
        }
    }
    auto power = step;
    for (int k = 1; k < n; ++k) {
        auto next = power;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                if (next[i][j]) continue;
                for (int l = 0; l < n; ++l) {
                    if (power[i][l] && step[l][j]) {
                        next[i][j] = true;
                        break;
                    }
                }
            }
        }
        power = std::move(next);
    }
    return power;
}

int diameter(const Graph& g) {
    int d = 0;
    for (int i = 1; i <= g.size(); ++i) {
        for (int x : bfs_from(g, i)) {
            d = std::max(d, x);
        }
    }
    return d;
}

Graph random_connected_graph(int n, double p, bool directed, std::mt19937_64& rng) {
    std::bernoulli_distribution coin(p);
    for (;;) {
        std::vector<Edge> edges;
        for (int i = 1; i <= n; ++i) {
            for (int j = directed ? 1 : i + 1; j <= n; ++j) {
                if (i != j && coin(rng)) {
                    edges.push_back({i, j, 1.0});
                }
            }
        }
        Graph g(n, directed, std::move(edges));
        if (directed ? is_strongly_connected(g) : is_connected(g)) {
            return g;
        }
    }
}

Graph graph_from_json(const nlohmann::json& j) {
    try {
        const int n = j.at("n").get<int>();
        const bool directed = j.value("directed", false);
        std::vector<Edge> edges;
        for (const auto& e : j.value("edges", nlohmann::json::array())) {
            if (!e.is_array() || e.size() < 2 || e.size() > 3) {
                throw InputError(Module::graph, "edge must be [i, j] or [i, j, w]");
            }
            edges.push_back({e[0].get<int>(), e[1].get<int>(), e.size() == 3 ? e[2].get<double>() : 1.0});
        }
        return Graph(n, directed, std::move(edges));
    } catch (const nlohmann::json::exception& ex) {
        throw InputError(Module::graph, std::string("bad graph JSON: ") + ex.what());
    }
}

nlohmann::json to_json(const Graph& g) {
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& e : g.edges()) {
        if (e.weight == 1.0) {
            edges.push_back({e.source, e.target});
        } else {
            edges.push_back({e.source, e.target, e.weight});
        }
    }
    return {{"n", g.size()}, {"directed", g.directed()}, {"edges", edges}};
}

Graph load_graph(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw InputError(Module::graph, "cannot open " + path);
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& ex) {
        throw InputError(Module::graph, path + ": " + ex.what());
    }
    return graph_from_json(j);
}

}  // namespace netls
