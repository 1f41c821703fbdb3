#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "netls/graph.hpp"
#include "netls/types.hpp"

namespace netls {

inline constexpr double kStochasticTol = 1e-12;
inline constexpr double kSpectrumTol = 1e-9;

/// Symmetric doubly stochastic weights conforming to an undirected graph.
struct MixingUndirected {
    Matrix w;
};

/// Row-stochastic P (mixes estimates) and column-stochastic Q (mixes trackers).
struct MixingDirected {
    Matrix p;
    Matrix q;
};

/// The undirected algorithm is the directed one with P = Q = W.
[[nodiscard]] inline MixingDirected as_directed(const MixingUndirected& m) { return {m.w, m.w}; }

struct ValidationCheck {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct ValidationReport {
    std::vector<ValidationCheck> checks;

    [[nodiscard]] bool ok() const;
    [[nodiscard]] const ValidationCheck* find(const std::string& name) const;
    [[nodiscard]] bool passed(const std::string& name) const;
    [[nodiscard]] std::string failures() const;
    [[nodiscard]] nlohmann::json to_json() const;
};

/// W = I - L / tau. Default tau is max weighted degree + 1.
/// Throws AssumptionError for a disconnected graph or tau <= lambda_max(L) / 2.
[[nodiscard]] MixingUndirected build_w_laplacian(const Graph& g, std::optional<double> tau = std::nullopt);

[[nodiscard]] double default_tau(const Graph& g);

/// Checks: symmetric, row_stochastic, column_stochastic, positive_diagonal, sparsity, spectrum.
[[nodiscard]] ValidationReport validate_w(const Matrix& w, const Graph& g);

/// p_ij = 1 / |N_i^in| on in-neighbors, q_ij = 1 / |N_j^out| on out-neighbors (self-inclusive).
[[nodiscard]] MixingDirected build_pq(const Graph& g);

/// Checks: p_row_stochastic, q_column_stochastic, p_sparsity, q_sparsity.
[[nodiscard]] ValidationReport validate_pq(const Matrix& p, const Matrix& q, const Graph& g);

// Dense row-major CSV, one matrix row per line.
[[nodiscard]] Matrix read_matrix_csv(const std::string& path);
void write_matrix_csv(const std::string& path, const Matrix& m);

[[nodiscard]] Matrix matrix_from_json(const nlohmann::json& j);
[[nodiscard]] nlohmann::json matrix_to_json(const Matrix& m);

}  // namespace netls
