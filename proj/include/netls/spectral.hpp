#pragma once

// Closed-loop matrix of the stacked iteration [x; v](t+1) = M [x; v](t) and
// the spectral tests built on it.
//
//   M = [[P (x) I_m,                -alpha I          ],
//        [-H~ ((I - P) (x) I_m),    Q (x) I_m - alpha H~]]
//
// with P = Q = W for undirected graphs.

#include <complex>
#include <optional>
#include <utility>
#include <vector>

#include <json.hpp>

#include "netls/graph.hpp"
#include "netls/mixing.hpp"
#include "netls/problem.hpp"
#include "netls/types.hpp"

namespace netls {

inline constexpr double kEigTol = 1e-8;      ///< |lambda - 1| band counted as "at one"
inline constexpr double kRankCutoff = 1e-8;  ///< relative singular-value cutoff for rank(M - I)
inline constexpr double kMargin = 1e-9;      ///< marginal band around spectral radius 1

enum class Flavor { undirected, directed };

struct ClosedLoopMatrix {
    Matrix m_matrix;
    double alpha = 0.0;
    Flavor flavor = Flavor::undirected;
};

[[nodiscard]] ClosedLoopMatrix assemble_m_undirected(const MixingUndirected& w, const LinearProblem& problem,
                                                     double alpha);
[[nodiscard]] ClosedLoopMatrix assemble_m_directed(const MixingDirected& pq, const LinearProblem& problem,
                                                   double alpha);

struct SemisimpleCheck {
    int count_at_one = 0;
    int rank_m_minus_i = 0;
    bool semisimple = false;
};

[[nodiscard]] SemisimpleCheck semisimple_one_check(const ClosedLoopMatrix& m, int dim);

enum class Stability { converges, marginal, diverges };
[[nodiscard]] const char* to_string(Stability s) noexcept;

struct SpectralReport {
    std::vector<std::complex<double>> eigenvalues;
    int count_at_one = 0;
    int rank_m_minus_i = 0;
    bool semisimple_at_one = false;
    double spectral_radius_rest = 0.0;
    Stability verdict = Stability::diverges;
    std::optional<double> alpha_bar;
};

[[nodiscard]] std::vector<std::complex<double>> eigenvalues(const Matrix& m);
[[nodiscard]] SpectralReport convergence_predicate(const ClosedLoopMatrix& m, int dim);
[[nodiscard]] nlohmann::json to_json(const SpectralReport& r);

/// alpha_bar = 1 / (2 lambda_max(B^{1/2} H~ B^{1/2})), B^{1/2} = (I + W)^{-1} (x) I_m.
[[nodiscard]] double critical_step_size(const MixingUndirected& w, const LinearProblem& problem);

/// 2 / ((max weighted degree + 1)^2 max_i ||h_i||^2). Undirected graphs only.
[[nodiscard]] double conservative_bound(const Graph& graph, const LinearProblem& problem);

struct MaxConsensus {
    Vector values;
    int rounds = 0;  ///< rounds in which some node still changed its value
};

/// value_i <- max over self and in-neighbors, until nothing changes (at most N - 1 rounds).
[[nodiscard]] MaxConsensus max_consensus(const Graph& graph, const Vector& local_values);

/// The bound assembled from per-node max-consensus results; every node ends
/// with the same value.
struct DecentralizedBound {
    Vector per_node;
    Vector max_degree;
    Vector max_h_norm2;
    int rounds = 0;
};
[[nodiscard]] DecentralizedBound conservative_bound_decentralized(const Graph& graph, const LinearProblem& problem);

/// First alpha in 1, 1/2, 1/4, ... (at most `max_halvings` halvings) whose
/// directed closed loop converges.
[[nodiscard]] std::optional<double> find_directed_step(const MixingDirected& pq, const LinearProblem& problem,
                                                       int max_halvings = 60);

/// Bisection on [lo, hi] where lo converges and hi does not. Stops when
/// hi - lo <= rel_tol * lo and returns the final bracket.
[[nodiscard]] std::pair<double, double> stability_threshold(const MixingDirected& pq, const LinearProblem& problem,
                                                            double lo, double hi, double rel_tol = 1e-3);

/// M^t s by repeated matrix-vector products.
[[nodiscard]] Vector propagate(const ClosedLoopMatrix& m, const Vector& s, long t);

}  // namespace netls
