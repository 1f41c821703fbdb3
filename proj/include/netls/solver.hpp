#pragma once

// Gradient-tracking iteration simulated as N node processes exchanging
// messages in synchronous rounds. The undirected algorithm is the directed
// one with P = Q = W:
//
//   x_i(t+1) = sum_{j in N_i^in} p_ij x_j(t) - alpha v_i(t)
//   v_i(t+1) = sum_{j in N_i^in} q_ij v_j(t) + grad f_i(x_i(t+1)) - grad f_i(x_i(t))
//
// with v_i(0) = grad f_i(x_i(0)). Nodes only see payloads delivered to their
// inbox; the round buffer can record every delivery for auditing.

#include <cstdio>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "netls/graph.hpp"
#include "netls/mixing.hpp"
#include "netls/problem.hpp"
#include "netls/types.hpp"

namespace netls {

template <class Real>
struct NodeState {
    VectorT<Real> x;  ///< estimate of y*
    VectorT<Real> v;  ///< tracker of the average gradient
};

template <class Real>
struct NetworkState {
    std::vector<NodeState<Real>> states;
    long iteration = 0;

    [[nodiscard]] VectorT<Real> stacked_x() const;
    [[nodiscard]] VectorT<Real> stacked_v() const;
    /// [x; v], the state of the closed-loop linear system.
    [[nodiscard]] VectorT<Real> stacked() const;
    [[nodiscard]] Real max_abs() const;
};

enum class StopRule {
    oracle,     ///< max_i ||x_i - y*||_inf <= stop_tolerance
    increment,  ///< ||x(t) - x(t-1)||_inf <= stop_tolerance
};

struct SolverConfig {
    double step_size = 0.0;
    long max_iterations = 100000;
    double stop_tolerance = 1e-9;
    StopRule stop_rule = StopRule::oracle;
    double divergence_guard = 1e12;
    /// > 1 computes node updates on worker threads with a barrier per phase.
    int threads = 1;
};

enum class Verdict { converged, max_iters, diverged };
[[nodiscard]] const char* to_string(Verdict v) noexcept;

/// One delivery: `reader` received the payload posted by `source` in `round`.
struct Delivery {
    long round;
    int reader;  ///< 1-based
    int source;  ///< 1-based
};

/// Records deliveries made by the round buffer.
class MessageAudit {
public:
    void record(Delivery d) { log_.push_back(d); }
    [[nodiscard]] const std::vector<Delivery>& deliveries() const noexcept { return log_; }
    void clear() { log_.clear(); }

private:
    std::vector<Delivery> log_;
};

template <class Real>
struct Message {
    int source;  ///< 1-based
    const VectorT<Real>* x;
    const VectorT<Real>* v;
};

using Routes = std::vector<std::vector<int>>;

/// Mailbox of one round. Payloads are the senders' states at time t and are
/// delivered only along the routing table (self plus in-neighbors).
template <class Real>
class RoundBuffer {
public:
    RoundBuffer(const Routes& routes, long round, const NetworkState<Real>& posted)
        : routes_(&routes), posted_(&posted), round_(round) {}

    /// Inbox of `reader` (1-based), ordered by source id.
    [[nodiscard]] std::vector<Message<Real>> deliver(int reader, MessageAudit* audit) const;

private:
    const Routes* routes_;
    const NetworkState<Real>* posted_;
    long round_;
};

/// Receives the state after initialization and after every step.
template <class Real>
class TraceSink {
public:
    virtual ~TraceSink() = default;
    virtual void record(const NetworkState<Real>& state) = 0;
};

/// Keeps [x; v] for every recorded iteration.
template <class Real>
class MemoryTrace final : public TraceSink<Real> {
public:
    void record(const NetworkState<Real>& state) override { states_.push_back(state.stacked()); }
    [[nodiscard]] const std::vector<VectorT<Real>>& states() const noexcept { return states_; }

private:
    std::vector<VectorT<Real>> states_;
};

/// CSV rows: t,node,x_1..x_m,v_1..v_m,err_inf (err_inf empty without oracle).
/// Optionally a second CSV with t,err_inf (max over nodes).
template <class Real>
class CsvTrace final : public TraceSink<Real> {
public:
    CsvTrace(const std::string& path, int dim, std::optional<Vector> oracle = std::nullopt,
             const std::string& error_curve_path = {});
    ~CsvTrace() override;
    CsvTrace(const CsvTrace&) = delete;
    CsvTrace& operator=(const CsvTrace&) = delete;

    void record(const NetworkState<Real>& state) override;

private:
    std::FILE* out_ = nullptr;
    std::FILE* curve_ = nullptr;
    int dim_;
    std::optional<Vector> oracle_;
};

template <class Real>
struct RunResult {
    NetworkState<Real> final_state;
    long iterations = 0;
    Verdict verdict = Verdict::max_iters;
};

/// The node processes of one problem over one network.
template <class Real>
class Network {
public:
    /// Routing comes from `graph` when given (mixing must vanish off its
    /// in-neighbor sets), otherwise from the nonzero pattern of P and Q.
    Network(const LinearProblem& problem, const MixingDirected& mixing, const Graph* graph = nullptr);
    Network(const LinearProblem& problem, const MixingUndirected& mixing, const Graph* graph = nullptr)
        : Network(problem, as_directed(mixing), graph) {}

    [[nodiscard]] int nodes() const noexcept { return n_; }
    [[nodiscard]] int dim() const noexcept { return m_; }

    /// x blocks from x0 (length N*m), v_i = grad f_i(x_i), t = 0.
    [[nodiscard]] NetworkState<Real> init(const Vector& x0) const;

    /// One synchronous round. Throws NumericalError on a non-finite result.
    [[nodiscard]] NetworkState<Real> step(const NetworkState<Real>& state, const SolverConfig& config,
                                          MessageAudit* audit = nullptr) const;

    /// Iterates until the stop rule, the divergence guard or max_iterations.
    /// `oracle` is required for StopRule::oracle.
    [[nodiscard]] RunResult<Real> run(const SolverConfig& config, const Vector& x0,
                                      const std::optional<Vector>& oracle, TraceSink<Real>* sink = nullptr,
                                      MessageAudit* audit = nullptr) const;

    /// Sources node i (1-based) may read from: itself and its in-neighbors.
    [[nodiscard]] const std::vector<int>& route(int i) const { return routes_.at(i - 1); }

private:
    struct InWeight {
        int source;  // 1-based
        Real p;
        Real q;
    };
    struct Node {
        VectorT<Real> h;
        Real z;
        std::vector<InWeight> in;  // ascending source
    };

    void gradient(const Node& node, const VectorT<Real>& x, VectorT<Real>& out) const;
    void update_x(int i, const RoundBuffer<Real>& buf, const NetworkState<Real>& cur, Real alpha,
                  NetworkState<Real>& next, MessageAudit* audit) const;
    void update_v(int i, const RoundBuffer<Real>& buf, const NetworkState<Real>& cur, NetworkState<Real>& next,
                  MessageAudit* audit) const;

    int n_;
    int m_;
    Routes routes_;
    std::vector<Node> nodes_;
};

// Free-function forms.

template <class Real = double>
[[nodiscard]] NetworkState<Real> init_states(const LinearProblem& problem, const Vector& x0) {
    // mixing is irrelevant to initialization
    const int n = problem.nodes();
    return Network<Real>(problem, MixingDirected{Matrix::Identity(n, n), Matrix::Identity(n, n)}).init(x0);
}

template <class Real = double>
[[nodiscard]] NetworkState<Real> step(const NetworkState<Real>& state, const MixingDirected& mixing,
                                      const SolverConfig& config, const LinearProblem& problem) {
    return Network<Real>(problem, mixing).step(state, config);
}

template <class Real = double>
[[nodiscard]] RunResult<Real> run(const LinearProblem& problem, const Graph& graph, const MixingDirected& mixing,
                                  const SolverConfig& config, const Vector& x0, TraceSink<Real>* sink = nullptr) {
    const std::optional<Vector> oracle = direct_least_squares(problem);
    return Network<Real>(problem, mixing, &graph).run(config, x0, oracle, sink);
}

extern template struct NetworkState<double>;
extern template struct NetworkState<Extended>;
extern template class RoundBuffer<double>;
extern template class RoundBuffer<Extended>;
extern template class CsvTrace<double>;
extern template class CsvTrace<Extended>;
extern template class Network<double>;
extern template class Network<Extended>;

}  // namespace netls
