#include "netls/solver.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <thread>

#include "netls/error.hpp"
#include "netls/kernels.hpp"

namespace netls {

const char* to_string(Verdict v) noexcept {
    switch (v) {
        case Verdict::converged: return "converged";
        case Verdict::max_iters: return "max_iters";
        case Verdict::diverged: return "diverged";
    }
    return "?";
}

template <class Real>
VectorT<Real> NetworkState<Real>::stacked_x() const {
    const Eigen::Index m = states.empty() ? 0 : states.front().x.size();
    VectorT<Real> out(static_cast<Eigen::Index>(states.size()) * m);
    for (std::size_t i = 0; i < states.size(); ++i) out.segment(i * m, m) = states[i].x;
    return out;
}

template <class Real>
VectorT<Real> NetworkState<Real>::stacked_v() const {
    const Eigen::Index m = states.empty() ? 0 : states.front().v.size();
    VectorT<Real> out(static_cast<Eigen::Index>(states.size()) * m);
    for (std::size_t i = 0; i < states.size(); ++i) out.segment(i * m, m) = states[i].v;
    return out;
}

template <class Real>
VectorT<Real> NetworkState<Real>::stacked() const {
    const VectorT<Real> x = stacked_x();
    VectorT<Real> out(2 * x.size());
    out << x, stacked_v();
    return out;
}

template <class Real>
Real NetworkState<Real>::max_abs() const {
    Real r = 0;
    for (const auto& s : states) {
        r = std::max({r, s.x.cwiseAbs().maxCoeff(), s.v.cwiseAbs().maxCoeff()});
    }
    return r;
}

template <class Real>
std::vector<Message<Real>> RoundBuffer<Real>::deliver(int reader, MessageAudit* audit) const {
    std::vector<Message<Real>> inbox;
    const auto& from = routes_->at(reader - 1);
    inbox.reserve(from.size());
    for (int j : from) {
        const auto& s = posted_->states[j - 1];
        inbox.push_back({j, &s.x, &s.v});
        if (audit != nullptr) audit->record({round_, reader, j});
    }
    return inbox;
}

namespace {

template <class Real>
std::span<Real> sp(VectorT<Real>& v) {
    return {v.data(), static_cast<std::size_t>(v.size())};
}

template <class Real>
std::span<const Real> csp(const VectorT<Real>& v) {
    return {v.data(), static_cast<std::size_t>(v.size())};
}

template <class Real>
Routes routes_from(const MixingDirected& mixing, const Graph* graph, int n) {
    Routes routes(n);
    for (int i = 1; i <= n; ++i) {
        if (graph != nullptr) {
            routes[i - 1] = graph->in_neighbors(i);
            for (int j = 1; j <= n; ++j) {
                const bool allowed = std::ranges::find(routes[i - 1], j) != routes[i - 1].end();
                if (!allowed && (mixing.p(i - 1, j - 1) != 0.0 || mixing.q(i - 1, j - 1) != 0.0)) {
                    throw InputError(Module::solver, "mixing weight (" + std::to_string(i) + "," +
                                                         std::to_string(j) + ") has no matching edge");
                }
            }
        } else {
            for (int j = 1; j <= n; ++j) {
                if (j == i || mixing.p(i - 1, j - 1) != 0.0 || mixing.q(i - 1, j - 1) != 0.0) {
                    routes[i - 1].push_back(j);
                }
            }
        }
    }
    return routes;
}

// Runs body(i) for i in [0, n), sequentially or on `threads` workers.
template <class Body>
void for_nodes(int n, int threads, Body&& body) {
    if (threads <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
    const int workers = std::min(threads, n);
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (int i = w; i < n; i += workers) body(i);
        });
    }
}  // jthreads join here: the phase barrier

}  // namespace

template <class Real>
Network<Real>::Network(const LinearProblem& problem, const MixingDirected& mixing, const Graph* graph)
    : n_(problem.nodes()),
      m_(problem.dim()),
      routes_(routes_from<Real>(mixing, graph, problem.nodes())) {
    if (mixing.p.rows() != n_ || mixing.p.cols() != n_ || mixing.q.rows() != n_ || mixing.q.cols() != n_) {
        throw InputError(Module::solver, "mixing matrices must be N x N with N = " + std::to_string(n_));
    }
    if (graph != nullptr && graph->size() != n_) {
        throw InputError(Module::solver, "graph has " + std::to_string(graph->size()) + " nodes, problem has " +
                                             std::to_string(n_));
    }
    nodes_.resize(n_);
    for (int i = 0; i < n_; ++i) {
        auto& node = nodes_[i];
        node.h = problem.row(i).template cast<Real>();
        node.z = static_cast<Real>(problem.z()(i));
        for (int j : route(i + 1)) {
            node.in.push_back({j, static_cast<Real>(mixing.p(i, j - 1)), static_cast<Real>(mixing.q(i, j - 1))});
        }
    }
}

template <class Real>
void Network<Real>::gradient(const Node& node, const VectorT<Real>& x, VectorT<Real>& out) const {
    const Real s = kernels::dot(csp(node.h), csp(x));
    kernels::scale(sp(out), s, csp(node.h));
    kernels::axpy(sp(out), static_cast<Real>(-node.z), csp(node.h));
}

template <class Real>
NetworkState<Real> Network<Real>::init(const Vector& x0) const {
    if (x0.size() != static_cast<Eigen::Index>(n_) * m_) {
        throw InputError(Module::solver, "x0 must have length N*m = " + std::to_string(n_ * m_));
    }
    NetworkState<Real> s;
    s.states.resize(n_);
    for (int i = 0; i < n_; ++i) {
        s.states[i].x = x0.segment(i * m_, m_).template cast<Real>();
        s.states[i].v.resize(m_);
        gradient(nodes_[i], s.states[i].x, s.states[i].v);
    }
    return s;
}

template <class Real>
void Network<Real>::update_x(int i, const RoundBuffer<Real>& buf, const NetworkState<Real>& cur, Real alpha,
                             NetworkState<Real>& next, MessageAudit* audit) const {
    const auto inbox = buf.deliver(i + 1, audit);
    const auto& in = nodes_[i].in;
    VectorT<Real>& x = next.states[i].x;
    x.setZero(m_);
    for (std::size_t k = 0; k < inbox.size(); ++k) {
        kernels::axpy(sp(x), in[k].p, csp(*inbox[k].x));
    }
    kernels::axpy(sp(x), static_cast<Real>(-alpha), csp(cur.states[i].v));
}

template <class Real>
void Network<Real>::update_v(int i, const RoundBuffer<Real>& buf, const NetworkState<Real>& cur,
                             NetworkState<Real>& next, MessageAudit* audit) const {
    const auto inbox = buf.deliver(i + 1, audit);
    const auto& in = nodes_[i].in;
    VectorT<Real>& v = next.states[i].v;
    v.setZero(m_);
    for (std::size_t k = 0; k < inbox.size(); ++k) {
        kernels::axpy(sp(v), in[k].q, csp(*inbox[k].v));
    }
    VectorT<Real> g_new(m_);
    VectorT<Real> g_old(m_);
    gradient(nodes_[i], next.states[i].x, g_new);
    gradient(nodes_[i], cur.states[i].x, g_old);
    kernels::axpy(sp(v), static_cast<Real>(1), csp(g_new));
    kernels::axpy(sp(v), static_cast<Real>(-1), csp(g_old));
}

template <class Real>
NetworkState<Real> Network<Real>::step(const NetworkState<Real>& state, const SolverConfig& config,
                                       MessageAudit* audit) const {
    if (static_cast<int>(state.states.size()) != n_) {
        throw InputError(Module::solver, "state has the wrong number of nodes");
    }
    NetworkState<Real> next;
    next.states.resize(n_);
    next.iteration = state.iteration + 1;

    // one audit log per node so worker threads never share one
    std::vector<MessageAudit> local(audit != nullptr ? n_ : 0);
    auto log_of = [&](int i) { return audit != nullptr ? &local[i] : nullptr; };

    const RoundBuffer<Real> buf(routes_, state.iteration, state);

    const Real alpha = static_cast<Real>(config.step_size);
    for_nodes(n_, config.threads, [&](int i) { update_x(i, buf, state, alpha, next, log_of(i)); });
    for_nodes(n_, config.threads, [&](int i) { update_v(i, buf, state, next, log_of(i)); });

    if (audit != nullptr) {
        for (const auto& l : local) {
            for (const auto& d : l.deliveries()) audit->record(d);
        }
    }
    for (const auto& s : next.states) {
        if (!s.x.allFinite() || !s.v.allFinite()) {
            throw NumericalError(Module::solver, "non-finite state at iteration " + std::to_string(next.iteration));
        }
    }
    return next;
}

template <class Real>
RunResult<Real> Network<Real>::run(const SolverConfig& config, const Vector& x0, const std::optional<Vector>& oracle,
                                   TraceSink<Real>* sink, MessageAudit* audit) const {
    if (!(config.step_size > 0.0)) {
        throw InputError(Module::solver, "step size must be positive");
    }
    if (config.max_iterations < 0) {
        throw InputError(Module::solver, "max_iterations must be non-negative");
    }
    if (config.stop_rule == StopRule::oracle && !oracle) {
        throw InputError(Module::solver, "oracle stop rule needs the reference solution");
    }
    if (oracle && oracle->size() != m_) {
        throw InputError(Module::solver, "oracle must have length m");
    }
    std::optional<VectorT<Real>> target;
    if (oracle) target = oracle->template cast<Real>();

    auto oracle_error = [&](const NetworkState<Real>& s) {
        Real e = 0;
        for (const auto& node : s.states) e = std::max(e, (node.x - *target).cwiseAbs().maxCoeff());
        return e;
    };

    RunResult<Real> res;
    res.final_state = init(x0);
    if (sink != nullptr) sink->record(res.final_state);

    const Real tol = static_cast<Real>(config.stop_tolerance);
    const Real guard = static_cast<Real>(config.divergence_guard);
    if (config.stop_rule == StopRule::oracle && oracle_error(res.final_state) <= tol) {
        res.verdict = Verdict::converged;
        return res;
    }
    while (res.iterations < config.max_iterations) {
        NetworkState<Real> next;
        try {
            next = step(res.final_state, config, audit);
        } catch (const NumericalError&) {
            res.verdict = Verdict::diverged;
            return res;
        }
        ++res.iterations;
        if (sink != nullptr) sink->record(next);
        if (next.max_abs() > guard) {
            res.final_state = std::move(next);
            res.verdict = Verdict::diverged;
            return res;
        }
        bool done = false;
        if (config.stop_rule == StopRule::oracle) {
            done = oracle_error(next) <= tol;
        } else {
            done = (next.stacked_x() - res.final_state.stacked_x()).cwiseAbs().maxCoeff() <= tol;
        }
        res.final_state = std::move(next);
        if (done) {
            res.verdict = Verdict::converged;
            return res;
        }
    }
    res.verdict = Verdict::max_iters;
    return res;
}

namespace {

void put(std::FILE* f, double v) { std::fprintf(f, "%.17g", v); }
void put(std::FILE* f, long double v) { std::fprintf(f, "%.21Lg", v); }

}  // namespace

template <class Real>
CsvTrace<Real>::CsvTrace(const std::string& path, int dim, std::optional<Vector> oracle,
                         const std::string& error_curve_path)
    : dim_(dim), oracle_(std::move(oracle)) {
    out_ = std::fopen(path.c_str(), "w");
    if (out_ == nullptr) {
        throw InputError(Module::solver, "cannot write trace " + path);
    }
    std::fputs("t,node", out_);
    for (int c = 1; c <= dim_; ++c) std::fprintf(out_, ",x_%d", c);
    for (int c = 1; c <= dim_; ++c) std::fprintf(out_, ",v_%d", c);
    std::fputs(",err_inf\n", out_);
    if (!error_curve_path.empty()) {
        if (!oracle_) {
            throw InputError(Module::solver, "error curve needs the reference solution");
        }
        curve_ = std::fopen(error_curve_path.c_str(), "w");
        if (curve_ == nullptr) {
            throw InputError(Module::solver, "cannot write " + error_curve_path);
        }
        std::fputs("t,err_inf\n", curve_);
    }
}

template <class Real>
CsvTrace<Real>::~CsvTrace() {
    if (out_ != nullptr) std::fclose(out_);
    if (curve_ != nullptr) std::fclose(curve_);
}

template <class Real>
void CsvTrace<Real>::record(const NetworkState<Real>& state) {
    Real worst = 0;
    for (std::size_t i = 0; i < state.states.size(); ++i) {
        const auto& s = state.states[i];
        std::fprintf(out_, "%ld,%zu", state.iteration, i + 1);
        for (int c = 0; c < dim_; ++c) {
            std::fputc(',', out_);
            put(out_, s.x(c));
        }
        for (int c = 0; c < dim_; ++c) {
            std::fputc(',', out_);
            put(out_, s.v(c));
        }
        std::fputc(',', out_);
        if (oracle_) {
            const Real e = (s.x - oracle_->template cast<Real>()).cwiseAbs().maxCoeff();
            worst = std::max(worst, e);
            put(out_, e);
        }
        std::fputc('\n', out_);
    }
    if (curve_ != nullptr) {
        std::fprintf(curve_, "%ld,", state.iteration);
        put(curve_, worst);
        std::fputc('\n', curve_);
    }
}

template struct NetworkState<double>;
template struct NetworkState<Extended>;
template class RoundBuffer<double>;
template class RoundBuffer<Extended>;
template class CsvTrace<double>;
template class CsvTrace<Extended>;
template class Network<double>;
template class Network<Extended>;

}  // namespace netls
