#include "netls/finite_time.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/SVD>

#include "netls/error.hpp"

namespace netls {

template <class Real>
void HankelObserver<Real>::observe(Real value) {
    if (!std::isfinite(value)) {
        throw NumericalError(Module::finite_time, "non-finite observation at node " + std::to_string(node_) +
                                                      ", component " + std::to_string(component_));
    }
    if (!obs_.empty()) diff_.push_back(value - obs_.back());
    obs_.push_back(value);
}

template <class Real>
void HankelObserver<Real>::advance(Real tol, int k_cap) {
    while (!done() && obs_.size() >= static_cast<std::size_t>(2 * k_ + 2)) {
        const auto res = detect_kernel(build_hankel(diff_, k_), tol);
        if (res.status == KernelStatus::found) {
            using std::abs;
            if (abs(res.beta.sum()) > Real(kKernelSumMin)) {
                kernel_ = res.beta;
                recovered_ = final_value(obs_, res.beta);
                return;
            }
        }
        if (k_ + 1 > k_cap) {
            throw NumericalError(Module::finite_time,
                                 "no Hankel kernel up to k = " + std::to_string(k_cap) + " at node " +
                                     std::to_string(node_) + ", component " + std::to_string(component_) +
                                     " (trace not convergent or too noisy)");
        }
        ++k_;
    }
}

template <class Real>
MatrixT<Real> build_hankel(const std::vector<Real>& differences, int k) {
    if (k < 0) {
        throw InputError(Module::finite_time, "k must be nonnegative");
    }
    if (differences.size() < static_cast<std::size_t>(2 * k + 1)) {
        throw InputError(Module::finite_time, "Hankel of order k = " + std::to_string(k) + " needs " +
                                                  std::to_string(2 * k + 1) + " differences");
    }
    MatrixT<Real> h(k + 1, k + 1);
    for (int a = 0; a <= k; ++a) {
        for (int b = 0; b <= k; ++b) h(a, b) = differences[a + b];
    }
    return h;
}

template <class Real>
KernelResult<Real> detect_kernel(const MatrixT<Real>& hankel, Real tol) {
    using std::abs;
    if (hankel.rows() != hankel.cols() || hankel.rows() == 0) {
        throw InputError(Module::finite_time, "detect_kernel needs a non-empty square matrix");
    }
    const Eigen::JacobiSVD<MatrixT<Real>> svd(hankel, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const Eigen::Index n = hankel.rows();
    if (sv(n - 1) > tol * std::max(sv(0), Real(1))) return {};

    VectorT<Real> beta = svd.matrixV().col(n - 1);
    if (abs(beta(n - 1)) < Real(kLastEntryMin)) return {KernelStatus::degenerate, {}};
    beta /= beta(n - 1);
    beta(n - 1) = Real(1);
    return {KernelStatus::found, beta};
}

template <class Real>
Real final_value(const std::vector<Real>& observations, const VectorT<Real>& beta) {
    using std::abs;
    const auto len = static_cast<std::size_t>(beta.size());
    if (len == 0 || observations.size() < len) {
        throw InputError(Module::finite_time, "final_value needs at least D + 1 observations");
    }
    const Real s = beta.sum();
    if (!(abs(s) > Real(kKernelSumMin))) {
        throw NumericalError(Module::finite_time, "kernel sums to zero");
    }
    Real acc = 0;
    for (std::size_t i = 0; i < len; ++i) acc += observations[i] * beta(static_cast<Eigen::Index>(i));
    return acc / s;
}

int FiniteTimeReport::max_steps() const {
    return steps_used.empty() ? 0 : *std::ranges::max_element(steps_used);
}

nlohmann::json to_json(const FiniteTimeReport& r) {
    return {{"node", r.node},
            {"y_star", std::vector<double>(r.y_star.data(), r.y_star.data() + r.y_star.size())},
            {"steps_used", r.steps_used},
            {"k_final", r.k_final}};
}

namespace {

template <class Real>
FiniteTimeReport report_of(int node, const std::vector<HankelObserver<Real>>& obs) {
    FiniteTimeReport r;
    r.node = node;
    r.y_star.resize(static_cast<Eigen::Index>(obs.size()));
    for (std::size_t j = 0; j < obs.size(); ++j) {
        r.y_star(static_cast<Eigen::Index>(j)) = static_cast<double>(*obs[j].recovered());
        r.steps_used.push_back(obs[j].steps_used());
        r.k_final.push_back(obs[j].k());
    }
    return r;
}

template <class Real>
bool feed(std::vector<HankelObserver<Real>>& obs, const VectorT<Real>& x, Real tol, int k_cap) {
    bool all = true;
    for (std::size_t j = 0; j < obs.size(); ++j) {
        if (obs[j].done()) continue;
        obs[j].observe(x(static_cast<Eigen::Index>(j)));
        obs[j].advance(tol, k_cap);
        all = all && obs[j].done();
    }
    return all;
}

}  // namespace

template <class Real>
FiniteTimeReport run_finite_time(const std::function<VectorT<Real>()>& next, int node, int dim, int k_cap,
                                 Real tol) {
    std::vector<HankelObserver<Real>> obs;
    for (int j = 1; j <= dim; ++j) obs.emplace_back(node, j);
    for (;;) {
        const VectorT<Real> x = next();
        if (x.size() != dim) {
            throw InputError(Module::finite_time, "stream yielded a vector of the wrong length");
        }
        if (feed(obs, x, tol, k_cap)) break;
    }
    return report_of(node, obs);
}

template <class Real>
std::vector<FiniteTimeReport> run_finite_time_all(const Network<Real>& network, const SolverConfig& config,
                                                  const Vector& x0, Real tol) {
    const int n = network.nodes();
    const int m = network.dim();
    const int k_cap = 2 * n * m;
    std::vector<std::vector<HankelObserver<Real>>> obs(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 1; j <= m; ++j) obs[i].emplace_back(i + 1, j);
    }
    NetworkState<Real> state = network.init(x0);
    for (;;) {
        bool all = true;
        for (int i = 0; i < n; ++i) all = feed(obs[i], state.states[i].x, tol, k_cap) && all;
        if (all) break;
        state = network.step(state, config);
    }
    std::vector<FiniteTimeReport> out;
    for (int i = 0; i < n; ++i) out.push_back(report_of(i + 1, obs[i]));
    return out;
}

template class HankelObserver<double>;
template class HankelObserver<Extended>;

#define NETLS_FINITE_TIME(Real)                                                                               \
    template MatrixT<Real> build_hankel<Real>(const std::vector<Real>&, int);                                  \
    template KernelResult<Real> detect_kernel<Real>(const MatrixT<Real>&, Real);                               \
    template Real final_value<Real>(const std::vector<Real>&, const VectorT<Real>&);                           \
    template FiniteTimeReport run_finite_time<Real>(const std::function<VectorT<Real>()>&, int, int, int, Real); \
    template std::vector<FiniteTimeReport> run_finite_time_all<Real>(const Network<Real>&, const SolverConfig&, \
                                                                     const Vector&, Real);

NETLS_FINITE_TIME(double)
NETLS_FINITE_TIME(Extended)

#undef NETLS_FINITE_TIME

}  // namespace netls
