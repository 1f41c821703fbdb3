#pragma once

// Finite-time recovery of y* at a single node from its own iterates.
//
// For a scalar stream y(0), y(1), ... with differences d(t) = y(t) - y(t-1),
// the (k+1) x (k+1) Hankel matrix H_k(a, b) = d(a + b + 1) loses rank once
// k reaches the degree D of the stream's minimal recurrence. Its kernel
// beta = [beta_0 .. beta_{D-1}, 1] gives the limit
//
//   y* = (y(0) beta_0 + ... + y(D) beta_D) / (beta_0 + ... + beta_D).
//
// Templated on the scalar type; traces from the long double solver keep the
// rank decision well separated from rounding noise.

#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include <json.hpp>

#include "netls/solver.hpp"
#include "netls/types.hpp"

namespace netls {

/// Default singularity threshold relative to max(sigma_max, 1).
template <class Real>
[[nodiscard]] constexpr Real default_hankel_tol() {
    return Real(1000) * std::numeric_limits<Real>::epsilon();
}

inline constexpr double kLastEntryMin = 1e-8;  ///< kernel last entry below this is degenerate
inline constexpr double kKernelSumMin = 1e-10;  ///< |1^T beta| below this is degenerate

template <class Real>
class HankelObserver {
public:
    HankelObserver(int node, int component) : node_(node), component_(component) {}

    /// Throws NumericalError on a non-finite value.
    void observe(Real value);

    [[nodiscard]] int node() const noexcept { return node_; }
    [[nodiscard]] int component() const noexcept { return component_; }
    [[nodiscard]] const std::vector<Real>& observations() const noexcept { return obs_; }
    [[nodiscard]] const std::vector<Real>& differences() const noexcept { return diff_; }

    [[nodiscard]] int k() const noexcept { return k_; }
    [[nodiscard]] const std::optional<VectorT<Real>>& kernel() const noexcept { return kernel_; }
    [[nodiscard]] const std::optional<Real>& recovered() const noexcept { return recovered_; }
    [[nodiscard]] bool done() const noexcept { return recovered_.has_value(); }
    /// Observations consumed when the kernel was found, i.e. 2k + 2.
    [[nodiscard]] int steps_used() const noexcept { return done() ? 2 * k_ + 2 : 0; }

    /// Runs the Hankel test for every k whose 2k + 2 observations are
    /// available. Throws NumericalError once k would exceed `k_cap`.
    void advance(Real tol, int k_cap);

private:
    int node_;
    int component_;
    std::vector<Real> obs_;
    std::vector<Real> diff_;
    int k_ = 0;
    std::optional<VectorT<Real>> kernel_;
    std::optional<Real> recovered_;
};

/// (k+1) x (k+1) Hankel matrix with entry (a, b) = differences[a + b] (0-based,
/// differences[0] = d(1)). Needs 2k + 1 differences.
template <class Real>
[[nodiscard]] MatrixT<Real> build_hankel(const std::vector<Real>& differences, int k);

enum class KernelStatus { absent, degenerate, found };

template <class Real>
struct KernelResult {
    KernelStatus status = KernelStatus::absent;
    VectorT<Real> beta;  ///< last entry exactly 1 when found
};

template <class Real>
[[nodiscard]] KernelResult<Real> detect_kernel(const MatrixT<Real>& hankel, Real tol);

/// (y(0..D) . beta) / (1^T beta). Throws NumericalError if 1^T beta is ~0.
template <class Real>
[[nodiscard]] Real final_value(const std::vector<Real>& observations, const VectorT<Real>& beta);

struct FiniteTimeReport {
    int node = 0;  ///< 1-based
    Vector y_star;
    std::vector<int> steps_used;
    std::vector<int> k_final;

    [[nodiscard]] int max_steps() const;
};

[[nodiscard]] nlohmann::json to_json(const FiniteTimeReport& r);

/// Feeds node r's iterates x_r(0), x_r(1), ... from `next` until every
/// component is recovered. `next` is only called while work remains.
template <class Real>
[[nodiscard]] FiniteTimeReport run_finite_time(const std::function<VectorT<Real>()>& next, int node, int dim,
                                               int k_cap, Real tol = default_hankel_tol<Real>());

/// Runs the solver once and recovers y* at every node from that trace. The
/// cap is k <= 2Nm.
template <class Real>
[[nodiscard]] std::vector<FiniteTimeReport> run_finite_time_all(const Network<Real>& network,
                                                                const SolverConfig& config, const Vector& x0,
                                                                Real tol = default_hankel_tol<Real>());

extern template class HankelObserver<double>;
extern template class HankelObserver<Extended>;

}  // namespace netls
