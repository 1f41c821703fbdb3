#pragma once

// Row-partitioned linear system z = H y: node i privately holds (h_i, z_i).

#include <random>
#include <string>

#include <json.hpp>

#include "netls/error.hpp"
#include "netls/types.hpp"

namespace netls {

/// sigma_min / sigma_max threshold of the full-column-rank check.
inline constexpr double kRankRatio = 1e-10;

class LinearProblem {
public:
    /// Throws InputError on shape problems and AssumptionError(1) when H is
    /// not numerically full column rank.
    LinearProblem(Matrix h, Vector z);

    [[nodiscard]] int nodes() const noexcept { return static_cast<int>(h_.rows()); }
    [[nodiscard]] int dim() const noexcept { return static_cast<int>(h_.cols()); }
    [[nodiscard]] const Matrix& h() const noexcept { return h_; }
    [[nodiscard]] const Vector& z() const noexcept { return z_; }

    /// h_i as a column vector, 0-based row index.
    [[nodiscard]] Vector row(int i) const { return h_.row(i).transpose(); }

    friend bool operator==(const LinearProblem& a, const LinearProblem& b) {
        return a.h_ == b.h_ && a.z_ == b.z_;
    }

private:
    Matrix h_;
    Vector z_;
};

/// H~ = blkdiag(h_i h_i^T) and z_H = [z_i h_i] stacked.
struct StackedForms {
    Matrix h_tilde;
    Vector z_h;
};

[[nodiscard]] StackedForms stacked_forms(const LinearProblem& p);

/// grad f_i(x) = h (h^T x) - z h
template <class Real>
[[nodiscard]] VectorT<Real> local_gradient(const VectorT<Real>& h, Real z, const VectorT<Real>& x) {
    if (h.size() != x.size()) {
        throw InputError(Module::problem, "local_gradient: h and x differ in length");
    }
    return h * h.dot(x) - z * h;
}

[[nodiscard]] Vector stacked_gradient(const LinearProblem& p, const Vector& x);

/// F(x) = sum_i 1/2 (h_i^T x_i - z_i)^2
[[nodiscard]] double stacked_cost(const LinearProblem& p, const Vector& x);

/// Least-squares solution from an orthogonal factorization of H.
[[nodiscard]] Vector direct_least_squares(const LinearProblem& p);

/// 1/2 ||z - H y||^2
[[nodiscard]] double residual(const LinearProblem& p, const Vector& y);

/// Largest eigenvalue of H~, i.e. max_i ||h_i||^2.
[[nodiscard]] double lambda_max_htilde(const LinearProblem& p);

/// Entries uniform in [-3, 3], redrawn until the rank check passes.
[[nodiscard]] LinearProblem random_problem(int n, int m, std::mt19937_64& rng);

// {"H": [[...], ...], "z": [...]}
[[nodiscard]] LinearProblem problem_from_json(const nlohmann::json& j);
[[nodiscard]] nlohmann::json to_json(const LinearProblem& p);
[[nodiscard]] LinearProblem load_problem(const std::string& path);

}  // namespace netls
