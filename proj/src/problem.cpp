#include "netls/problem.hpp"

#include <cmath>
#include <fstream>

#include <Eigen/QR>
#include <Eigen/SVD>

namespace netls {

LinearProblem::LinearProblem(Matrix h, Vector z) : h_(std::move(h)), z_(std::move(z)) {
    if (h_.rows() == 0 || h_.cols() == 0) {
        throw InputError(Module::problem, "H must be non-empty");
    }
    if (h_.rows() != z_.size()) {
        throw InputError(Module::problem, "H has " + std::to_string(h_.rows()) + " rows but z has " +
                                              std::to_string(z_.size()) + " entries");
    }
    if (!h_.allFinite() || !z_.allFinite()) {
        throw InputError(Module::problem, "H and z must be finite");
    }
    if (h_.rows() < h_.cols()) {
        throw AssumptionError(Module::problem, 1, "fewer equations than unknowns");
    }
    const Vector sv = Eigen::JacobiSVD<Matrix>(h_).singularValues();
    if (!(sv(sv.size() - 1) > kRankRatio * sv(0))) {
        throw AssumptionError(Module::problem, 1, "H is not full column rank");
    }
}

StackedForms stacked_forms(const LinearProblem& p) {
    const int n = p.nodes();
    const int m = p.dim();
    StackedForms s{Matrix::Zero(n * m, n * m), Vector::Zero(n * m)};
    for (int i = 0; i < n; ++i) {
        const Vector h = p.row(i);
        s.h_tilde.block(i * m, i * m, m, m) = h * h.transpose();
        s.z_h.segment(i * m, m) = p.z()(i) * h;
    }
    return s;
}

Vector stacked_gradient(const LinearProblem& p, const Vector& x) {
    const int n = p.nodes();
    const int m = p.dim();
    if (x.size() != n * m) {
        throw InputError(Module::problem, "stacked_gradient: x must have length N*m");
    }
    Vector g(n * m);
    for (int i = 0; i < n; ++i) {
        g.segment(i * m, m) = local_gradient<double>(p.row(i), p.z()(i), x.segment(i * m, m));
    }
    return g;
}

double stacked_cost(const LinearProblem& p, const Vector& x) {
    const int m = p.dim();
    if (x.size() != p.nodes() * m) {
        throw InputError(Module::problem, "stacked_cost: x must have length N*m");
    }
    double f = 0.0;
    for (int i = 0; i < p.nodes(); ++i) {
        const double r = p.h().row(i).dot(x.segment(i * m, m)) - p.z()(i);
        f += 0.5 * r * r;
    }
    return f;
}

Vector direct_least_squares(const LinearProblem& p) {
    // rank already verified at construction
    return Eigen::HouseholderQR<Matrix>(p.h()).solve(p.z());
}

double residual(const LinearProblem& p, const Vector& y) {
    if (y.size() != p.dim()) {
        throw InputError(Module::problem, "residual: y must have length m");
    }
    return 0.5 * (p.z() - p.h() * y).squaredNorm();
}

double lambda_max_htilde(const LinearProblem& p) {
    return p.h().rowwise().squaredNorm().maxCoeff();
}

LinearProblem random_problem(int n, int m, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (;;) {
        Matrix h(n, m);
        Vector z(n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < m; ++j) h(i, j) = u(rng);
            z(i) = u(rng);
        }
        try {
            return LinearProblem(std::move(h), std::move(z));
        } catch (const AssumptionError&) {
        }
    }
}

LinearProblem problem_from_json(const nlohmann::json& j) {
    try {
        const auto& rows = j.at("H");
        const auto& zs = j.at("z");
        if (!rows.is_array() || rows.empty()) {
            throw InputError(Module::problem, "H must be a non-empty array of rows");
        }
        const std::size_t m = rows.front().size();
        Matrix h(rows.size(), m);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != m) {
                throw InputError(Module::problem, "H rows must have equal length");
            }
            for (std::size_t c = 0; c < m; ++c) h(i, c) = rows[i][c].get<double>();
        }
        Vector z(zs.size());
        for (std::size_t i = 0; i < zs.size(); ++i) z(i) = zs[i].get<double>();
        return LinearProblem(std::move(h), std::move(z));
    } catch (const nlohmann::json::exception& ex) {
        throw InputError(Module::problem, std::string("bad problem JSON: ") + ex.what());
    }
}

nlohmann::json to_json(const LinearProblem& p) {
    nlohmann::json rows = nlohmann::json::array();
    for (int i = 0; i < p.nodes(); ++i) {
        nlohmann::json r = nlohmann::json::array();
        for (int c = 0; c < p.dim(); ++c) r.push_back(p.h()(i, c));
        rows.push_back(r);
    }
    nlohmann::json z = nlohmann::json::array();
    for (int i = 0; i < p.nodes(); ++i) z.push_back(p.z()(i));
    return {{"H", rows}, {"z", z}};
}

LinearProblem load_problem(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw InputError(Module::problem, "cannot open " + path);
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& ex) {
        throw InputError(Module::problem, path + ": " + ex.what());
    }
    return problem_from_json(j);
}

}  // namespace netls
