#include "netls/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <span>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <unsupported/Eigen/KroneckerProduct>

#include "netls/error.hpp"
#include "netls/kernels.hpp"

namespace netls {

namespace {

void check_square(const Matrix& a, int n, const char* name) {
    if (a.rows() != n || a.cols() != n) {
        throw InputError(Module::spectral, std::string(name) + " must be " + std::to_string(n) + " x " +
                                               std::to_string(n));
    }
}

Matrix assemble(const Matrix& p, const Matrix& q, const LinearProblem& problem, double alpha) {
    const int n = problem.nodes();
    const int m = problem.dim();
    check_square(p, n, "P");
    check_square(q, n, "Q");
    const Matrix im = Matrix::Identity(m, m);
    const Matrix ht = stacked_forms(problem).h_tilde;
    const int nm = n * m;

    Matrix out(2 * nm, 2 * nm);
    out.topLeftCorner(nm, nm) = Eigen::kroneckerProduct(p, im);
    out.topRightCorner(nm, nm) = -alpha * Matrix::Identity(nm, nm);
    out.bottomLeftCorner(nm, nm) = -ht * Eigen::kroneckerProduct(Matrix(Matrix::Identity(n, n) - p), im);
    out.bottomRightCorner(nm, nm) = Matrix(Eigen::kroneckerProduct(q, im)) - alpha * ht;
    return out;
}

int dim_of(const ClosedLoopMatrix& m, int dim) {
    if (dim <= 0 || m.m_matrix.rows() % (2 * dim) != 0 || m.m_matrix.rows() != m.m_matrix.cols()) {
        throw InputError(Module::spectral, "M is not 2Nm x 2Nm for m = " + std::to_string(dim));
    }
    return dim;
}

bool converges(const MixingDirected& pq, const LinearProblem& problem, double alpha) {
    return convergence_predicate(assemble_m_directed(pq, problem, alpha), problem.dim()).verdict ==
           Stability::converges;
}

}  // namespace

ClosedLoopMatrix assemble_m_undirected(const MixingUndirected& w, const LinearProblem& problem, double alpha) {
    return {assemble(w.w, w.w, problem, alpha), alpha, Flavor::undirected};
}

ClosedLoopMatrix assemble_m_directed(const MixingDirected& pq, const LinearProblem& problem, double alpha) {
    return {assemble(pq.p, pq.q, problem, alpha), alpha, Flavor::directed};
}

std::vector<std::complex<double>> eigenvalues(const Matrix& m) {
    Eigen::EigenSolver<Matrix> es(m, false);
    if (es.info() != Eigen::Success) {
        throw NumericalError(Module::spectral, "eigenvalue iteration did not converge");
    }
    const auto& ev = es.eigenvalues();
    std::vector<std::complex<double>> out(ev.data(), ev.data() + ev.size());
    std::ranges::sort(out, [](auto a, auto b) {
        return std::abs(a) != std::abs(b) ? std::abs(a) > std::abs(b) : a.real() != b.real() ? a.real() > b.real()
                                                                                               : a.imag() > b.imag();
    });
    return out;
}

SemisimpleCheck semisimple_one_check(const ClosedLoopMatrix& m, int dim) {
    dim_of(m, dim);
    const auto ev = eigenvalues(m.m_matrix);
    SemisimpleCheck c;
    c.count_at_one = static_cast<int>(
        std::ranges::count_if(ev, [](auto l) { return std::abs(l - std::complex<double>(1.0, 0.0)) <= kEigTol; }));

    const Matrix a = m.m_matrix - Matrix::Identity(m.m_matrix.rows(), m.m_matrix.cols());
    const Vector sv = Eigen::JacobiSVD<Matrix>(a).singularValues();
    const double cutoff = kRankCutoff * sv(0);
    c.rank_m_minus_i = static_cast<int>((sv.array() > cutoff).count());
    c.semisimple = c.count_at_one == dim && c.rank_m_minus_i == a.rows() - dim;
    return c;
}

const char* to_string(Stability s) noexcept {
    switch (s) {
        case Stability::converges: return "converges";
        case Stability::marginal: return "marginal";
        case Stability::diverges: return "diverges";
    }
    return "?";
}

SpectralReport convergence_predicate(const ClosedLoopMatrix& m, int dim) {
    const SemisimpleCheck c = semisimple_one_check(m, dim);
    SpectralReport r;
    r.eigenvalues = eigenvalues(m.m_matrix);
    r.count_at_one = c.count_at_one;
    r.rank_m_minus_i = c.rank_m_minus_i;
    r.semisimple_at_one = c.semisimple;
    for (auto l : r.eigenvalues) {
        if (std::abs(l - std::complex<double>(1.0, 0.0)) > kEigTol) {
            r.spectral_radius_rest = std::max(r.spectral_radius_rest, std::abs(l));
        }
    }
    if (r.semisimple_at_one && r.spectral_radius_rest < 1.0 - kMargin) {
        r.verdict = Stability::converges;
    } else if (std::abs(r.spectral_radius_rest - 1.0) <= kMargin) {
        r.verdict = Stability::marginal;
    } else {
        r.verdict = Stability::diverges;
    }
    return r;
}

nlohmann::json to_json(const SpectralReport& r) {
    nlohmann::json ev = nlohmann::json::array();
    for (auto l : r.eigenvalues) ev.push_back({l.real(), l.imag()});
    nlohmann::json j{{"eigenvalues", ev},
                     {"count_at_one", r.count_at_one},
                     {"semisimple", r.semisimple_at_one},
                     {"rho_rest", r.spectral_radius_rest},
                     {"alpha_bar", nullptr},
                     {"verdict", to_string(r.verdict)}};
    if (r.alpha_bar) j["alpha_bar"] = *r.alpha_bar;
    return j;
}

double critical_step_size(const MixingUndirected& w, const LinearProblem& problem) {
    const int n = problem.nodes();
    const int m = problem.dim();
    check_square(w.w, n, "W");
    if (!w.w.isApprox(w.w.transpose(), 1e-12)) {
        throw InputError(Module::spectral, "W must be symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> ew(w.w);
    const Vector shifted = ew.eigenvalues().array() + 1.0;
    if (shifted.minCoeff() <= 1e-12) {
        throw NumericalError(Module::spectral, "I + W is singular");
    }
    const Matrix& u = ew.eigenvectors();
    const Matrix inv = u * shifted.cwiseInverse().asDiagonal() * u.transpose();
    const Matrix b_half = Eigen::kroneckerProduct(inv, Matrix::Identity(m, m));
    const Matrix ht = stacked_forms(problem).h_tilde;
    const Matrix s = b_half * ht * b_half;
    const double lmax = Eigen::SelfAdjointEigenSolver<Matrix>(0.5 * (s + s.transpose()), Eigen::EigenvaluesOnly)
                            .eigenvalues()
                            .maxCoeff();
    return 1.0 / (2.0 * lmax);
}

double conservative_bound(const Graph& graph, const LinearProblem& problem) {
    if (graph.directed()) {
        throw InputError(Module::spectral, "conservative bound needs an undirected graph");
    }
    if (graph.size() != problem.nodes()) {
        throw InputError(Module::spectral, "graph and problem disagree on N");
    }
    double dmax = 0.0;
    for (const auto& d : degrees(graph)) dmax = std::max(dmax, d.weighted);
    return 2.0 / ((dmax + 1.0) * (dmax + 1.0) * lambda_max_htilde(problem));
}

MaxConsensus max_consensus(const Graph& graph, const Vector& local_values) {
    const int n = graph.size();
    if (local_values.size() != n) {
        throw InputError(Module::spectral, "max_consensus needs one value per node");
    }
    const bool ok = graph.directed() ? is_strongly_connected(graph) : is_connected(graph);
    if (!ok) {
        throw AssumptionError(Module::spectral, graph.directed() ? 4 : 2, "max-consensus needs a connected graph");
    }
    std::vector<std::vector<int>> in(n);
    for (int i = 0; i < n; ++i) in[i] = graph.in_neighbors(i + 1);

    MaxConsensus r{local_values, 0};
    for (int round = 0; round < n; ++round) {
        Vector next = r.values;
        for (int i = 0; i < n; ++i) {
            for (int j : in[i]) next(i) = std::max(next(i), r.values(j - 1));
        }
        if (next == r.values) break;
        r.values = std::move(next);
        ++r.rounds;
    }
    return r;
}

DecentralizedBound conservative_bound_decentralized(const Graph& graph, const LinearProblem& problem) {
    if (graph.directed()) {
        throw InputError(Module::spectral, "conservative bound needs an undirected graph");
    }
    const int n = graph.size();
    if (n != problem.nodes()) {
        throw InputError(Module::spectral, "graph and problem disagree on N");
    }
    Vector deg(n);
    const auto ds = degrees(graph);
    for (int i = 0; i < n; ++i) deg(i) = ds[i].weighted;
    const Vector h2 = problem.h().rowwise().squaredNorm();

    const MaxConsensus a = max_consensus(graph, deg);
    const MaxConsensus b = max_consensus(graph, h2);
    DecentralizedBound r{Vector(n), a.values, b.values, std::max(a.rounds, b.rounds)};
    for (int i = 0; i < n; ++i) {
        const double d = a.values(i) + 1.0;
        r.per_node(i) = 2.0 / (d * d * b.values(i));
    }
    return r;
}

std::optional<double> find_directed_step(const MixingDirected& pq, const LinearProblem& problem, int max_halvings) {
    double alpha = 1.0;
    for (int k = 0; k <= max_halvings; ++k, alpha *= 0.5) {
        if (converges(pq, problem, alpha)) return alpha;
    }
    return std::nullopt;
}

std::pair<double, double> stability_threshold(const MixingDirected& pq, const LinearProblem& problem, double lo,
                                              double hi, double rel_tol) {
    if (!(lo > 0.0 && lo < hi)) {
        throw InputError(Module::spectral, "bisection needs 0 < lo < hi");
    }
    if (!converges(pq, problem, lo) || converges(pq, problem, hi)) {
        throw InputError(Module::spectral, "bisection bracket does not straddle the threshold");
    }
    while (hi - lo > rel_tol * lo) {
        const double mid = 0.5 * (lo + hi);
        (converges(pq, problem, mid) ? lo : hi) = mid;
    }
    return {lo, hi};
}

Vector propagate(const ClosedLoopMatrix& m, const Vector& s, long t) {
    const auto rows = static_cast<std::size_t>(m.m_matrix.rows());
    if (s.size() != m.m_matrix.cols()) {
        throw InputError(Module::spectral, "state length does not match M");
    }
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> a = m.m_matrix;
    const std::span<const double> as(a.data(), rows * rows);
    Vector cur = s;
    Vector next(s.size());
    for (long k = 0; k < t; ++k) {
        kernels::gemv(std::span<double>(next.data(), rows), as, std::span<const double>(cur.data(), rows), rows,
                      rows);
        cur.swap(next);
    }
    return cur;
}

}  // namespace netls
