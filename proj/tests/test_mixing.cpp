#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include <Eigen/Eigenvalues>

#include "netls/error.hpp"
#include "netls/mixing.hpp"
#include "support.hpp"

using namespace netls;

namespace {

Graph fig1() { return Graph(4, false, {{1, 2}, {1, 3}, {3, 4}}); }
Graph fig4() { return Graph(4, true, {{4, 1}, {1, 2}, {3, 2}, {4, 3}, {2, 4}}); }

Matrix example1_w() {
    Matrix w(4, 4);
    w << 0.7, 0.15, 0.15, 0, 0.15, 0.85, 0, 0, 0.15, 0, 0.7, 0.15, 0, 0, 0.15, 0.85;
    return w;
}

}  // namespace

TEST_CASE("Laplacian weights reproduce the Example 1 W") {
    const Matrix w = build_w_laplacian(fig1(), 20.0 / 3.0).w;
    CHECK((w - example1_w()).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("Laplacian weights on K2 with tau 2") {
    const Matrix w = build_w_laplacian(Graph(2, false, {{1, 2}}), 2.0).w;
    CHECK(w(0, 0) == 0.5);
    CHECK(w(0, 1) == 0.5);
    CHECK(w(1, 0) == 0.5);
    CHECK(w(1, 1) == 0.5);
}

TEST_CASE("default tau") {
    CHECK(default_tau(fig1()) == 3.0);
    const Matrix w = build_w_laplacian(fig1()).w;
    CHECK(w.rowwise().sum().isApprox(Vector::Ones(4), 0.0));
    CHECK(validate_w(w, fig1()).ok());
}

TEST_CASE("Laplacian weights reject bad inputs") {
    CHECK_THROWS_AS(build_w_laplacian(Graph(4, false, {{1, 2}, {3, 4}})), AssumptionError);
    // lambda_max(L) of the Fig. 1 path is about 3.41, so tau = 1.5 is too small
    CHECK_THROWS_AS(build_w_laplacian(fig1(), 1.5), AssumptionError);
    CHECK_THROWS_AS(build_w_laplacian(fig4()), InputError);
}

TEST_CASE("validate_w") {
    CHECK(validate_w(example1_w(), fig1()).ok());

    const auto id = validate_w(Matrix::Identity(2, 2), Graph(2, false, {{1, 2}}));
    CHECK_FALSE(id.ok());
    CHECK_FALSE(id.passed("sparsity"));

    Matrix bad = example1_w();
    bad(1, 1) = 0.75;
    const auto r = validate_w(bad, fig1());
    CHECK_FALSE(r.passed("row_stochastic"));
    CHECK_FALSE(r.passed("column_stochastic"));

    Matrix asym = example1_w();
    asym(0, 1) = 0.1;
    asym(0, 0) = 0.75;
    CHECK_FALSE(validate_w(asym, fig1()).passed("symmetric"));

    CHECK_FALSE(validate_w(Matrix::Identity(3, 3), fig1()).passed("dimensions"));
}

TEST_CASE("validate_w spectrum check rejects an eigenvalue at -1") {
    const Graph g(2, false, {{1, 2}});
    Matrix w(2, 2);
    w << 0.0, 1.0, 1.0, 0.0;
    const auto r = validate_w(w, g);
    CHECK_FALSE(r.passed("spectrum"));
    CHECK_FALSE(r.passed("positive_diagonal"));
}

TEST_CASE("P and Q from degrees reproduce the Example 3 matrices") {
    const auto pq = build_pq(fig4());
    Matrix p(4, 4);
    Matrix q(4, 4);
    const double t = 1.0 / 3.0;
    p << 0.5, 0, 0, 0.5, t, t, t, 0, 0, 0, 0.5, 0.5, 0, 0.5, 0, 0.5;
    q << 0.5, 0, 0, t, 0.5, 0.5, 0.5, 0, 0, 0, 0.5, t, 0, 0.5, 0, t;
    CHECK(pq.p == p);
    CHECK(pq.q == q);
    CHECK(validate_pq(pq.p, pq.q, fig4()).ok());
}

TEST_CASE("P and Q on small cycles") {
    const auto two = build_pq(Graph(2, true, {{1, 2}, {2, 1}}));
    CHECK(two.p == Matrix::Constant(2, 2, 0.5));
    CHECK(two.q == Matrix::Constant(2, 2, 0.5));
    const auto three = build_pq(Graph(3, true, {{1, 2}, {2, 3}, {3, 1}}));
    CHECK((three.q.colwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-12);
    CHECK_THROWS_AS(build_pq(Graph(3, true, {{1, 2}, {2, 3}})), AssumptionError);
    CHECK_THROWS_AS(build_pq(fig1()), InputError);
}

TEST_CASE("validate_pq failures") {
    auto pq = build_pq(fig4());
    Matrix p = pq.p;
    p(0, 0) = 0.0;
    p(0, 3) = 1.0;
    CHECK_FALSE(validate_pq(p, pq.q, fig4()).passed("p_sparsity"));
    CHECK_FALSE(validate_pq(pq.p, pq.q.transpose(), fig4()).passed("q_column_stochastic"));
    CHECK_FALSE(validate_pq(pq.q, pq.q, fig4()).passed("p_row_stochastic"));
}

TEST_CASE("mixing invariants over random graphs up to N = 8") {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        std::mt19937_64 rng(seed);
        const int n = 2 + static_cast<int>(seed % 7);
        const Graph g = random_connected_graph(n, 0.4, false, rng);
        const Matrix w = build_w_laplacian(g).w;
        CHECK((w * Vector::Ones(n) - Vector::Ones(n)).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK((w.transpose() * Vector::Ones(n) - Vector::Ones(n)).cwiseAbs().maxCoeff() <= 1e-12);
        const Vector ev = Eigen::SelfAdjointEigenSolver<Matrix>(w).eigenvalues();
        CHECK(ev.minCoeff() > -1.0);
        CHECK(ev.maxCoeff() <= 1.0 + 1e-12);
        CHECK(((ev.array() - 1.0).abs() <= 1e-9).count() == 1);
        CHECK(validate_w(w, g).ok());

        const Graph d = random_connected_graph(n, 0.4, true, rng);
        const auto pq = build_pq(d);
        CHECK((pq.p.rowwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-12);
        CHECK((pq.q.colwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-12);
        CHECK(validate_pq(pq.p, pq.q, d).ok());
    }
}

TEST_CASE("matrix CSV and JSON round trips are exact") {
    const auto pq = build_pq(fig4());
    const auto path = (std::filesystem::temp_directory_path() / "netls_q.csv").string();
    write_matrix_csv(path, pq.q);
    CHECK(read_matrix_csv(path) == pq.q);
    std::remove(path.c_str());
    CHECK(matrix_from_json(matrix_to_json(pq.p)) == pq.p);
    CHECK_THROWS_AS(read_matrix_csv("/nonexistent/netls.csv"), InputError);
}
