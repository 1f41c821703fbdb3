#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "netls/error.hpp"
#include "netls/spectral.hpp"
#include "support.hpp"

using namespace netls;
using netls::test::example;
using netls::test::Instance;
using netls::test::random_instance;

namespace {

// independent value from a separate float64 evaluation of the same formula
constexpr double kAlphaBarExample1 = 0.1858108335496375;

Vector limit_state(const LinearProblem& p) {
    const int n = p.nodes();
    const int m = p.dim();
    Vector s = Vector::Zero(2 * n * m);
    s.head(n * m) = direct_least_squares(p).replicate(n, 1);
    return s;
}

std::vector<double> sorted_real(const std::vector<std::complex<double>>& ev) {
    std::vector<double> r;
    for (auto l : ev) r.push_back(l.real());
    std::ranges::sort(r);
    return r;
}

}  // namespace

TEST_CASE("consensus directions are fixed by M") {
    const Scenario s = example(1);
    const Matrix m = assemble_m_undirected(s.w(), s.problem, 0.1857).m_matrix;
    for (int c = 0; c < 2; ++c) {
        Vector v = Vector::Zero(16);
        for (int i = 0; i < 4; ++i) v(2 * i + c) = 1.0;
        CHECK((m * v - v).cwiseAbs().maxCoeff() <= 1e-15);
    }
}

TEST_CASE("block structure of M") {
    const Scenario s = example(1);
    const double a = 0.1857;
    const Matrix m = assemble_m_undirected(s.w(), s.problem, a).m_matrix;
    CHECK(m.rows() == 16);
    CHECK(m.topRightCorner(8, 8) == -a * Matrix::Identity(8, 8));
    CHECK(m(0, 0) == 0.7);
    CHECK(m(0, 2) == 0.15);
    CHECK(m(1, 0) == 0.0);
    // row of node 2 (h = [3, 0]) in the lower-left block: -h h^T ((I - W) (x) I)
    CHECK(m(8 + 2, 0) == doctest::Approx(-9.0 * -0.15));
    CHECK(m(8 + 2, 2) == doctest::Approx(-9.0 * 0.15));
    CHECK(m(8 + 2, 8 + 2) == doctest::Approx(0.85 - a * 9.0));
}

TEST_CASE("at alpha = 0 the spectrum of M is that of W, each 2m times") {
    const Scenario s = example(1);
    const auto ev = eigenvalues(assemble_m_undirected(s.w(), s.problem, 0.0).m_matrix);
    const auto got = sorted_real(ev);
    const auto w_ev = eigenvalues(s.w().w);
    std::vector<double> want;
    for (auto l : w_ev) {
        for (int k = 0; k < 4; ++k) want.push_back(l.real());
    }
    std::ranges::sort(want);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(std::abs(got[i] - want[i]) <= 1e-6);
}

TEST_CASE("directed assembly with P = Q = W reproduces the undirected one") {
    const Scenario s = example(1);
    const auto u = assemble_m_undirected(s.w(), s.problem, 0.1857);
    const auto d = assemble_m_directed(as_directed(s.w()), s.problem, 0.1857);
    CHECK(u.m_matrix == d.m_matrix);
    CHECK(u.flavor == Flavor::undirected);
    CHECK(d.flavor == Flavor::directed);
}

TEST_CASE("at alpha = 0 a directed closed loop has spectrum eig(P) with eig(Q)") {
    const Graph g(3, true, {{1, 2}, {2, 3}, {3, 1}, {1, 3}});
    const auto pq = build_pq(g);
    Matrix h(3, 1);
    h << 1, 2, -1;
    const LinearProblem p(h, Vector::Ones(3));
    auto got = eigenvalues(assemble_m_directed(pq, p, 0.0).m_matrix);
    auto want = eigenvalues(pq.p);
    const auto eq = eigenvalues(pq.q);
    want.insert(want.end(), eq.begin(), eq.end());
    std::vector<std::complex<double>> w2 = want;
    for (auto l : got) {
        const auto it = std::ranges::min_element(w2, {}, [&](auto x) { return std::abs(x - l); });
        CHECK(std::abs(*it - l) <= 1e-6);
        w2.erase(it);
    }
}

TEST_CASE("assembly checks dimensions") {
    const Scenario s = example(1);
    CHECK_THROWS_AS(assemble_m_undirected({Matrix::Identity(3, 3)}, s.problem, 0.1), InputError);
    CHECK_THROWS_AS(assemble_m_directed({s.mixing.p, Matrix::Identity(3, 3)}, s.problem, 0.1), InputError);
}

TEST_CASE("semisimple eigenvalue at 1") {
    const Scenario e1 = example(1);
    for (double a : {0.1857, 0.5}) {
        const auto c = semisimple_one_check(assemble_m_undirected(e1.w(), e1.problem, a), 2);
        CHECK(c.count_at_one == 2);
        CHECK(c.rank_m_minus_i == 14);
        CHECK(c.semisimple);
    }
    const Scenario e3 = example(3);
    const auto c = semisimple_one_check(assemble_m_directed(e3.mixing, e3.problem, 0.1), 2);
    CHECK(c.count_at_one == 2);
    CHECK(c.semisimple);
}

TEST_CASE("convergence predicate on Example 1") {
    const Scenario s = example(1);
    const auto at = [&](double a) { return convergence_predicate(assemble_m_undirected(s.w(), s.problem, a), 2); };
    CHECK(at(0.1857).verdict == Stability::converges);
    CHECK(at(0.1859).verdict == Stability::diverges);
    CHECK(at(0.5).verdict == Stability::diverges);
    const auto edge = at(critical_step_size(s.w(), s.problem));
    CHECK(edge.verdict == Stability::marginal);
    const auto r = at(0.1857);
    CHECK(r.count_at_one + static_cast<int>(std::ranges::count_if(r.eigenvalues, [](auto l) {
              return std::abs(l - 1.0) > kEigTol;
          })) == 16);
}

TEST_CASE("critical step size") {
    const Scenario s = example(1);
    CHECK(std::abs(critical_step_size(s.w(), s.problem) - kAlphaBarExample1) <= 1e-12);
    CHECK(std::abs(critical_step_size(s.w(), s.problem) - 0.1858) <= 1e-4);

    Matrix h(1, 1);
    h << 2.0;
    const LinearProblem single(h, Vector::Ones(1));
    const MixingUndirected one{Matrix::Identity(1, 1)};
    CHECK(critical_step_size(one, single) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(conservative_bound(Graph(1, false), single) == doctest::Approx(0.5).epsilon(1e-15));

    Matrix asym = s.w().w;
    asym(0, 1) += 0.01;
    CHECK_THROWS_AS((void)critical_step_size({asym}, s.problem), InputError);
}

TEST_CASE("conservative bound") {
    const Scenario s = example(1);
    CHECK(conservative_bound(s.graph, s.problem) == doctest::Approx(2.0 / 81.0).epsilon(1e-15));
    CHECK_THROWS_AS((void)conservative_bound(example(3).graph, example(3).problem), InputError);
}

TEST_CASE("max-consensus") {
    const Scenario s = example(1);
    Vector h2(4);
    h2 << 1, 9, 4, 1;
    const auto r = max_consensus(s.graph, h2);
    CHECK(r.values == Vector::Constant(4, 9.0));
    CHECK(r.rounds == 3);

    const auto flat = max_consensus(s.graph, Vector::Constant(4, 2.5));
    CHECK(flat.rounds == 0);

    Vector deg(4);
    deg << 2, 1, 2, 1;
    CHECK(max_consensus(s.graph, deg).values == Vector::Constant(4, 2.0));

    const auto d = conservative_bound_decentralized(s.graph, s.problem);
    CHECK(d.per_node == Vector::Constant(4, conservative_bound(s.graph, s.problem)));
    CHECK(d.rounds <= 3);

    const auto dir = max_consensus(example(3).graph, h2);
    CHECK(dir.values == Vector::Constant(4, 9.0));
    CHECK(dir.rounds <= 3);

    CHECK_THROWS_AS((void)max_consensus(Graph(3, false, {{1, 2}}), Vector::Ones(3)), AssumptionError);
    CHECK_THROWS_AS((void)max_consensus(s.graph, Vector::Ones(3)), InputError);
}

TEST_CASE("property: verdict flips across the critical step size") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Instance in = random_instance(seed + 1000, false);
        const MixingUndirected w{in.mixing.p};
        const double abar = critical_step_size(w, in.problem);
        const auto at = [&](double a) {
            return convergence_predicate(assemble_m_undirected(w, in.problem, a), in.dim());
        };
        CHECK(at(0.999 * abar).verdict == Stability::converges);
        CHECK(at(1.001 * abar).verdict != Stability::converges);

        double dist = INFINITY;
        for (auto l : eigenvalues(assemble_m_undirected(w, in.problem, abar).m_matrix)) {
            dist = std::min(dist, std::abs(l + 1.0));
        }
        CHECK(dist <= 1e-6);

        CHECK(conservative_bound(in.graph, in.problem) <= abar);
        const auto [lo, hi] = stability_threshold(as_directed(w), in.problem, 0.5 * abar, 2.0 * abar);
        CHECK(lo <= abar);
        CHECK(hi >= abar);
        CHECK(hi - lo <= 1e-3 * lo);
    }
}

TEST_CASE("property: directed instances have a stable step within 60 halvings") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Instance in = random_instance(seed + 2000, true);
        const auto a = find_directed_step(in.mixing, in.problem);
        REQUIRE(a.has_value());
        CHECK(*a > 0.0);
        CHECK(convergence_predicate(assemble_m_directed(in.mixing, in.problem, *a), in.dim()).verdict ==
              Stability::converges);
    }
}

TEST_CASE("propagation matches dense powers") {
    const Scenario s = example(3);
    const auto m = assemble_m_directed(s.mixing, s.problem, 0.1);
    const Vector s0 = init_states<double>(s.problem, s.x0).stacked();
    Vector expect = s0;
    for (int t = 0; t < 50; ++t) expect = m.m_matrix * expect;
    CHECK((propagate(m, s0, 50) - expect).norm() <= 1e-12 * expect.norm());
    CHECK(propagate(m, s0, 0) == s0);
}

TEST_CASE("limit of M^t s0 is the consensus on y* with zero tracker") {
    {
        const Scenario s = example(1);
        const auto m = assemble_m_undirected(s.w(), s.problem, 0.18);
        const Vector s0 = init_states<double>(s.problem, s.x0).stacked();
        CHECK((propagate(m, s0, 5000) - limit_state(s.problem)).cwiseAbs().maxCoeff() <= 1e-6);
    }
    {
        const Scenario s = example(3);
        const auto m = assemble_m_directed(s.mixing, s.problem, 0.1);
        const Vector s0 = init_states<double>(s.problem, s.x0).stacked();
        CHECK((propagate(m, s0, 5000) - limit_state(s.problem)).cwiseAbs().maxCoeff() <= 1e-6);
    }
}

TEST_CASE("property: limit of M^t s0 on random convergent instances") {
    int checked = 0;
    for (std::uint64_t seed = 0; checked < 20 && seed < 200; ++seed) {
        const Instance in = random_instance(seed + 3000, seed % 2 == 1);
        const double a = netls::test::stable_alpha(in);
        const auto m = in.closed_loop(a);
        const auto r = convergence_predicate(m, in.dim());
        REQUIRE(r.verdict == Stability::converges);
        // skip instances whose contraction is too slow to settle by t = 5000
        if (std::pow(r.spectral_radius_rest, 5000) > 1e-9) continue;
        const Vector s0 = init_states<double>(in.problem, in.x0).stacked();
        CHECK((propagate(m, s0, 5000) - limit_state(in.problem)).cwiseAbs().maxCoeff() <= 1e-6);
        ++checked;
    }
    CHECK(checked == 20);
}

TEST_CASE("spectral report JSON") {
    const Scenario s = example(1);
    auto r = convergence_predicate(assemble_m_undirected(s.w(), s.problem, 0.1857), 2);
    auto j = to_json(r);
    CHECK(j.at("eigenvalues").size() == 16);
    CHECK(j.at("eigenvalues")[0].size() == 2);
    CHECK(j.at("count_at_one") == 2);
    CHECK(j.at("semisimple") == true);
    CHECK(j.at("verdict") == "converges");
    CHECK(j.at("alpha_bar").is_null());
    r.alpha_bar = 0.25;
    CHECK(to_json(r).at("alpha_bar") == 0.25);
}
