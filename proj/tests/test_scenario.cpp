#include <doctest.h>

#include <filesystem>

#include "netls/error.hpp"
#include "netls/scenario.hpp"
#include "support.hpp"

using namespace netls;
using netls::test::example;
using netls::test::scenario_path;
using netls::test::slurp;

namespace fs = std::filesystem;

namespace {

nlohmann::json raw(int which) {
    return nlohmann::json::parse(slurp(scenario_path("example" + std::to_string(which))));
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("netls_" + name);
    fs::remove_all(p);
    return p;
}

}  // namespace

TEST_CASE("bundled Example 1 carries the reference data") {
    const Scenario s = example(1);
    Matrix h(4, 2);
    h << 0, 1, 3, 0, 2, 0, 1, 0;
    CHECK(s.problem.h() == h);
    CHECK(s.problem.z() == (Vector(4) << -1, 0, -2, 2).finished());
    Matrix w(4, 4);
    w << 0.7, 0.15, 0.15, 0, 0.15, 0.85, 0, 0, 0.15, 0, 0.7, 0.15, 0, 0, 0.15, 0.85;
    CHECK(s.w().w == w);
    CHECK(s.x0 == (Vector(8) << 4, 1, 2, -2, -1, 1, -2, -1).finished());
    CHECK(s.solver.step_size == 0.1857);
    CHECK(s.undirected());
}

TEST_CASE("bundled Example 2 is Example 1 at alpha = 0.18") {
    const Scenario a = example(1);
    const Scenario b = example(2);
    CHECK(b.solver.step_size == 0.18);
    CHECK(a.problem == b.problem);
    CHECK(a.graph == b.graph);
    CHECK(a.x0 == b.x0);
    CHECK(b.analyses.finite_time);
}

TEST_CASE("bundled Example 3 carries the reference data") {
    const Scenario s = example(3);
    CHECK_FALSE(s.undirected());
    CHECK(s.solver.step_size == 0.1);
    const auto pq = build_pq(s.graph);
    CHECK((s.mixing.p - pq.p).cwiseAbs().maxCoeff() == 0.0);
    CHECK((s.mixing.q - pq.q).cwiseAbs().maxCoeff() == 0.0);
    Matrix h(4, 2);
    h << 1, 2, 2, 2, 2, 1, 1, 0;
    CHECK(s.problem.h() == h);
}

TEST_CASE("construction rules expand to the explicit matrices") {
    auto j = raw(1);
    j["mixing"] = {{"rule", "laplacian"}, {"tau", 20.0 / 3.0}};
    CHECK((scenario_from_json(j).mixing.p - example(1).mixing.p).cwiseAbs().maxCoeff() <= 1e-15);

    auto d = raw(3);
    d["mixing"] = {{"rule", "pq_degree"}};
    CHECK(scenario_from_json(d).mixing.q == build_pq(example(3).graph).q);
}

TEST_CASE("scenario errors") {
    auto j = raw(1);
    j["graph"] = {{"n", 3}, {"directed", false}, {"edges", {{1, 2}, {2, 3}}}};
    CHECK_THROWS_AS(scenario_from_json(j), InputError);

    j = raw(1);
    j["mixing"]["W"][1][1] = 0.75;
    try {
        (void)scenario_from_json(j);
        FAIL("expected an assumption error");
    } catch (const AssumptionError& e) {
        CHECK(e.assumption() == 3);
    }

    j = raw(1);
    j["graph"]["edges"] = {{1, 2}, {3, 4}};
    j["mixing"] = {{"rule", "laplacian"}};
    CHECK_THROWS_AS(scenario_from_json(j), AssumptionError);

    j = raw(3);
    j["mixing"]["Q"] = j["mixing"]["P"];
    try {
        (void)scenario_from_json(j);
        FAIL("expected an assumption error");
    } catch (const AssumptionError& e) {
        CHECK(e.assumption() == 5);
    }

    j = raw(1);
    j["x0"] = {1, 2, 3};
    CHECK_THROWS_AS(scenario_from_json(j), InputError);

    j = raw(1);
    j.erase("x0");
    CHECK_THROWS_AS(scenario_from_json(j), InputError);

    j = raw(1);
    j["solver"]["step_size"] = -1.0;
    CHECK_THROWS_AS(scenario_from_json(j), InputError);

    j = raw(1);
    j["mixing"] = {{"rule", "metropolis"}};
    CHECK_THROWS_AS(scenario_from_json(j), InputError);

    CHECK_THROWS_AS(load_scenario("/nonexistent/scenario.json"), InputError);
}

TEST_CASE("scenario round trip") {
    for (int which : {1, 2, 3}) {
        const Scenario s = example(which);
        CHECK(scenario_from_json(to_json(s)) == s);
    }
    auto j = raw(3);
    j.erase("x0");
    j["x0_seed"] = 17;
    const Scenario seeded = scenario_from_json(j);
    CHECK(seeded.x0 == seeded_x0(8, 17));
    const auto path = scratch("roundtrip.json");
    save_scenario(path.string(), seeded);
    CHECK(load_scenario(path.string()) == seeded);
    fs::remove(path);

    auto l = raw(1);
    l["mixing"] = {{"rule", "laplacian"}};
    const Scenario lap = scenario_from_json(l);
    CHECK(scenario_from_json(to_json(lap)) == lap);
}

TEST_CASE("run_scenario on Example 1") {
    Scenario s = example(1);
    const RunReport r = run_scenario(s);
    CHECK(r.run.verdict == Verdict::converged);
    REQUIRE(r.alpha_bar.has_value());
    CHECK(std::abs(*r.alpha_bar - 0.1858) <= 1e-4);
    CHECK(r.spectral->verdict == Stability::converges);
    CHECK(r.validation.ok());
    REQUIRE(r.consensus.has_value());
    CHECK(r.consensus->per_node == Vector::Constant(4, *r.bound));

    s.solver.step_size = 0.1859;
    const RunReport d = run_scenario(s);
    CHECK(d.run.verdict == Verdict::diverged);
    CHECK(d.spectral->verdict == Stability::diverges);
}

TEST_CASE("run_scenario on Example 3 recovers y* at every node") {
    const RunReport r = run_scenario(example(3));
    REQUIRE(r.finite_time.size() == 4);
    for (const auto& f : r.finite_time) CHECK((f.y_star - r.oracle).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK_FALSE(r.alpha_bar.has_value());
}

TEST_CASE("finite-time is skipped for a non-convergent closed loop") {
    Scenario s = example(2);
    s.solver.step_size = 0.1859;
    s.solver.max_iterations = 10;
    const RunReport r = run_scenario(s);
    CHECK(r.finite_time.empty());
    CHECK(r.finite_time_skipped == "closed loop diverges");
}

TEST_CASE("artifacts are written and deterministic") {
    Scenario s = example(3);
    s.solver.max_iterations = 400;
    auto j = to_json(s);
    j.erase("x0");
    j["x0_seed"] = 5;
    const Scenario seeded = scenario_from_json(j);

    const auto dir = scratch("artifacts");
    std::string first[3];
    for (int k = 0; k < 2; ++k) {
        const RunReport r = run_scenario(seeded, dir.string());
        const std::string got[3] = {slurp(r.trace_path), slurp(r.error_curve_path),
                                    slurp((dir / "report.json").string())};
        for (int f = 0; f < 3; ++f) {
            CHECK_FALSE(got[f].empty());
            if (k == 0) {
                first[f] = got[f];
            } else {
                CHECK(got[f] == first[f]);
            }
        }
    }
    const auto report = nlohmann::json::parse(first[2]);
    CHECK(report.at("run").at("verdict") == "max_iters");
    CHECK(report.at("run").at("iterations") == 400);
    CHECK(report.at("finite_time").size() == 4);
    CHECK(first[1].rfind("t,err_inf\n0,", 0) == 0);
    fs::remove_all(dir);
}

TEST_CASE("reproduce Example 2") {
    const auto r = reproduce_example(2, NETLS_SCENARIO_DIR);
    for (const auto& c : r.checkpoints) {
        INFO(c.name << ": " << c.detail);
        CHECK(c.passed);
    }
    CHECK(r.passed());
    CHECK(to_json(r).at("passed") == true);
    CHECK_THROWS_AS((void)reproduce_example(4, NETLS_SCENARIO_DIR), InputError);
}
