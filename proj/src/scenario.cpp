#include "netls/scenario.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "netls/error.hpp"

namespace netls {

namespace fs = std::filesystem;

namespace {

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

Vector vector_from_json(const nlohmann::json& j, const char* what) {
    if (!j.is_array()) {
        throw InputError(Module::scenario, std::string(what) + " must be an array of numbers");
    }
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    return v;
}

MixingRule rule_from_json(const nlohmann::json& j) {
    MixingRule r;
    const std::string kind = j.at("rule").get<std::string>();
    if (kind == "explicit") {
        if (j.contains("W")) {
            r.kind = MixingRule::Kind::explicit_w;
            r.w = matrix_from_json(j.at("W"));
        } else {
            r.kind = MixingRule::Kind::explicit_pq;
            r.p = matrix_from_json(j.at("P"));
            r.q = matrix_from_json(j.at("Q"));
        }
    } else if (kind == "laplacian") {
        r.kind = MixingRule::Kind::laplacian;
        if (j.contains("tau") && !j.at("tau").is_null()) r.tau = j.at("tau").get<double>();
    } else if (kind == "pq_degree") {
        r.kind = MixingRule::Kind::pq_degree;
    } else {
        throw InputError(Module::scenario, "unknown mixing rule '" + kind + "'");
    }
    return r;
}

nlohmann::json rule_to_json(const MixingRule& r) {
    switch (r.kind) {
        case MixingRule::Kind::explicit_w: return {{"rule", "explicit"}, {"W", matrix_to_json(r.w)}};
        case MixingRule::Kind::explicit_pq:
            return {{"rule", "explicit"}, {"P", matrix_to_json(r.p)}, {"Q", matrix_to_json(r.q)}};
        case MixingRule::Kind::laplacian: {
            nlohmann::json j{{"rule", "laplacian"}};
            if (r.tau) j["tau"] = *r.tau;
            return j;
        }
        case MixingRule::Kind::pq_degree: return {{"rule", "pq_degree"}};
    }
    return {};
}

SolverConfig solver_from_json(const nlohmann::json& j) {
    SolverConfig c;
    c.step_size = j.at("step_size").get<double>();
    c.max_iterations = j.value("max_iterations", c.max_iterations);
    c.stop_tolerance = j.value("stop_tolerance", c.stop_tolerance);
    c.divergence_guard = j.value("divergence_guard", c.divergence_guard);
    c.threads = j.value("threads", c.threads);
    const std::string rule = j.value("stop_rule", std::string("oracle"));
    if (rule == "oracle") {
        c.stop_rule = StopRule::oracle;
    } else if (rule == "increment") {
        c.stop_rule = StopRule::increment;
    } else {
        throw InputError(Module::scenario, "unknown stop_rule '" + rule + "'");
    }
    if (!(c.step_size > 0.0)) throw InputError(Module::scenario, "step_size must be positive");
    if (c.max_iterations < 0) throw InputError(Module::scenario, "max_iterations must be non-negative");
    if (!(c.divergence_guard > 0.0)) throw InputError(Module::scenario, "divergence_guard must be positive");
    if (!(c.stop_tolerance >= 0.0)) throw InputError(Module::scenario, "stop_tolerance must be non-negative");
    return c;
}

nlohmann::json solver_to_json(const SolverConfig& c) {
    return {{"step_size", c.step_size},
            {"max_iterations", c.max_iterations},
            {"stop_tolerance", c.stop_tolerance},
            {"stop_rule", c.stop_rule == StopRule::oracle ? "oracle" : "increment"},
            {"divergence_guard", c.divergence_guard},
            {"threads", c.threads}};
}

Analyses analyses_from_json(const nlohmann::json& j) {
    Analyses a;
    a.spectral = j.value("spectral", a.spectral);
    a.critical_alpha = j.value("critical_alpha", a.critical_alpha);
    a.conservative_bound = j.value("conservative_bound", a.conservative_bound);
    a.finite_time = j.value("finite_time", a.finite_time);
    a.max_consensus = j.value("max_consensus", a.max_consensus);
    return a;
}

MixingDirected expand(const MixingRule& rule, const Graph& g) {
    const int n = g.size();
    auto check_dims = [n](const Matrix& a, const char* name) {
        if (a.rows() != n || a.cols() != n) {
            throw InputError(Module::scenario, std::string(name) + " is " + std::to_string(a.rows()) + " x " +
                                                   std::to_string(a.cols()) + ", graph has N = " +
                                                   std::to_string(n));
        }
    };
    switch (rule.kind) {
        case MixingRule::Kind::explicit_w: {
            if (g.directed()) throw InputError(Module::scenario, "explicit W needs an undirected graph");
            check_dims(rule.w, "W");
            if (!is_connected(g)) throw AssumptionError(Module::scenario, 2, "graph is not connected");
            const auto rep = validate_w(rule.w, g);
            if (!rep.ok()) throw AssumptionError(Module::scenario, 3, rep.failures());
            return as_directed({rule.w});
        }
        case MixingRule::Kind::explicit_pq: {
            if (!g.directed()) throw InputError(Module::scenario, "explicit P, Q need a directed graph");
            check_dims(rule.p, "P");
            check_dims(rule.q, "Q");
            if (!is_strongly_connected(g)) {
                throw AssumptionError(Module::scenario, 4, "digraph is not strongly connected");
            }
            const auto rep = validate_pq(rule.p, rule.q, g);
            if (!rep.ok()) throw AssumptionError(Module::scenario, 5, rep.failures());
            return {rule.p, rule.q};
        }
        case MixingRule::Kind::laplacian: return as_directed(build_w_laplacian(g, rule.tau));
        case MixingRule::Kind::pq_degree: return build_pq(g);
    }
    throw InputError(Module::scenario, "bad mixing rule");
}

/// Per node, the first recorded t with ||x_i - y*||_inf <= kEarlyTol.
class FirstWithin final : public TraceSink<double> {
public:
    FirstWithin(const Vector& oracle, int n) : oracle_(oracle), first_(n, -1) {}
    void record(const NetworkState<double>& s) override {
        for (std::size_t i = 0; i < s.states.size(); ++i) {
            if (first_[i] < 0 && (s.states[i].x - oracle_).cwiseAbs().maxCoeff() <= kEarlyTol) {
                first_[i] = s.iteration;
            }
        }
    }
    [[nodiscard]] const std::vector<long>& first() const { return first_; }

private:
    Vector oracle_;
    std::vector<long> first_;
};

class Fanout final : public TraceSink<double> {
public:
    explicit Fanout(std::vector<TraceSink<double>*> sinks) : sinks_(std::move(sinks)) {}
    void record(const NetworkState<double>& s) override {
        for (auto* k : sinks_) k->record(s);
    }

private:
    std::vector<TraceSink<double>*> sinks_;
};

void write_json(const fs::path& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw InputError(Module::scenario, "cannot write " + path.string());
    out << j.dump(2) << '\n';
}

}  // namespace

bool operator==(const Scenario& a, const Scenario& b) {
    return a.name == b.name && a.problem == b.problem && a.graph == b.graph && a.rule == b.rule &&
           a.mixing.p == b.mixing.p && a.mixing.q == b.mixing.q && a.solver.step_size == b.solver.step_size &&
           a.solver.max_iterations == b.solver.max_iterations && a.solver.stop_tolerance == b.solver.stop_tolerance &&
           a.solver.stop_rule == b.solver.stop_rule && a.solver.divergence_guard == b.solver.divergence_guard &&
           a.solver.threads == b.solver.threads && a.x0 == b.x0 && a.x0_seed == b.x0_seed &&
           a.analyses == b.analyses;
}

Vector seeded_x0(int length, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    Vector x(length);
    for (int i = 0; i < length; ++i) x(i) = u(rng);
    return x;
}

Scenario scenario_from_json(const nlohmann::json& j) {
    try {
        LinearProblem problem = problem_from_json(j.at("problem"));
        Graph graph = graph_from_json(j.at("graph"));
        if (graph.size() != problem.nodes()) {
            throw InputError(Module::scenario, "graph has N = " + std::to_string(graph.size()) +
                                                   " but the problem has N = " + std::to_string(problem.nodes()));
        }
        MixingRule rule = rule_from_json(j.at("mixing"));
        MixingDirected mixing = expand(rule, graph);
        const int len = problem.nodes() * problem.dim();

        Vector x0;
        std::optional<std::uint64_t> seed;
        if (j.contains("x0")) {
            x0 = vector_from_json(j.at("x0"), "x0");
            if (x0.size() != len) {
                throw InputError(Module::scenario, "x0 has length " + std::to_string(x0.size()) + ", expected N*m = " +
                                                       std::to_string(len));
            }
        } else if (j.contains("x0_seed")) {
            seed = j.at("x0_seed").get<std::uint64_t>();
            x0 = seeded_x0(len, *seed);
        } else {
            throw InputError(Module::scenario, "scenario needs x0 or x0_seed");
        }
        return Scenario{j.value("name", std::string()),
                        std::move(problem),
                        std::move(graph),
                        std::move(rule),
                        std::move(mixing),
                        solver_from_json(j.at("solver")),
                        std::move(x0),
                        seed,
                        j.contains("analyses") ? analyses_from_json(j.at("analyses")) : Analyses{}};
    } catch (const nlohmann::json::exception& ex) {
        throw InputError(Module::scenario, std::string("bad scenario JSON: ") + ex.what());
    }
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError(Module::scenario, "cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& ex) {
        throw InputError(Module::scenario, path + ": " + ex.what());
    }
    return scenario_from_json(j);
}

nlohmann::json to_json(const Scenario& s) {
    nlohmann::json j{{"name", s.name},
                     {"problem", to_json(s.problem)},
                     {"graph", to_json(s.graph)},
                     {"mixing", rule_to_json(s.rule)},
                     {"solver", solver_to_json(s.solver)},
                     {"analyses",
                      {{"spectral", s.analyses.spectral},
                       {"critical_alpha", s.analyses.critical_alpha},
                       {"conservative_bound", s.analyses.conservative_bound},
                       {"finite_time", s.analyses.finite_time},
                       {"max_consensus", s.analyses.max_consensus}}}};
    if (s.x0_seed) {
        j["x0_seed"] = *s.x0_seed;
    } else {
        j["x0"] = to_std(s.x0);
    }
    return j;
}

void save_scenario(const std::string& path, const Scenario& s) { write_json(path, to_json(s)); }

nlohmann::json to_json(const RunReport& r) {
    nlohmann::json j;
    j["scenario"] = r.scenario;
    j["oracle"] = to_std(r.oracle);
    j["validation"] = r.validation.to_json();
    j["spectral"] = r.spectral ? to_json(*r.spectral) : nlohmann::json(nullptr);
    j["alpha_bar"] = r.alpha_bar ? nlohmann::json(*r.alpha_bar) : nlohmann::json(nullptr);
    j["bound"] = r.bound ? nlohmann::json(*r.bound) : nlohmann::json(nullptr);
    if (r.consensus) {
        j["max_consensus"] = {{"per_node_bound", to_std(r.consensus->per_node)},
                              {"max_degree", to_std(r.consensus->max_degree)},
                              {"max_h_norm2", to_std(r.consensus->max_h_norm2)},
                              {"rounds", r.consensus->rounds}};
    } else {
        j["max_consensus"] = nullptr;
    }
    j["run"] = {{"verdict", to_string(r.run.verdict)},
                {"iterations", r.run.iterations},
                {"final_x", to_std(r.run.final_x)},
                {"final_error", r.run.final_error},
                {"first_within_1e-3", r.run.first_within}};
    if (r.finite_time.empty()) {
        j["finite_time"] = nullptr;
    } else {
        nlohmann::json ft = nlohmann::json::array();
        for (const auto& f : r.finite_time) ft.push_back(to_json(f));
        j["finite_time"] = ft;
    }
    if (!r.finite_time_skipped.empty()) j["finite_time_skipped"] = r.finite_time_skipped;
    j["trace_path"] = r.trace_path;
    j["error_curve_path"] = r.error_curve_path;
    return j;
}

RunReport run_scenario(const Scenario& s, const std::string& out_dir) {
    const int n = s.problem.nodes();
    const int m = s.problem.dim();
    RunReport r;
    r.scenario = s.name;
    r.oracle = direct_least_squares(s.problem);
    r.validation = s.undirected() ? validate_w(s.mixing.p, s.graph) : validate_pq(s.mixing.p, s.mixing.q, s.graph);

    const auto closed_loop = [&] {
        return s.undirected() ? assemble_m_undirected(s.w(), s.problem, s.solver.step_size)
                              : assemble_m_directed(s.mixing, s.problem, s.solver.step_size);
    };
    if (s.analyses.spectral) r.spectral = convergence_predicate(closed_loop(), m);
    if (s.analyses.critical_alpha && s.undirected()) {
        r.alpha_bar = critical_step_size(s.w(), s.problem);
        if (r.spectral) r.spectral->alpha_bar = r.alpha_bar;
    }
    if (s.analyses.conservative_bound && s.undirected()) r.bound = conservative_bound(s.graph, s.problem);
    if (s.analyses.max_consensus && s.undirected()) r.consensus = conservative_bound_decentralized(s.graph, s.problem);

    std::optional<CsvTrace<double>> csv;
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        r.trace_path = (fs::path(out_dir) / "trace.csv").string();
        r.error_curve_path = (fs::path(out_dir) / "errors.csv").string();
        csv.emplace(r.trace_path, m, r.oracle, r.error_curve_path);
    }
    FirstWithin first(r.oracle, n);
    std::vector<TraceSink<double>*> sinks{&first};
    if (csv) sinks.push_back(&*csv);
    Fanout sink(sinks);

    const Network<double> net(s.problem, s.mixing, &s.graph);
    const auto res = net.run(s.solver, s.x0, r.oracle, &sink);
    csv.reset();
    r.run.verdict = res.verdict;
    r.run.iterations = res.iterations;
    r.run.final_x = res.final_state.stacked_x();
    for (const auto& node : res.final_state.states) {
        r.run.final_error = std::max(r.run.final_error, (node.x - r.oracle).cwiseAbs().maxCoeff());
    }
    r.run.first_within = first.first();

    if (s.analyses.finite_time) {
        const Stability v = r.spectral ? r.spectral->verdict : convergence_predicate(closed_loop(), m).verdict;
        if (v == Stability::converges) {
            const Network<Extended> ext(s.problem, s.mixing, &s.graph);
            r.finite_time = run_finite_time_all<Extended>(ext, s.solver, s.x0);
        } else {
            r.finite_time_skipped = std::string("closed loop ") + to_string(v);
        }
    }

    if (!out_dir.empty()) write_json(fs::path(out_dir) / "report.json", to_json(r));
    return r;
}

bool ExampleResult::passed() const {
    for (const auto& c : checkpoints) {
        if (!c.passed) return false;
    }
    return !checkpoints.empty();
}

nlohmann::json to_json(const ExampleResult& r) {
    nlohmann::json cps = nlohmann::json::array();
    for (const auto& c : r.checkpoints) cps.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
    nlohmann::json reps = nlohmann::json::array();
    for (const auto& rep : r.reports) reps.push_back(to_json(rep));
    return {{"example", r.which}, {"passed", r.passed()}, {"checkpoints", cps}, {"reports", reps}};
}

namespace {

std::string fmt(double v) {
    std::ostringstream o;
    o.precision(10);
    o << v;
    return o.str();
}

void check(ExampleResult& r, std::string name, bool ok, std::string detail) {
    r.checkpoints.push_back({std::move(name), ok, std::move(detail)});
}

std::string sub(const std::string& out_dir, const std::string& name) {
    return out_dir.empty() ? std::string() : (fs::path(out_dir) / name).string();
}

long worst_first(const RunSummary& s) {
    long w = 0;
    for (long t : s.first_within) {
        if (t < 0) return -1;
        w = std::max(w, t);
    }
    return w;
}

void check_finite_time(ExampleResult& r, const RunReport& rep, int max_steps) {
    double err = 0.0;
    int steps = 0;
    bool early = true;
    std::string late;
    for (const auto& f : rep.finite_time) {
        err = std::max(err, (f.y_star - rep.oracle).cwiseAbs().maxCoeff());
        steps = std::max(steps, f.max_steps());
        // the last observation consumed is x_r(steps - 1)
        const long hit = rep.run.first_within[f.node - 1];
        if (hit >= 0 && f.max_steps() - 1 >= hit) {
            early = false;
            late += " node " + std::to_string(f.node);
        }
    }
    const bool ran = !rep.finite_time.empty();
    check(r, "finite-time y* within 1e-6 of the oracle at every node", ran && err <= 1e-6,
          ran ? "max error " + fmt(err) : "not run: " + rep.finite_time_skipped);
    check(r, "finite-time uses at most " + std::to_string(max_steps) + " steps per component",
          ran && steps <= max_steps, "max steps used " + std::to_string(steps));
    check(r, "finite-time finishes before the iterate reaches 1e-3", ran && early,
          early ? "ok" : "late at" + late);
}

}  // namespace

ExampleResult reproduce_example(int which, const std::string& scenario_dir, const std::string& out_dir) {
    if (which < 1 || which > 3) {
        throw InputError(Module::scenario, "example must be 1, 2 or 3");
    }
    ExampleResult r;
    r.which = which;
    const fs::path dir(scenario_dir);

    if (which == 1) {
        Scenario s = load_scenario((dir / "example1.json").string());
        s.analyses.spectral = s.analyses.critical_alpha = s.analyses.conservative_bound = true;
        const RunReport conv = run_scenario(s, sub(out_dir, "example1"));

        const Vector y = conv.oracle;
        check(r, "oracle y* = [-0.1429, -1]",
              std::abs(y(0) + 0.1429) <= 5e-4 && std::abs(y(1) + 1.0) <= 5e-4,
              "y* = [" + fmt(y(0)) + ", " + fmt(y(1)) + "]");

        Vector v0_expected(8);
        v0_expected << 0, 2, 18, 0, 0, 0, -4, 0;
        const Vector v0 = init_states<double>(s.problem, s.x0).stacked_v();
        check(r, "v(0) = [0, 2, 18, 0, 0, 0, -4, 0]", v0 == v0_expected, "max deviation " +
              fmt((v0 - v0_expected).cwiseAbs().maxCoeff()));

        const double abar = conv.alpha_bar.value_or(0.0);
        check(r, "alpha_bar = 0.1858 +- 1e-4", std::abs(abar - 0.1858) <= 1e-4, "alpha_bar = " + fmt(abar));
        check(r, "conservative bound <= alpha_bar", conv.bound && *conv.bound <= abar,
              "bound = " + fmt(conv.bound.value_or(0.0)));

        check(r, "spectrum converges at alpha = 0.1857", conv.spectral->verdict == Stability::converges,
              std::string(to_string(conv.spectral->verdict)) + ", rho_rest = " +
                  fmt(conv.spectral->spectral_radius_rest));
        const long t3 = worst_first(conv.run);
        check(r, "run at alpha = 0.1857 is within 1e-3 of y* by iteration 400", t3 >= 0 && t3 <= 400,
              "first iteration within 1e-3 at every node: " + std::to_string(t3));
        check(r, "run at alpha = 0.1857 converges", conv.run.verdict == Verdict::converged,
              std::string(to_string(conv.run.verdict)) + " after " + std::to_string(conv.run.iterations));

        const auto at_bar = eigenvalues(assemble_m_undirected(s.w(), s.problem, abar).m_matrix);
        double dist = INFINITY;
        for (auto l : at_bar) dist = std::min(dist, std::abs(l + 1.0));
        check(r, "eigenvalue within 1e-6 of -1 at alpha_bar", dist <= 1e-6, "distance " + fmt(dist));

        Scenario d = s;
        d.name = s.name + "-diverging";
        d.solver.step_size = 0.1859;
        const RunReport div = run_scenario(d, sub(out_dir, "example1-diverging"));
        check(r, "spectrum diverges at alpha = 0.1859", div.spectral->verdict == Stability::diverges,
              std::string(to_string(div.spectral->verdict)) + ", rho_rest = " +
                  fmt(div.spectral->spectral_radius_rest));
        double c2 = 0.0;
        for (int i = 0; i < s.problem.nodes(); ++i) c2 = std::max(c2, std::abs(div.run.final_x(2 * i + 1) + 1.0));
        check(r, "run at alpha = 0.1859 trips the guard with x_i2 within 1e-2 of -1",
              div.run.verdict == Verdict::diverged && c2 <= 1e-2,
              std::string(to_string(div.run.verdict)) + " at iteration " + std::to_string(div.run.iterations) +
                  ", max |x_i2 + 1| = " + fmt(c2));
        r.reports = {conv, div};
    } else if (which == 2) {
        Scenario s = load_scenario((dir / "example2.json").string());
        s.analyses.finite_time = true;
        const RunReport rep = run_scenario(s, sub(out_dir, "example2"));
        check_finite_time(r, rep, 16);
        const long t3 = worst_first(rep.run);
        check(r, "raw iterate needs roughly 300 steps or more to reach 1e-3", t3 >= 300,
              "first iteration within 1e-3 at every node: " + std::to_string(t3));
        r.reports = {rep};
    } else {
        Scenario s = load_scenario((dir / "example3.json").string());
        s.analyses.spectral = s.analyses.finite_time = true;
        const RunReport rep = run_scenario(s, sub(out_dir, "example3"));
        const Vector y_exact = (Vector(2) << 5.0 / 26.0, -16.0 / 26.0).finished();
        check(r, "oracle y* = [5/26, -16/26]", (rep.oracle - y_exact).cwiseAbs().maxCoeff() <= 1e-12,
              "y* = [" + fmt(rep.oracle(0)) + ", " + fmt(rep.oracle(1)) + "]");
        check(r, "two semisimple eigenvalues at 1, the rest inside the unit circle",
              rep.spectral->count_at_one == 2 && rep.spectral->semisimple_at_one &&
                  rep.spectral->verdict == Stability::converges,
              "count_at_one = " + std::to_string(rep.spectral->count_at_one) + ", rho_rest = " +
                  fmt(rep.spectral->spectral_radius_rest));
        const long t3 = worst_first(rep.run);
        check(r, "run at alpha = 0.1 is within 1e-3 of y* by iteration 300", t3 >= 0 && t3 <= 300,
              "first iteration within 1e-3 at every node: " + std::to_string(t3));
        check_finite_time(r, rep, 16);
        r.reports = {rep};
    }
    return r;
}

}  // namespace netls
