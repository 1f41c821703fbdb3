#pragma once

#include <stdexcept>
#include <string>

namespace netls {

/// Originating module of an error; surfaced by the CLI and in reports.
enum class Module { graph, mixing, problem, solver, spectral, finite_time, scenario };

[[nodiscard]] constexpr const char* to_string(Module m) noexcept {
    switch (m) {
        case Module::graph: return "graph_topology";
        case Module::mixing: return "mixing_matrices";
        case Module::problem: return "problem_model";
        case Module::solver: return "solver_core";
        case Module::spectral: return "spectral_analysis";
        case Module::finite_time: return "finite_time";
        case Module::scenario: return "harness";
    }
    return "unknown";
}

/// Base error. The message is prefixed with the module tag.
class Error : public std::runtime_error {
public:
    Error(Module module, const std::string& what)
        : std::runtime_error(std::string("[") + to_string(module) + "] " + what), module_(module) {}

    [[nodiscard]] Module module() const noexcept { return module_; }

private:
    Module module_;
};

/// Malformed or inconsistent input (bad file, dimension mismatch, precondition).
class InputError : public Error {
public:
    using Error::Error;
};

/// Input is well formed but violates a modelling assumption (connectivity, stochasticity, rank).
class AssumptionError : public Error {
public:
    AssumptionError(Module module, int assumption, const std::string& what)
        : Error(module, "Assumption " + std::to_string(assumption) + " violated: " + what),
          assumption_(assumption) {}

    [[nodiscard]] int assumption() const noexcept { return assumption_; }

private:
    int assumption_;
};

/// Numerical failure at run time (non-finite state, rank test that never fires, ...).
class NumericalError : public Error {
public:
    using Error::Error;
};

}  // namespace netls
