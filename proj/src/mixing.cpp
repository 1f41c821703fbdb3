#include "netls/mixing.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "netls/error.hpp"

namespace netls {

bool ValidationReport::ok() const {
    for (const auto& c : checks) {
        if (!c.passed) return false;
    }
    return true;
}

const ValidationCheck* ValidationReport::find(const std::string& name) const {
    for (const auto& c : checks) {
        if (c.name == name) return &c;
    }
    return nullptr;
}

bool ValidationReport::passed(const std::string& name) const {
    const auto* c = find(name);
    return c != nullptr && c->passed;
}

std::string ValidationReport::failures() const {
    std::string out;
    for (const auto& c : checks) {
        if (c.passed) continue;
        if (!out.empty()) out += "; ";
        out += c.name;
        if (!c.detail.empty()) out += " (" + c.detail + ")";
    }
    return out;
}

nlohmann::json ValidationReport::to_json() const {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& c : checks) {
        j.push_back({{"check", c.name}, {"passed", c.passed}, {"detail", c.detail}});
    }
    return {{"ok", ok()}, {"checks", j}};
}

namespace {

std::string fmt_entry(const char* what, int i, int j, double v) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%s at (%d,%d) = %.6g", what, i + 1, j + 1, v);
    return buf;
}

ValidationCheck row_sums(const Matrix& m, const char* name) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        const double s = m.row(i).sum();
        if (std::abs(s - 1.0) > kStochasticTol) {
            char buf[96];
            std::snprintf(buf, sizeof buf, "row %ld sums to %.15g", static_cast<long>(i + 1), s);
            return {name, false, buf};
        }
    }
    return {name, true, {}};
}

ValidationCheck col_sums(const Matrix& m, const char* name) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        const double s = m.col(j).sum();
        if (std::abs(s - 1.0) > kStochasticTol) {
            char buf[96];
            std::snprintf(buf, sizeof buf, "column %ld sums to %.15g", static_cast<long>(j + 1), s);
            return {name, false, buf};
        }
    }
    return {name, true, {}};
}

// positive exactly where `allowed(i, j)` holds, zero elsewhere
template <class Allowed>
ValidationCheck sparsity(const Matrix& m, const char* name, Allowed allowed) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            const bool want = allowed(static_cast<int>(i) + 1, static_cast<int>(j) + 1);
            const double v = m(i, j);
            if (want && !(v > 0.0)) {
                return {name, false, fmt_entry("missing positive weight", int(i), int(j), v)};
            }
            if (!want && v != 0.0) {
                return {name, false, fmt_entry("weight outside sparsity pattern", int(i), int(j), v)};
            }
        }
    }
    return {name, true, {}};
}

bool square_of(const Matrix& m, int n) { return m.rows() == n && m.cols() == n; }

}  // namespace

double default_tau(const Graph& g) {
    double dmax = 0.0;
    for (const auto& d : degrees(g)) dmax = std::max(dmax, d.weighted);
    return dmax + 1.0;
}

MixingUndirected build_w_laplacian(const Graph& g, std::optional<double> tau) {
    if (g.directed()) {
        throw InputError(Module::mixing, "Laplacian mixing needs an undirected graph");
    }
    if (!is_connected(g)) {
        throw AssumptionError(Module::mixing, 2, "graph is not connected");
    }
    const double t = tau.value_or(default_tau(g));
    const Matrix l = laplacian(g);
    const double lmax = g.size() > 1
                            ? Eigen::SelfAdjointEigenSolver<Matrix>(l, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff()
                            : 0.0;
    if (!(t > 0.5 * lmax)) {
        throw AssumptionError(Module::mixing, 3,
                              "tau = " + std::to_string(t) + " must exceed lambda_max(L)/2 = " +
                                  std::to_string(0.5 * lmax));
    }
    return {Matrix::Identity(g.size(), g.size()) - l / t};
}

ValidationReport validate_w(const Matrix& w, const Graph& g) {
    ValidationReport rep;
    const int n = g.size();
    if (!square_of(w, n)) {
        rep.checks.push_back({"dimensions", false, "W must be " + std::to_string(n) + "x" + std::to_string(n)});
        return rep;
    }
    const double asym = (w - w.transpose()).cwiseAbs().maxCoeff();
    rep.checks.push_back({"symmetric", asym <= kStochasticTol, asym <= kStochasticTol ? "" : "max |W - W^T| = " + std::to_string(asym)});
    rep.checks.push_back(row_sums(w, "row_stochastic"));
    rep.checks.push_back(col_sums(w, "column_stochastic"));

    ValidationCheck diag{"positive_diagonal", true, {}};
    for (int i = 0; i < n; ++i) {
        if (!(w(i, i) > 0.0)) {
            diag = {"positive_diagonal", false, fmt_entry("non-positive diagonal", i, i, w(i, i))};
            break;
        }
    }
    rep.checks.push_back(diag);
    rep.checks.push_back(sparsity(w, "sparsity", [&](int i, int j) { return i == j || g.has_edge(j, i); }));

    // (-1, 1] with a simple eigenvalue at 1
    const Eigen::VectorXcd ev = Eigen::EigenSolver<Matrix>(w, false).eigenvalues();
    int at_one = 0;
    bool inside = true;
    for (const auto& l : ev) {
        if (std::abs(l - 1.0) <= kSpectrumTol) ++at_one;
        if (std::abs(l.imag()) > kSpectrumTol || l.real() <= -1.0 + kSpectrumTol || l.real() > 1.0 + kSpectrumTol) {
            inside = false;
        }
    }
    std::string detail;
    if (!inside) detail = "eigenvalue outside (-1, 1]";
    if (at_one != 1) detail += (detail.empty() ? "" : "; ") + std::to_string(at_one) + " eigenvalues at 1";
    rep.checks.push_back({"spectrum", inside && at_one == 1, detail});
    return rep;
}

MixingDirected build_pq(const Graph& g) {
    if (!g.directed()) {
        throw InputError(Module::mixing, "P/Q construction needs a directed graph");
    }
    if (!is_strongly_connected(g)) {
        throw AssumptionError(Module::mixing, 4, "digraph is not strongly connected");
    }
    const int n = g.size();
    const auto deg = degrees(g);
    MixingDirected m{Matrix::Zero(n, n), Matrix::Zero(n, n)};
    for (int i = 1; i <= n; ++i) {
        for (int j : g.in_neighbors(i)) {
            m.p(i - 1, j - 1) = 1.0 / deg[i - 1].in;
        }
        for (int k : g.out_neighbors(i)) {
            m.q(k - 1, i - 1) = 1.0 / deg[i - 1].out;
        }
    }
    return m;
}

ValidationReport validate_pq(const Matrix& p, const Matrix& q, const Graph& g) {
    ValidationReport rep;
    const int n = g.size();
    if (!square_of(p, n) || !square_of(q, n)) {
        rep.checks.push_back({"dimensions", false, "P and Q must be " + std::to_string(n) + "x" + std::to_string(n)});
        return rep;
    }
    rep.checks.push_back(row_sums(p, "p_row_stochastic"));
    rep.checks.push_back(col_sums(q, "q_column_stochastic"));
    // p_ij > 0 iff j in N_i^in ; q_ij > 0 iff i in N_j^out -- both mean j == i or j -> i
    auto in_nb = [&](int i, int j) { return i == j || g.has_edge(j, i); };
    rep.checks.push_back(sparsity(p, "p_sparsity", in_nb));
    rep.checks.push_back(sparsity(q, "q_sparsity", in_nb));
    return rep;
}

Matrix read_matrix_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw InputError(Module::mixing, "cannot open " + path);
    }
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t used = 0;
                row.push_back(std::stod(cell, &used));
            } catch (const std::exception&) {
                throw InputError(Module::mixing, path + ": bad number '" + cell + "'");
            }
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw InputError(Module::mixing, path + ": ragged rows");
        }
        rows.push_back(std::move(row));
    }
    Matrix m(rows.size(), rows.empty() ? 0 : rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
    }
    return m;
}

void write_matrix_csv(const std::string& path, const Matrix& m) {
    std::ofstream out(path);
    if (!out) {
        throw InputError(Module::mixing, "cannot write " + path);
    }
    char buf[32];
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
            out << (j ? "," : "") << buf;
        }
        out << '\n';
    }
}

Matrix matrix_from_json(const nlohmann::json& j) {
    if (!j.is_array() || j.empty()) {
        throw InputError(Module::mixing, "matrix must be a non-empty array of rows");
    }
    const std::size_t cols = j.front().size();
    Matrix m(j.size(), cols);
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_array() || j[i].size() != cols) {
            throw InputError(Module::mixing, "matrix rows must have equal length");
        }
        for (std::size_t c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
    }
    return m;
}

nlohmann::json matrix_to_json(const Matrix& m) {
    nlohmann::json j = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(i, c));
        j.push_back(row);
    }
    return j;
}

}  // namespace netls
