#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <sys/wait.h>

#include <json.hpp>

#include "support.hpp"

namespace fs = std::filesystem;

namespace {

int run(const std::string& args, const std::string& capture = {}) {
    std::string cmd = std::string(NETLS_CLI_PATH) + " " + args;
    cmd += capture.empty() ? " >/dev/null 2>&1" : " >" + capture + " 2>/dev/null";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string ex(int which) { return netls::test::scenario_path("example" + std::to_string(which)); }

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("netls_cli_" + name);
    fs::remove_all(p);
    return p;
}

}  // namespace

TEST_CASE("validate exit codes") {
    CHECK(run("validate " + ex(1)) == 0);
    CHECK(run("validate " + ex(3)) == 0);
    CHECK(run("validate /nonexistent.json") == 2);
    CHECK(run("") == 2);

    auto j = nlohmann::json::parse(netls::test::slurp(ex(1)));
    j["mixing"]["W"][0][0] = 0.6;
    const auto bad = scratch("bad.json");
    std::ofstream(bad) << j.dump();
    CHECK(run("validate " + bad.string()) == 1);

    j = nlohmann::json::parse(netls::test::slurp(ex(1)));
    j["x0"] = {1.0};
    std::ofstream(bad) << j.dump();
    CHECK(run("validate " + bad.string()) == 2);
    fs::remove(bad);
}

TEST_CASE("analyze and critical-alpha") {
    const auto out = scratch("analyze.json");
    CHECK(run("analyze " + ex(1) + " --alpha 0.1859", out.string()) == 0);
    const auto j = nlohmann::json::parse(netls::test::slurp(out.string()));
    CHECK(j.at("verdict") == "diverges");
    CHECK(std::abs(j.at("alpha_bar").get<double>() - 0.1858) <= 1e-4);

    CHECK(run("critical-alpha " + ex(3), out.string()) == 0);
    const auto c = nlohmann::json::parse(netls::test::slurp(out.string()));
    CHECK(c.at("alpha_bar").is_null());
    const double lo = c.at("threshold_bracket")[0];
    CHECK(lo > 0.1);
    fs::remove(out);
}

TEST_CASE("solve writes artifacts") {
    const auto dir = scratch("solve");
    CHECK(run("solve " + ex(3) + " --out " + dir.string()) == 0);
    CHECK(fs::exists(dir / "trace.csv"));
    CHECK(fs::exists(dir / "errors.csv"));
    CHECK(fs::exists(dir / "report.json"));
    CHECK(run("solve " + ex(2) + " " + ex(3) + " --seed 3 --out " + dir.string()) == 0);
    CHECK(fs::exists(dir / "example2" / "report.json"));
    CHECK(run("--kernels scalar solve " + ex(3)) == 0);
    CHECK(run("--kernels bogus solve " + ex(3)) == 2);
    fs::remove_all(dir);
}

TEST_CASE("bound, finite-time and reproduce-example") {
    CHECK(run("bound " + ex(1)) == 0);
    CHECK(run("bound " + ex(3)) == 2);
    const auto out = scratch("ft.json");
    CHECK(run("finite-time " + ex(2) + " --node 3", out.string()) == 0);
    const auto j = nlohmann::json::parse(netls::test::slurp(out.string()));
    REQUIRE(j.size() == 1);
    CHECK(j[0].at("node") == 3);
    CHECK(j[0].at("error_inf").get<double>() <= 1e-6);
    fs::remove(out);
    CHECK(run("reproduce-example 2") == 0);
    CHECK(run("reproduce-example 7") == 2);
}
