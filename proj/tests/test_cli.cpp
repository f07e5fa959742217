#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <doctest.h>

#include "reslab/cli.hpp"
#include "reslab/errors.hpp"

using namespace reslab;
using cli::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto d = fs::temp_directory_path() / ("reslab_cli_test_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

json read_json(const fs::path& p) {
    std::ifstream in(p);
    return json::parse(in);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run(const std::string& cmd, const json& cfg, const fs::path& out) {
    std::ostringstream log;
    return cli::run_command(cmd, cfg, out, log);
}

std::map<std::string, std::string> json_files(const fs::path& dir) {
    std::map<std::string, std::string> m;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.path().extension() == ".json") m[fs::relative(e.path(), dir).string()] = slurp(e.path());
    return m;
}

int tool(const std::string& args) {
    const std::string cmd = std::string(RESLAB_TOOL) + " " + args + " > /dev/null 2>&1";
    const int st = std::system(cmd.c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

const std::map<std::string, json>& small_configs() {
    static const std::map<std::string, json> m{
        {"classify", {{"potential", {{"kind", "exponential"}, {"amplitude", 1.0}}}}},
        {"certify", {{"potential", {{"kind", "exponential"}, {"amplitude", 1.0}}},
                     {"scan", {{"n_re", 8}, {"n_im", 4}, {"order", 64}}}}},
        {"weakres", {{"potential", {{"kind", "exponential"}, {"amplitude", 1.0}}}}},
        {"groundstate", {{"p", 2.0}, {"mass_omegas", {0.5, 1.0, 2.0}}}},
        {"scan", {{"potential", {{"kind", "exponential"}, {"amplitude", 0.01}}},
                  {"rect", {{"n_re", 8}, {"n_im", 4}}},
                  {"order", 64},
                  {"seed", 3}}},
        {"wave", {{"potential", {{"kind", "exponential"}, {"amplitude", 0.05}}}, {"T", 40.0}, {"window", {15.0, 30.0}}}},
    };
    return m;
}

} // namespace

TEST_SUITE("cli") {

TEST_CASE("hashing") {
    CHECK(cli::fnv1a_hex("") == "cbf29ce484222325");
    CHECK(cli::fnv1a_hex("a") == "af63dc4c8601ec8c");
    const json a = {{"x", 1}, {"y", 2}};
    const json b = json::parse(R"({"y":2,"x":1})");
    CHECK(cli::config_hash(a) == cli::config_hash(b));
    CHECK(cli::config_hash(a) != cli::config_hash(json{{"x", 1}, {"y", 3}}));
}

TEST_CASE("potential shorthand") {
    const auto e = cli::potential_shorthand("exponential:1.0");
    CHECK(e == json{{"kind", "exponential"}, {"amplitude", 1.0}});
    const auto cp = cli::parse_potential(e);
    CHECK(cp.base(1.0) == doctest::Approx(std::exp(-1.0)));
    const auto w = cli::parse_potential(cli::potential_shorthand("square_well:2.4674,1.0"));
    CHECK(w.base(0.5) == 2.4674);
    CHECK(cli::potential_shorthand("linearized_nls:2,1,plus")["branch"] == "plus");
    CHECK_THROWS_AS(cli::potential_shorthand("exponential:x"), ConfigError);
    CHECK_THROWS_AS(cli::potential_shorthand("cubic:1"), ConfigError);
    CHECK_THROWS_AS(cli::parse_potential(json{{"kind", "exponential"}, {"amplitude", 1.0}, {"ratee", 2.0}}), ConfigError);
    const auto comp = cli::parse_potential(
        json{{"kind", "centrifugal_composite"}, {"base", {{"kind", "bargmann"}}}, {"alpha", 1.0}});
    CHECK(comp.alpha == 1.0);
}

TEST_CASE("config loading") {
    const auto d = scratch("config");
    std::ofstream(d / "bad.json") << "{\"potential\": ";
    CHECK_THROWS_AS(cli::load_config(d / "bad.json"), ConfigError);
    CHECK_THROWS_AS(cli::load_config(d / "missing.json"), ConfigError);
    std::ofstream(d / "ok.json") << R"({"potential": {"kind": "zero"}})";
    CHECK(cli::load_config(d / "ok.json")["potential"]["kind"] == "zero");
    CHECK_THROWS_AS(cli::check_keys(json{{"a", 1}}, {"b"}, "test"), ConfigError);
}

TEST_CASE("classify writes verdict files") {
    const auto d = scratch("classify");
    CHECK(run("classify", small_configs().at("classify"), d) == cli::ExitCode::ok);
    const auto v = read_json(d / "verdict.json");
    CHECK(v["kind"] == "regular");
    CHECK(fs::exists(d / "solution.csv"));
    CHECK(fs::exists(d / "solution.json"));
    const auto s = read_json(d / "summary.json");
    CHECK(s["toolkit"]["version"] == cli::toolkit_version);
    CHECK(s["config_hash"] == cli::config_hash(small_configs().at("classify")));
    CHECK(s["consistent"] == true);

    const auto t = scratch("threshold");
    CHECK(run("classify", {{"potential", cli::potential_shorthand("square_well:2.4674011002723395,1.0")}}, t) == 0);
    CHECK(read_json(t / "verdict.json")["kind"] == "strong_resonance");
}

TEST_CASE("config errors exit 1") {
    const auto d = scratch("errors");
    CHECK(run("classify", {{"potential", {{"kind", "zero"}}}, {"tolerance", 1e-6}}, d) == cli::ExitCode::usage);
    CHECK(read_json(d / "summary.json").contains("error"));
    CHECK(run("classify", json::object(), d) == cli::ExitCode::usage);
    CHECK(run("nonsense", json::object(), d) == cli::ExitCode::usage);
    CHECK(run("wave", {{"potential", {{"kind", "zero"}}}, {"mesh", {{"cfl", 2.0}}}}, d) == cli::ExitCode::usage);
}

TEST_CASE("weakres records non-contraction as an outcome") {
    const auto d = scratch("weakres");
    CHECK(run("weakres", {{"potential", {{"kind", "exponential"}, {"amplitude", 5.0}}}}, d) == cli::ExitCode::ok);
    const auto s = read_json(d / "summary.json");
    CHECK(s["verdicts"]["weakres"] == "non_contractive");
}

TEST_CASE("every command runs on a small config") {
    for (const auto& [cmd, cfg] : small_configs()) {
        const auto d = scratch("run_" + cmd);
        INFO(cmd);
        CHECK(run(cmd, cfg, d) == cli::ExitCode::ok);
        const auto s = read_json(d / "summary.json");
        CHECK(s["command"] == cmd);
        CHECK(s["consistent"] == true);
    }
}

TEST_CASE("reports are byte-identical across runs") {
    for (const auto& [cmd, cfg] : small_configs()) {
        const auto a = scratch("det_a_" + cmd), b = scratch("det_b_" + cmd);
        REQUIRE(run(cmd, cfg, a) == 0);
        REQUIRE(run(cmd, cfg, b) == 0);
        const auto fa = json_files(a), fb = json_files(b);
        INFO(cmd);
        CHECK(!fa.empty());
        CHECK(fa == fb);
    }
}

TEST_CASE("command-line tool exit codes") {
    const auto d = scratch("tool");
    std::ofstream(d / "bad.json") << "{ not json";
    std::ofstream(d / "unknown.json") << R"({"potential": {"kind": "zero"}, "colour": "red"})";
    const std::string out = " --out " + (d / "out").string();
    CHECK(tool("classify --potential exponential:1.0" + out) == 0);
    CHECK(tool("classify --potential square_well:2.4674,1.0" + out) == 0);
    CHECK(tool("classify --config " + (d / "bad.json").string() + out) == 1);
    CHECK(tool("classify --config " + (d / "unknown.json").string() + out) == 1);
    CHECK(tool("classify --potential bogus:1" + out) == 1);
    CHECK(tool("frobnicate") == 1);
    CHECK(tool("") == 1);
    CHECK(tool("weakres --potential exponential:5.0" + out) == 0);
}

}
