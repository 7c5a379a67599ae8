#include "pathmkv/errors.hpp"
#include "pathmkv/runner.hpp"

#include "doctest.h"

#include <filesystem>
#include <fstream>

using namespace pathmkv;
using nlohmann::json;

namespace {

std::string message_of(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return {};
}

} // namespace

TEST_CASE("config parsing reports locations") {
    CHECK(parse_config(R"({"particles": 10, "model": {"T": 2.0}})")["model"]["T"] == 2.0);
    const std::string unknown = message_of("{\n  \"particles\": 10,\n  \"modle\": {}\n}");
    CHECK(unknown.find("/modle") != std::string::npos);
    CHECK(unknown.find("line 3") != std::string::npos);
    const std::string typed = message_of("{\n  \"model\": {\"M\": -5}\n}");
    CHECK(typed.find("/model/M") != std::string::npos);
    const std::string syntax = message_of("{\n  \"particles\": 10,\n");
    CHECK(syntax.find("line 3") != std::string::npos);
}

TEST_CASE("every schema leaf carries units and a description") {
    std::function<void(const json&)> walk = [&](const json& node) {
        REQUIRE(node.contains("type"));
        CHECK(node.contains("description"));
        if (node.at("type") == "object") {
            for (const auto& [_, child] : node.at("properties").items()) walk(child);
        } else {
            CHECK(node.contains("units"));
        }
    };
    walk(config_schema());
}

TEST_CASE("exit statuses") {
    RunOptions o;
    o.write_files = false;
    o.threads = 1;
    auto r = run("simulate", json{{"particles", 40}, {"model", {{"tag", "ou"}, {"M", 10}}}}, o);
    CHECK(r.status == kExitPass);
    CHECK(r.report["pass"] == true);
    CHECK(r.report["threads"] == 1);

    r = run("no-such-command", json::object(), o);
    CHECK(r.status == kExitConfigError);
    r = run("simulate", json{{"model", {{"tag", "unknown"}}}}, o);
    CHECK(r.status == kExitConfigError);
    r = run("simulate", json{{"initial", {{"kind", "constant"}, {"mean", {1.0, 2.0}}}}}, o);
    CHECK(r.status == kExitConfigError);
    r = run("simulate", json{{"policy", {{"kind", "constant"}, {"u", {5.0}}}}}, o);
    CHECK(r.status == kExitConfigError);

    r = run("simulate", json{{"particles", 20}, {"model", {{"tag", "ou"}, {"lambda", 2000.0}, {"M", 10}}}}, o);
    CHECK(r.status == kExitBlowup);
    CHECK(r.report["error"]["kind"] == "blowup");
    CHECK(r.report["error"].contains("step"));
}

TEST_CASE("report and plot data are written and reproducible") {
    const auto dir = std::filesystem::temp_directory_path() / "pathmkv_runner_test";
    std::filesystem::remove_all(dir);
    RunOptions o;
    o.out_dir = dir;
    o.seed = 11;
    const json cfg{{"particles", 30}, {"model", {{"tag", "mean_field_ou"}, {"M", 20}}}};
    const auto a = run("picard", cfg, o);
    REQUIRE(a.status == kExitPass);
    CHECK(std::filesystem::exists(dir / "report.json"));
    CHECK(std::filesystem::exists(dir / "picard_gaps.csv"));
    std::ifstream in(dir / "report.json");
    const json disk = json::parse(in);
    CHECK(disk["seed"] == 11);
    const auto b = run("picard", cfg, o);
    CHECK(a.report["checks"][0]["details"] == b.report["checks"][0]["details"]);
    std::filesystem::remove_all(dir);
}

TEST_CASE("hjb-residual on analytic candidates") {
    RunOptions o;
    o.write_files = false;
    for (const char* cand : {"ou_linear_reward", "controlled_linear", "constant"}) {
        const auto r = run("hjb-residual", json{{"hjb", {{"candidate", cand}}}}, o);
        REQUIRE(r.status == kExitPass);
        CHECK(std::abs(r.report["checks"][0]["details"]["residual"].get<double>()) <= 1e-12);
    }
    const auto r = run("hjb-residual", json{{"hjb", {{"candidate", "ou_linear_reward_x2"}}}}, o);
    CHECK(std::abs(r.report["checks"][0]["details"]["residual"].get<double>()) > 1e-3);
}
