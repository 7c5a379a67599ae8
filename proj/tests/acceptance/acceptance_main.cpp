// Acceptance battery: one PASS/FAIL line per criterion. Criteria 1 to 13 run
// in process; criterion 14 runs the command-line `suite` and compares its
// report with the in-process results.

#include "pathmkv/acceptance.hpp"
#include "pathmkv/parallel.hpp"

#include "json.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#ifndef PATHMKV_CLI_PATH
#error "PATHMKV_CLI_PATH must name the command-line runner"
#endif

namespace {

/// Wall-time limit of the full suite.
constexpr double kSuiteBudgetSeconds = 600.0;
/// Thread count used for the command-line run, different from the in-process one.
constexpr int kSuiteThreads = 2;

void print_line(int id, const std::string& name, bool pass, double seconds, const std::string& summary) {
    std::printf("[%s] criterion %2d %-22s %8.2fs  %s\n", pass ? "PASS" : "FAIL", id, name.c_str(), seconds, summary.c_str());
    std::fflush(stdout);
}

} // namespace

int main(int argc, char** argv) {
    using nlohmann::json;
    namespace fs = std::filesystem;
    const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "pathmkv_acceptance";
    fs::create_directories(work);

    pathmkv::set_thread_count(1);
    std::map<std::string, json> in_process;
    std::map<std::string, bool> in_process_pass;
    int failures = 0;
    for (const auto& c : pathmkv::acceptance_criteria()) {
        const pathmkv::CheckResult r = pathmkv::run_criterion(c, pathmkv::kSuiteSeed);
        in_process[r.name] = r.details;
        in_process_pass[r.name] = r.pass;
        if (!r.pass) ++failures;
        print_line(c.id, c.name, r.pass, r.seconds, r.summary);
    }

    const fs::path out = work / "suite";
    const std::string cmd = std::string("\"") + PATHMKV_CLI_PATH + "\" suite --threads " + std::to_string(kSuiteThreads) +
                            " --seed " + std::to_string(pathmkv::kSuiteSeed) + " --out \"" + out.string() + "\" > \"" +
                            (work / "suite.log").string() + "\" 2>&1";
    const auto start = std::chrono::steady_clock::now();
    const int raw = std::system(cmd.c_str());
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const int status = (raw != -1 && WIFEXITED(raw)) ? WEXITSTATUS(raw) : -1;

    bool deterministic = false;
    std::string note;
    try {
        std::ifstream in(out / "report.json");
        const json report = json::parse(in);
        std::size_t matched = 0;
        bool same = report.at("checks").size() == in_process.size();
        for (const auto& c : report.at("checks")) {
            const std::string name = c.at("name").get<std::string>();
            json details = c.at("details");
            details.erase("criterion");
            details.erase("budget_seconds");
            const auto it = in_process.find(name);
            if (it != in_process.end() && it->second == details && in_process_pass[name] == c.at("pass").get<bool>()) {
                ++matched;
            } else {
                same = false;
                note += " mismatch:" + name;
            }
        }
        deterministic = same;
        note = std::to_string(matched) + "/" + std::to_string(in_process.size()) + " reports identical across runs and thread counts" + note;
    } catch (const std::exception& e) {
        note = std::string("no readable report: ") + e.what();
    }
    const bool pass14 = status == 0 && deterministic && wall < kSuiteBudgetSeconds;
    if (!pass14) ++failures;
    print_line(14, "suite_cli", pass14, wall, "exit " + std::to_string(status) + ", " + note);

    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
