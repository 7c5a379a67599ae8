#include "pathmkv/errors.hpp"
#include "pathmkv/runner.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

struct Flags {
    std::string config;
    std::string out = "out";
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> threads;
};

int execute(const std::string& sub, const Flags& f) {
    nlohmann::json config = nlohmann::json::object();
    pathmkv::RunOptions opts;
    opts.out_dir = f.out;
    opts.seed = f.seed;
    opts.threads = f.threads;
    if (!f.config.empty()) {
        std::ifstream in(f.config);
        if (!in) {
            std::cerr << "error: cannot open config file " << f.config << "\n";
            return pathmkv::kExitConfigError;
        }
        std::stringstream ss;
        ss << in.rdbuf();
        try {
            config = pathmkv::parse_config(ss.str());
        } catch (const pathmkv::ConfigError& e) {
            std::cerr << "error: " << f.config << ": " << e.what() << "\n";
            return pathmkv::kExitConfigError;
        }
    }
    const pathmkv::RunOutcome r = pathmkv::run(sub, config, opts);
    if (r.report.contains("checks")) {
        for (const auto& c : r.report.at("checks")) {
            std::cout << (c.at("pass").get<bool>() ? "PASS " : "FAIL ") << c.at("name").get<std::string>() << "  "
                      << c.at("summary").get<std::string>() << "\n";
        }
    }
    if (r.report.contains("error")) {
        const auto& e = r.report.at("error");
        std::cerr << "error (" << e.at("kind").get<std::string>() << "): " << e.at("message").get<std::string>() << "\n";
    }
    std::cout << "report: " << (opts.out_dir / "report.json").string() << "\n";
    return r.status;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Particle solver and numerical checks for controlled path-dependent McKean-Vlasov SDEs"};
    app.set_version_flag("--version", pathmkv::version_string());
    app.require_subcommand(1);

    Flags flags;
    std::string chosen;
    for (const auto& name : pathmkv::subcommands()) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", flags.config, "JSON configuration file")->check(CLI::ExistingFile);
        sub->add_option("--out", flags.out, "output directory for report.json and CSV data");
        sub->add_option("--seed", flags.seed, "root seed, overrides the config");
        sub->add_option("--threads", flags.threads, "worker threads, 0 for all hardware threads");
        sub->callback([&chosen, name] { chosen = name; });
    }
    auto* schema = app.add_subcommand("schema", "print the configuration schema");
    schema->callback([&chosen] { chosen = "schema"; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : pathmkv::kExitConfigError;
    }
    if (chosen == "schema") {
        std::cout << pathmkv::config_schema().dump(2) << "\n";
        return 0;
    }
    return execute(chosen, flags);
}
