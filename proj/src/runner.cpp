#include "pathmkv/runner.hpp"

#include "pathmkv/acceptance.hpp"
#include "pathmkv/errors.hpp"
#include "pathmkv/hjb.hpp"
#include "pathmkv/mkv_sde.hpp"
#include "pathmkv/models.hpp"
#include "pathmkv/parallel.hpp"
#include "pathmkv/pathspace.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <thread>

#ifndef PATHMKV_VERSION
#define PATHMKV_VERSION "0.1.0"
#endif

namespace pathmkv {

using nlohmann::json;

std::string version_string() { return PATHMKV_VERSION; }

const std::vector<std::string>& subcommands() {
    static const std::vector<std::string> names{
        "simulate",    "picard",   "yosida-converge", "particles-converge", "wasserstein",       "ito-check",
        "deriv-check", "dpp-check", "law-check",      "hjb-residual",       "hamiltonian-forms", "suite"};
    return names;
}

namespace {

json leaf(const char* type, const char* units, const char* description) {
    return {{"type", type}, {"units", units}, {"description", description}};
}

json object_node(json properties, const char* description) {
    return {{"type", "object"}, {"description", description}, {"properties", std::move(properties)}};
}

json model_node() {
    return object_node(
        {{"tag", leaf("string", "none", "built-in model tag")},
         {"T", leaf("number", "time", "horizon")},
         {"M", leaf("integer", "steps", "number of time steps")},
         {"d", leaf("integer", "dimension", "dimension of the state space H")},
         {"dK", leaf("integer", "dimension", "dimension of the noise space K")},
         {"lambda", leaf("number", "1/time", "leading eigenvalue of A; mode k has lambda (k+1)^2")},
         {"sigma", leaf("number", "state/sqrt(time)", "diffusion level")},
         {"theta", leaf("number", "1/time", "mean-reversion or mean-field strength")}},
        "model selection and parameters");
}

} // namespace

const json& config_schema() {
    static const json schema = [] {
        json s = object_node(
            {{"seed", leaf("integer", "none", "root seed")},
             {"threads", leaf("integer", "count", "worker threads, 0 for all hardware threads")},
             {"particles", leaf("integer", "count", "number of particles N")},
             {"model", model_node()},
             {"initial", object_node({{"kind", leaf("string", "none", "constant, gaussian or alternating")},
                                      {"mean", leaf("array<number>", "state", "mean or constant value")},
                                      {"sd", leaf("number", "state", "standard deviation per coordinate")},
                                      {"a", leaf("array<number>", "state", "first point of the two-point law")},
                                      {"b", leaf("array<number>", "state", "second point of the two-point law")}},
                                     "initial law xi")},
             {"policy", object_node({{"kind", leaf("string", "none", "zero or constant")},
                                     {"u", leaf("array<number>", "control", "constant action")}},
                                    "control policy")},
             {"simulate", object_node({{"t0", leaf("number", "time", "start time")},
                                       {"export_csv", leaf("boolean", "none", "write per-particle CSV files")}},
                                      "simulate subcommand")},
             {"picard", object_node({{"tol", leaf("number", "state", "S2 gap accepted as converged")},
                                     {"max_iter", leaf("integer", "count", "maps per window before giving up")},
                                     {"split_windows", leaf("boolean", "none", "split the horizon into contraction windows")},
                                     {"window", leaf("number", "time", "window length override, 0 for the a-priori value")}},
                                    "picard subcommand")},
             {"yosida", object_node({{"particles", leaf("integer", "count", "particles")},
                                     {"ladder", leaf("array<number>", "1/time", "Yosida parameters n")},
                                     {"model", model_node()}},
                                    "yosida-converge subcommand")},
             {"particles_convergence",
              object_node({{"ladder", leaf("array<integer>", "count", "particle counts")},
                           {"reference", leaf("integer", "count", "reference ensemble size")},
                           {"model", model_node()}},
                          "particles-converge subcommand")},
             {"wasserstein", object_node({{"instances", leaf("integer", "count", "brute-force comparisons")},
                                          {"triples", leaf("integer", "count", "metric-axiom triples")},
                                          {"max_atoms", leaf("integer", "count", "largest support in brute force")}},
                                         "wasserstein subcommand")},
             {"ito", object_node({{"particles", leaf("integer", "count", "particles")},
                                  {"d", leaf("integer", "dimension", "state dimension")},
                                  {"steps", leaf("integer", "steps", "time steps")},
                                  {"T", leaf("number", "time", "horizon")},
                                  {"t", leaf("number", "time", "left end of the increment")},
                                  {"s", leaf("number", "time", "right end of the increment")},
                                  {"batches", leaf("integer", "count", "batches for the standard error")},
                                  {"discretization_factor", leaf("number", "1/time", "gate slack per unit dt")}},
                                 "ito-check subcommand")},
             {"derivatives", object_node({{"eps", leaf("number", "state", "bump size")},
                                          {"t", leaf("number", "time", "evaluation time")},
                                          {"atoms", leaf("integer", "count", "atoms of the test measure")}},
                                         "deriv-check subcommand")},
             {"dpp", object_node({{"particles", leaf("integer", "count", "particles per replica")},
                                  {"replicas", leaf("integer", "count", "independent replicas")},
                                  {"branching", leaf("integer", "count", "continuation copies per particle")},
                                  {"times", leaf("array<number>", "time", "split times s")},
                                  {"model", model_node()}},
                                 "dpp-check subcommand")},
             {"law", object_node({{"particles", leaf("integer", "count", "particles per replica")},
                                  {"replicas", leaf("integer", "count", "independent replicas")},
                                  {"model", model_node()}},
                                 "law-check subcommand")},
             {"hjb", object_node({{"candidate", leaf("string", "none", "candidate solution tag")},
                                  {"t", leaf("number", "time", "evaluation time")},
                                  {"atoms", leaf("integer", "count", "atoms of mu sampled from the initial law")},
                                  {"form", leaf("string", "none", "esssup, maps or bruteforce")}},
                                 "hjb-residual subcommand")},
             {"hamiltonian", object_node({{"instances", leaf("integer", "count", "random three-form instances")},
                                          {"investment_instances", leaf("integer", "count", "random investment instances")}},
                                         "hamiltonian-forms subcommand")},
             {"suite", object_node({{"criteria", leaf("array<integer>", "none", "subset of criteria to run")}},
                                   "suite subcommand")}},
            "experiment configuration");
        return s;
    }();
    return schema;
}

namespace {

bool type_matches(const json& v, const std::string& type) {
    if (type == "number") return v.is_number();
    if (type == "integer") return v.is_number_integer() && !(v.is_number_integer() && v.get<std::int64_t>() < 0);
    if (type == "boolean") return v.is_boolean();
    if (type == "string") return v.is_string();
    if (type == "object") return v.is_object();
    if (type.rfind("array<", 0) == 0) {
        if (!v.is_array()) return false;
        const std::string inner = type.substr(6, type.size() - 7);
        for (const auto& x : v)
            if (!type_matches(x, inner)) return false;
        return true;
    }
    return false;
}

void validate_node(const json& value, const json& schema, const std::string& path) {
    const std::string type = schema.at("type").get<std::string>();
    if (!type_matches(value, type)) {
        throw ConfigError("config field '" + (path.empty() ? "/" : path) + "': expected " + type +
                          (type == "integer" ? " (non-negative)" : "") + ", got " + value.dump());
    }
    if (type != "object") return;
    const json& props = schema.at("properties");
    for (const auto& [key, v] : value.items()) {
        if (!props.contains(key)) {
            std::string allowed;
            for (const auto& [k, _] : props.items()) allowed += (allowed.empty() ? "" : ", ") + k;
            throw ConfigError("config field '" + path + "/" + key + "': unknown key (allowed: " + allowed + ")");
        }
        validate_node(v, props.at(key), path + "/" + key);
    }
}

std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t offset) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

} // namespace

void validate_config(const json& config) { validate_node(config, config_schema(), ""); }

json parse_config(const std::string& text) {
    json config;
    try {
        config = json::parse(text);
    } catch (const json::parse_error& e) {
        const auto [line, col] = line_column(text, e.byte == 0 ? 0 : e.byte - 1);
        throw ConfigError("config syntax error at line " + std::to_string(line) + ", column " + std::to_string(col) +
                          ": " + e.what());
    }
    try {
        validate_config(config);
    } catch (const ConfigError& e) {
        // point at the first occurrence of the offending key
        const std::string msg = e.what();
        const auto open = msg.find('\'');
        const auto close = msg.find('\'', open + 1);
        std::string where;
        if (open != std::string::npos && close != std::string::npos) {
            const std::string path = msg.substr(open + 1, close - open - 1);
            const std::string key = path.substr(path.find_last_of('/') + 1);
            const auto pos = text.find("\"" + key + "\"");
            if (!key.empty() && pos != std::string::npos) {
                where = " (line " + std::to_string(line_column(text, pos).first) + ")";
            }
        }
        throw ConfigError(msg + where);
    }
    return config;
}

namespace {

template <class T>
T get_or(const json& obj, const char* key, T fallback) {
    return obj.is_object() && obj.contains(key) ? obj.at(key).get<T>() : fallback;
}

json block(const json& config, const char* name) {
    return config.contains(name) ? config.at(name) : json::object();
}

ModelParams params_from(const json& m) {
    ModelParams p;
    p.T = get_or(m, "T", p.T);
    p.M = get_or(m, "M", p.M);
    p.d = get_or(m, "d", p.d);
    p.dK = get_or(m, "dK", p.dK);
    p.lambda = get_or(m, "lambda", p.lambda);
    p.sigma = get_or(m, "sigma", p.sigma);
    p.theta = get_or(m, "theta", p.theta);
    return p;
}

ModelSpec model_from(const json& config, const std::string& default_tag) {
    const json m = block(config, "model");
    const std::string tag = get_or<std::string>(m, "tag", default_tag);
    const ModelParams p = params_from(m);
    if (tag == "ou_linear_reward") return ou_linear_reward_model(p.T, p.M, p.d, p.lambda, p.sigma);
    return builtin_model(tag, p);
}

HilbertVec vec_of(const json& v, std::size_t d, const char* field) {
    const auto x = v.get<std::vector<double>>();
    if (x.size() != d) {
        throw ConfigError(std::string("config field '") + field + "': expected " + std::to_string(d) +
                          " entries (the model dimension), got " + std::to_string(x.size()));
    }
    return HilbertVec(x);
}

InitialLaw initial_from(const json& config, std::size_t d) {
    const json ini = block(config, "initial");
    const std::string kind = get_or<std::string>(ini, "kind", "gaussian");
    const HilbertVec mean = ini.contains("mean") ? vec_of(ini.at("mean"), d, "/initial/mean")
                                                 : HilbertVec(std::vector<double>(d, 0.5));
    if (kind == "constant") return InitialLaw::constant(mean);
    if (kind == "gaussian") return InitialLaw::gaussian(mean, get_or(ini, "sd", 0.3));
    if (kind == "alternating") {
        const HilbertVec a = ini.contains("a") ? vec_of(ini.at("a"), d, "/initial/a") : HilbertVec(std::vector<double>(d, -1.0));
        const HilbertVec b = ini.contains("b") ? vec_of(ini.at("b"), d, "/initial/b") : HilbertVec(std::vector<double>(d, 1.0));
        return InitialLaw::alternating(a, b);
    }
    throw ConfigError("config field '/initial/kind': unknown kind '" + kind + "' (constant, gaussian, alternating)");
}

ControlPolicy policy_from(const json& config, const ModelSpec& model) {
    const json pol = block(config, "policy");
    const std::string kind = get_or<std::string>(pol, "kind", "zero");
    if (kind == "zero") return ControlPolicy();
    if (kind == "constant") {
        const ControlAction u{get_or<std::vector<double>>(pol, "u", {0.0})};
        if (!model.actions.contains(u)) throw ConfigError("config field '/policy/u': action is not in U of the model");
        return ControlPolicy::constant(u, "constant");
    }
    throw ConfigError("config field '/policy/kind': unknown kind '" + kind + "' (zero, constant)");
}

/// Block parameters with the top-level model and particle count as fallbacks.
json check_params(const json& config, const char* name, bool takes_model, bool takes_particles) {
    json p = block(config, name);
    if (takes_model && !p.contains("model") && config.contains("model")) {
        json m = config.at("model");
        m.erase("tag");
        p["model"] = m;
    }
    if (takes_particles && !p.contains("particles") && config.contains("particles")) p["particles"] = config.at("particles");
    return p;
}

json to_json(const CheckResult& r) {
    return {{"name", r.name}, {"pass", r.pass}, {"seconds", r.seconds}, {"summary", r.summary}, {"details", r.details}};
}

template <class F>
CheckResult timed(F&& f) {
    const auto start = std::chrono::steady_clock::now();
    CheckResult r = f();
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

void write_text(const std::filesystem::path& p, const std::string& s) {
    std::ofstream out(p);
    if (!out) throw Error("cannot write " + p.string());
    out << s;
}

void write_rungs_csv(const std::filesystem::path& p, const json& rungs) {
    if (!rungs.is_array() || rungs.empty()) return;
    std::string csv;
    std::vector<std::string> keys;
    for (const auto& [k, _] : rungs.front().items()) keys.push_back(k);
    for (std::size_t i = 0; i < keys.size(); ++i) csv += (i ? "," : "") + keys[i];
    csv += "\n";
    for (const auto& row : rungs) {
        for (std::size_t i = 0; i < keys.size(); ++i) {
            const json& v = row.at(keys[i]);
            csv += (i ? "," : "") + (v.is_number_float() ? format_double(v.get<double>()) : v.dump());
        }
        csv += "\n";
    }
    write_text(p, csv);
}

struct Context {
    const json& config;
    const RunOptions& opts;
    std::uint64_t seed;
    std::vector<CheckResult> results;
    std::map<std::string, std::function<void()>> writers;
};

void cmd_simulate(Context& c) {
    const ModelSpec model = model_from(c.config, "mean_field_ou");
    const InitialLaw init = initial_from(c.config, model.space.d);
    const ControlPolicy policy = policy_from(c.config, model);
    const json sim = block(c.config, "simulate");
    IntegrationOptions io;
    io.particles = get_or<std::size_t>(c.config, "particles", 1000);
    io.seed = c.seed;
    const double t0 = get_or(sim, "t0", 0.0);
    auto e = std::make_shared<ParticleEnsemble>();
    CheckResult r = timed([&] {
        *e = integrate(model, init, policy, t0, io);
        CheckResult out;
        out.name = "simulate";
        const std::size_t M = model.grid.steps();
        const HilbertVec mT = mean_at_node(e->law(), M);
        out.details = {{"model", model.tag},       {"particles", e->size()},
                       {"steps", M},               {"terminal_mean", mT.coords()},
                       {"s2_norm", s2_norm(*e)},   {"apriori_moment_bound", apriori_constants(model).moment}};
        out.pass = true;
        out.summary = "integrated " + std::to_string(e->size()) + " particles over " + std::to_string(M) + " steps";
        return out;
    });
    c.results.push_back(r);
    const bool export_csv = get_or(sim, "export_csv", false);
    c.writers["mean_path.csv"] = [e, &c] {
        std::string csv = "t";
        for (std::size_t k = 0; k < e->dim; ++k) csv += ",mean_" + std::to_string(k);
        csv += ",second_moment\n";
        const MeasureView law = e->law();
        for (std::size_t j = e->start_node; j <= e->end_node; ++j) {
            const HilbertVec m = mean_at_node(law, j);
            double second = 0.0;
            for (std::size_t i = 0; i < e->size(); ++i) {
                const auto x = e->particles[i].at(j);
                for (double v : x) second += v * v;
            }
            second /= static_cast<double>(e->size());
            csv += format_double(e->grid.time(j));
            for (std::size_t k = 0; k < e->dim; ++k) csv += "," + format_double(m[k]);
            csv += "," + format_double(second) + "\n";
        }
        write_text(c.opts.out_dir / "mean_path.csv", csv);
    };
    if (export_csv) c.writers["ensemble"] = [e, &c] { export_ensemble(*e, c.opts.out_dir / "ensemble"); };
}

void cmd_picard(Context& c) {
    const ModelSpec model = model_from(c.config, "mean_field_ou");
    const InitialLaw init = initial_from(c.config, model.space.d);
    const ControlPolicy policy = policy_from(c.config, model);
    const json pc = block(c.config, "picard");
    IntegrationOptions io;
    io.particles = get_or<std::size_t>(c.config, "particles", 500);
    io.seed = c.seed;
    PicardOptions po;
    po.tol = get_or(pc, "tol", po.tol);
    po.max_iter = get_or(pc, "max_iter", po.max_iter);
    po.split_windows = get_or(pc, "split_windows", po.split_windows);
    po.window = get_or(pc, "window", po.window);
    auto rep = std::make_shared<PicardReport>();
    CheckResult r = timed([&] {
        const ParticleEnsemble fixed = integrate_picard(model, init, policy, 0.0, io, po, rep.get());
        const ParticleEnsemble stepped = integrate(model, init, policy, 0.0, io);
        const double gap = s2_distance(fixed, stepped);
        CheckResult out;
        out.name = "picard";
        out.details = {{"iterations", rep->iterations}, {"final_gap", rep->final_gap}, {"gaps", rep->gaps},
                       {"window_nodes", rep->window_nodes}, {"distance_to_stepping", gap},
                       {"contraction_window", apriori_constants(model).window}};
        out.pass = rep->final_gap <= po.tol && gap <= 100.0 * po.tol;
        out.summary = std::to_string(rep->iterations) + " maps, final gap " + format_double(rep->final_gap) +
                      ", distance to the stepping solution " + format_double(gap);
        return out;
    });
    c.results.push_back(r);
    c.writers["picard_gaps.csv"] = [rep, &c] {
        std::string csv = "map,gap\n";
        for (std::size_t k = 0; k < rep->gaps.size(); ++k) csv += std::to_string(k + 1) + "," + format_double(rep->gaps[k]) + "\n";
        write_text(c.opts.out_dir / "picard_gaps.csv", csv);
    };
}

/// The candidate fixes the model; model.tag in the config is ignored here.
void cmd_hjb(Context& c) {
    const json h = block(c.config, "hjb");
    const std::string cand = get_or<std::string>(h, "candidate", "ou_linear_reward");
    const std::string base = cand.size() > 3 && cand.compare(cand.size() - 3, 3, "_x2") == 0 ? cand.substr(0, cand.size() - 3) : cand;
    const json m = block(c.config, "model");
    const ModelParams p = params_from(m);
    ModelSpec model;
    if (base == "ou_linear_reward") {
        model = ou_linear_reward_model(p.T, p.M, p.d, p.lambda, p.sigma);
    } else if (base == "controlled_linear") {
        model = controlled_linear_model(p);
    } else if (base == "constant") {
        model = frozen_model(p);
    } else {
        throw ConfigError("config field '/hjb/candidate': unknown candidate '" + cand +
                          "' (ou_linear_reward, controlled_linear, constant, optionally with _x2)");
    }
    const CandidateSolution w = candidates::by_tag(cand, p.d, p.lambda, p.T);
    const InitialLaw init = initial_from(c.config, p.d);
    const std::size_t atoms = get_or<std::size_t>(h, "atoms", 8);
    if (atoms == 0) throw ConfigError("config field '/hjb/atoms': must be >= 1");
    std::vector<PathGrid> paths;
    for (std::size_t i = 0; i < atoms; ++i) paths.push_back(init.sample(i, c.seed, model.grid));
    const EmpiricalPathMeasure mu = EmpiricalPathMeasure::uniform(std::move(paths));
    const double t = get_or(h, "t", 0.3);
    const HamiltonianForm form = hamiltonian_form_from_string(get_or<std::string>(h, "form", "esssup"));
    c.results.push_back(timed([&] {
        const HjbResidual res = hjb_residual(w, model, t, mu.view(), form);
        CheckResult out;
        out.name = "hjb_residual";
        out.details = {{"candidate", cand},          {"model", model.tag},          {"t", t},
                       {"atoms", atoms},             {"form", to_string(form)},     {"residual", res.residual},
                       {"terminal_gap", res.terminal_gap}, {"dt", res.dt},          {"a_star_term", res.a_star_term},
                       {"hamiltonian", res.hamiltonian},   {"argmax", res.argmax}};
        // an evaluation tool for candidates: reported without a verdict
        out.pass = std::isfinite(res.residual) && std::isfinite(res.terminal_gap);
        out.summary = "residual " + format_double(res.residual) + ", terminal gap " + format_double(res.terminal_gap);
        return out;
    }));
}

void add_check(Context& c, const std::function<CheckResult(const json&, std::uint64_t)>& check, const json& params,
               const char* csv_name = nullptr, const char* rungs_key = "rungs") {
    const CheckResult r = timed([&] { return check(params, c.seed); });
    c.results.push_back(r);
    if (csv_name != nullptr && r.details.contains(rungs_key)) {
        const json rungs = r.details.at(rungs_key);
        const std::string name = csv_name;
        c.writers[name] = [rungs, name, &c] { write_rungs_csv(c.opts.out_dir / name, rungs); };
    }
}

void cmd_suite(Context& c) {
    const json s = block(c.config, "suite");
    const std::vector<int> only = get_or<std::vector<int>>(s, "criteria", {});
    for (const auto& crit : acceptance_criteria()) {
        if (!only.empty() && std::find(only.begin(), only.end(), crit.id) == only.end()) continue;
        CheckResult r = run_criterion(crit, c.seed);
        r.details["criterion"] = crit.id;
        r.details["budget_seconds"] = crit.budget_seconds;
        c.results.push_back(std::move(r));
    }
}

} // namespace

RunOutcome run(const std::string& subcommand, const json& config, const RunOptions& opts) {
    RunOutcome outcome;
    const auto wall_start = std::chrono::steady_clock::now();
    json& report = outcome.report;
    report["subcommand"] = subcommand;
    report["version"] = version_string();
    report["config"] = config;
    auto finish = [&](int status) {
        outcome.status = status;
        report["exit_status"] = status;
        report["wall_time_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
        if (opts.write_files) {
            try {
                std::filesystem::create_directories(opts.out_dir);
                write_text(opts.out_dir / "report.json", report.dump(2) + "\n");
            } catch (const std::exception& e) {
                report["write_error"] = e.what();
                outcome.status = kExitRuntimeError;
            }
        }
        return outcome;
    };

    try {
        validate_config(config);
        if (std::find(subcommands().begin(), subcommands().end(), subcommand) == subcommands().end()) {
            throw ConfigError("unknown subcommand '" + subcommand + "'");
        }
        const std::uint64_t seed = opts.seed ? *opts.seed : get_or<std::uint64_t>(config, "seed", kSuiteSeed);
        std::size_t threads = opts.threads ? *opts.threads : get_or<std::size_t>(config, "threads", 0);
        if (threads == 0) threads = std::max<std::size_t>(1, std::thread::hardware_concurrency());
        set_thread_count(threads);
        report["seed"] = seed;
        report["threads"] = threads;

        Context c{config, opts, seed, {}, {}};
        if (subcommand == "simulate") {
            cmd_simulate(c);
        } else if (subcommand == "picard") {
            cmd_picard(c);
        } else if (subcommand == "yosida-converge") {
            add_check(c, checks::yosida, check_params(config, "yosida", true, true), "yosida.csv");
        } else if (subcommand == "particles-converge") {
            add_check(c, checks::particles_convergence, check_params(config, "particles_convergence", true, false),
                      "particles.csv");
        } else if (subcommand == "wasserstein") {
            add_check(c, checks::wasserstein, check_params(config, "wasserstein", false, false));
        } else if (subcommand == "ito-check") {
            add_check(c, checks::ito, check_params(config, "ito", false, true), "ito.csv", "results");
        } else if (subcommand == "deriv-check") {
            add_check(c, checks::measure_derivative, check_params(config, "derivatives", false, false));
        } else if (subcommand == "dpp-check") {
            add_check(c, checks::dpp, check_params(config, "dpp", true, true), "dpp.csv", "splits");
        } else if (subcommand == "law-check") {
            add_check(c, checks::law_invariance, check_params(config, "law", true, true), "law.csv", "families");
        } else if (subcommand == "hjb-residual") {
            cmd_hjb(c);
        } else if (subcommand == "hamiltonian-forms") {
            const json h = block(config, "hamiltonian");
            json forms = json::object(), inv = json::object();
            if (h.contains("instances")) forms["instances"] = h.at("instances");
            if (h.contains("investment_instances")) inv["instances"] = h.at("investment_instances");
            add_check(c, checks::hamiltonian_forms, forms);
            add_check(c, checks::investment, inv);
        } else if (subcommand == "suite") {
            cmd_suite(c);
        }

        json results = json::array();
        bool all = !c.results.empty();
        for (const auto& r : c.results) {
            results.push_back(to_json(r));
            all = all && r.pass;
        }
        report["checks"] = results;
        report["pass"] = all;
        if (opts.write_files) {
            std::filesystem::create_directories(opts.out_dir);
            for (const auto& [name, w] : c.writers) w();
        }
        return finish(all ? kExitPass : kExitCheckFailed);
    } catch (const ConfigError& e) {
        report["error"] = {{"kind", "config"}, {"message", e.what()}};
        report["pass"] = false;
        return finish(kExitConfigError);
    } catch (const BlowupError& e) {
        report["error"] = {{"kind", "blowup"}, {"message", e.what()}, {"step", e.step()}, {"particle", e.particle()}};
        report["pass"] = false;
        return finish(kExitBlowup);
    } catch (const std::exception& e) {
        report["error"] = {{"kind", "runtime"}, {"message", e.what()}};
        report["pass"] = false;
        return finish(kExitRuntimeError);
    }
}

} // namespace pathmkv
