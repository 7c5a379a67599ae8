#include "pathmkv/acceptance.hpp"
#include "pathmkv/errors.hpp"
#include "pathmkv/hjb.hpp"
#include "pathmkv/measure.hpp"
#include "pathmkv/mkv_sde.hpp"
#include "pathmkv/models.hpp"
#include "pathmkv/parallel.hpp"
#include "pathmkv/runner.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>

namespace py = pybind11;
using nlohmann::json;

namespace {

// JSON crosses the boundary as text; the Python side wraps it with json.loads/dumps.

py::array_t<double> paths_array(const pathmkv::ParticleEnsemble& e) {
    const std::size_t nodes = e.grid.nodes();
    py::array_t<double> out({e.size(), nodes, e.dim});
    auto* dst = out.mutable_data();
    for (std::size_t i = 0; i < e.size(); ++i) {
        const auto& data = e.particles[i].data();
        std::memcpy(dst + i * nodes * e.dim, data.data(), data.size() * sizeof(double));
    }
    return out;
}

std::vector<pathmkv::PathGrid> constant_paths(const std::vector<std::vector<double>>& points, const pathmkv::TimeGrid& g) {
    std::vector<pathmkv::PathGrid> paths;
    for (const auto& x : points) paths.push_back(pathmkv::PathGrid::constant(g, pathmkv::HilbertVec(x)));
    return paths;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Particle solver and numerical checks for controlled path-dependent McKean-Vlasov SDEs";

    // translators run newest first, so the base class goes first
    py::register_exception<pathmkv::Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<pathmkv::ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<pathmkv::DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<pathmkv::BlowupError>(m, "BlowupError", PyExc_ArithmeticError);
    py::register_exception<pathmkv::CapacityError>(m, "CapacityError", PyExc_MemoryError);

    m.def("version", &pathmkv::version_string);
    m.def("subcommands", &pathmkv::subcommands);
    m.def("builtin_models", &pathmkv::builtin_model_tags);
    m.def("set_threads", &pathmkv::set_thread_count, py::arg("threads"));
    m.def("config_schema_json", [] { return pathmkv::config_schema().dump(); });
    m.def("parse_config_json", [](const std::string& text) { return pathmkv::parse_config(text).dump(); },
          py::arg("text"));

    m.def(
        "run_json",
        [](const std::string& subcommand, const std::string& config, const std::string& out_dir,
           std::optional<std::uint64_t> seed, std::optional<std::size_t> threads, bool write_files) {
            pathmkv::RunOptions o;
            o.out_dir = out_dir;
            o.seed = seed;
            o.threads = threads;
            o.write_files = write_files;
            pathmkv::RunOutcome r;
            {
                py::gil_scoped_release release;
                r = pathmkv::run(subcommand, json::parse(config), o);
            }
            return py::make_tuple(r.status, r.report.dump());
        },
        py::arg("subcommand"), py::arg("config") = "{}", py::arg("out_dir") = "out", py::arg("seed") = py::none(),
        py::arg("threads") = py::none(), py::arg("write_files") = false);

    m.def("criteria", [] {
        py::list out;
        for (const auto& c : pathmkv::acceptance_criteria()) out.append(py::make_tuple(c.id, c.name, c.budget_seconds));
        return out;
    });
    m.def(
        "run_criterion_json",
        [](int id, std::uint64_t seed) {
            for (const auto& c : pathmkv::acceptance_criteria()) {
                if (c.id != id) continue;
                pathmkv::CheckResult r;
                {
                    py::gil_scoped_release release;
                    r = pathmkv::run_criterion(c, seed);
                }
                return json{{"name", r.name}, {"pass", r.pass}, {"seconds", r.seconds}, {"summary", r.summary},
                            {"details", r.details}}
                    .dump();
            }
            throw pathmkv::ConfigError("no criterion with id " + std::to_string(id));
        },
        py::arg("id"), py::arg("seed") = pathmkv::kSuiteSeed);

    m.def(
        "simulate",
        [](const std::string& model_tag, std::size_t particles, std::uint64_t seed, double T, std::size_t M,
           std::size_t d, double lambda, double sigma, double theta, double x0) {
            pathmkv::ModelParams p;
            p.T = T;
            p.M = M;
            p.d = d;
            p.dK = d;
            p.lambda = lambda;
            p.sigma = sigma;
            p.theta = theta;
            const pathmkv::ModelSpec model = pathmkv::builtin_model(model_tag, p);
            pathmkv::ParticleEnsemble e;
            {
                py::gil_scoped_release release;
                e = pathmkv::integrate(model, pathmkv::InitialLaw::constant(pathmkv::HilbertVec(std::vector<double>(d, x0))),
                                       pathmkv::ControlPolicy(), 0.0, particles, seed);
            }
            return paths_array(e);
        },
        "Particle paths as an array of shape (particles, M + 1, d).", py::arg("model") = "ou",
        py::arg("particles") = 1000, py::arg("seed") = 0, py::arg("T") = 1.0, py::arg("M") = 100, py::arg("d") = 1,
        py::arg("lam") = -1.0, py::arg("sigma") = 0.5, py::arg("theta") = 1.0, py::arg("x0") = 0.0);

    m.def(
        "wasserstein2_points",
        [](const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b) {
            if (a.empty() || b.empty()) throw pathmkv::ConfigError("point clouds must be non-empty");
            const pathmkv::TimeGrid g(1.0, 1);
            const auto mu = pathmkv::EmpiricalPathMeasure::uniform(constant_paths(a, g));
            const auto nu = pathmkv::EmpiricalPathMeasure::uniform(constant_paths(b, g));
            return pathmkv::wasserstein2(mu, nu);
        },
        "Exact W2 between uniform measures on two point clouds in R^d.", py::arg("a"), py::arg("b"));

    m.def(
        "investment_hamiltonian",
        [](std::vector<double> p, double t, double rate, std::vector<double> a2, std::vector<double> c,
           std::vector<double> m_diag, std::vector<double> lower, std::vector<double> upper) {
            pathmkv::InvestmentParams ip;
            ip.p = pathmkv::HilbertVec(p);
            ip.t = t;
            ip.rate = rate;
            ip.a1 = pathmkv::HilbertVec(p.size());
            ip.a2 = pathmkv::HilbertVec(std::move(a2));
            ip.C = pathmkv::SpectralOperator::bounded(std::move(c));
            ip.M = pathmkv::SpectralOperator::bounded(std::move(m_diag));
            ip.lower = std::move(lower);
            ip.upper = std::move(upper);
            const pathmkv::InvestmentResult r = pathmkv::investment_hamiltonian_closed_form(ip);
            return py::make_tuple(r.u_star.vector(), r.value);
        },
        "Closed-form maximizer and value of the diagonal investment Hamiltonian.", py::arg("p"), py::arg("t"),
        py::arg("rate"), py::arg("a2"), py::arg("c"), py::arg("m"), py::arg("lower"), py::arg("upper"));
}
