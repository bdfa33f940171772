#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "jobswitch/commands.hpp"
#include "jobswitch/config.hpp"
#include "jobswitch/errors.hpp"
#include "jobswitch/integral.hpp"
#include "jobswitch/obstacle.hpp"
#include "jobswitch/simulate.hpp"
#include "jobswitch/strategy.hpp"

namespace py = pybind11;
using namespace jobswitch;

namespace {

py::array_t<double> to_array(const Surface& s) {
    py::array_t<double> a({s.rows(), s.cols()});
    auto v = a.mutable_unchecked<2>();
    for (std::size_t k = 0; k < s.rows(); ++k)
        for (std::size_t i = 0; i < s.cols(); ++i) v(k, i) = s(k, i);
    return a;
}

py::array_t<double> to_array(const std::vector<double>& x) { return py::array_t<double>(x.size(), x.data()); }

py::dict estimate(const simulate::Estimate& e) { return py::dict(py::arg("mean") = e.mean, py::arg("se") = e.se); }

py::dict report_dict(const simulate::SimReport& r) {
    py::dict d;
    d["n_paths"] = r.n_paths;
    d["n_steps"] = r.n_steps;
    d["lambda0"] = r.lambda0;
    d["job0"] = r.job0;
    d["J_S"] = estimate(r.js);
    d["J"] = estimate(r.j_total);
    d["switching_cost_pv"] = estimate(r.switching_cost);
    d["static_budget"] = estimate(r.budget);
    d["mean_log_ratio_T"] = estimate(r.log_ratio_T);
    d["mean_discounted_Y_T"] = estimate(r.disc_y_T);
    d["mean_switches"] = r.mean_switches;
    d["max_switches"] = r.max_switches;
    d["zero_switch_paths"] = r.zero_switch_paths;
    d["late_up_switches"] = r.late_up_switches;
    d["alternation_violations"] = r.alternation_violations;
    d["post_switch_violations"] = r.post_switch_violations;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Optimal job switching with consumption and investment";

    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_RuntimeError);

    py::class_<ModelParams>(m, "ModelParams")
        .def(py::init<>())
        .def_readwrite("beta", &ModelParams::beta)
        .def_readwrite("r", &ModelParams::r)
        .def_readwrite("mu", &ModelParams::mu)
        .def_readwrite("sigma", &ModelParams::sigma)
        .def_readwrite("eps0", &ModelParams::eps0)
        .def_readwrite("eps1", &ModelParams::eps1)
        .def_readwrite("L0", &ModelParams::L0)
        .def_readwrite("L1", &ModelParams::L1)
        .def_readwrite("zeta0", &ModelParams::zeta0)
        .def_readwrite("zeta1", &ModelParams::zeta1)
        .def_readwrite("T", &ModelParams::T)
        .def_readwrite("gamma", &ModelParams::gamma)
        .def_readwrite("T_death", &ModelParams::T_death);

    py::class_<DerivedConstants>(m, "DerivedConstants")
        .def_readonly("theta", &DerivedConstants::theta)
        .def_readonly("T1", &DerivedConstants::T1)
        .def_readonly("X1", &DerivedConstants::X1)
        .def_readonly("X2", &DerivedConstants::X2)
        .def_readonly("K", &DerivedConstants::K)
        .def_readonly("bequest_coef", &DerivedConstants::bequest_coef);

    m.def("validate", &validate, py::arg("params"));
    m.def("annuity_factor", &annuity_factor, py::arg("k"), py::arg("s"));

    py::class_<Model>(m, "Model")
        .def(py::init<const ModelParams&>(), py::arg("params") = ModelParams{})
        .def_property_readonly("params", &Model::params)
        .def_property_readonly("derived", &Model::derived)
        .def("q_r", &Model::q_r, py::arg("t"), py::arg("lam"))
        .def("q_r_dlambda", &Model::q_r_dlambda, py::arg("t"), py::arg("lam"))
        .def("conjugate_u1", &Model::conjugate_u1, py::arg("lam"))
        .def("varphi_plus", &Model::varphi_plus, py::arg("tau"));

    py::class_<BoundaryCurve>(m, "BoundaryCurve")
        .def(py::init<std::vector<double>, std::vector<double>>(), py::arg("times"), py::arg("values"))
        .def_property_readonly("times", [](const BoundaryCurve& c) { return to_array(c.times()); })
        .def_property_readonly("values", [](const BoundaryCurve& c) { return to_array(c.values()); })
        .def("__call__", [](const BoundaryCurve& c, double t) { return c(t); }, py::arg("t"))
        .def("__len__", &BoundaryCurve::size);

    py::class_<BoundaryPair>(m, "BoundaryPair")
        .def(py::init<BoundaryCurve, BoundaryCurve>(), py::arg("lambda0"), py::arg("lambda1"))
        .def_readonly("lambda0", &BoundaryPair::lambda0)
        .def_readonly("lambda1", &BoundaryPair::lambda1);

    py::class_<obstacle::Grid>(m, "Grid")
        .def(py::init([](int nx, int nt, double n_trunc, double T) { return obstacle::Grid{n_trunc, nx, nt, T}; }),
             py::arg("nx") = 2001, py::arg("nt") = 3000, py::arg("n_trunc") = 12.0, py::arg("T") = 30.0)
        .def_readwrite("nx", &obstacle::Grid::nx)
        .def_readwrite("nt", &obstacle::Grid::nt)
        .def_readwrite("n_trunc", &obstacle::Grid::n_trunc)
        .def_readwrite("T", &obstacle::Grid::T);

    py::class_<obstacle::ObstacleSolution>(m, "ObstacleSolution")
        .def_property_readonly("u", [](const obstacle::ObstacleSolution& s) { return to_array(s.u); })
        .def_property_readonly("residual", [](const obstacle::ObstacleSolution& s) { return to_array(s.residual); })
        .def_property_readonly("tau", [](const obstacle::ObstacleSolution& s) { return to_array(s.boundaries.tau); })
        .def_property_readonly("x0", [](const obstacle::ObstacleSolution& s) { return to_array(s.boundaries.x0); })
        .def_property_readonly("x1", [](const obstacle::ObstacleSolution& s) { return to_array(s.boundaries.x1); })
        .def_readonly("final_eps", &obstacle::ObstacleSolution::final_eps)
        .def_property_readonly("max_residual", [](const obstacle::ObstacleSolution& s) { return s.stats.max_residual; })
        .def("lambda_boundaries",
             [](const obstacle::ObstacleSolution& s) { return obstacle::to_lambda_boundaries(s.boundaries, s.grid.T); })
        .def("invariants", [](const obstacle::ObstacleSolution& s, const Model& model) {
            py::dict d;
            for (const auto& r : obstacle::check_invariants(model, s)) d[py::str(r.name)] = py::make_tuple(r.passed, r.worst);
            return d;
        }, py::arg("model"));

    m.def("solve_obstacle",
          [](const Model& model, const obstacle::Grid& g, const std::string& method) {
              obstacle::validate_grid(g, model.derived());
              obstacle::SolverOptions opt;
              opt.method = obstacle::parse_method(method);
              py::gil_scoped_release release;
              return obstacle::solve_obstacle(model, g, opt);
          },
          py::arg("model"), py::arg("grid") = obstacle::Grid{}, py::arg("method") = "projected_relaxation");

    py::class_<integral::IeSolverConfig>(m, "IeSolverConfig")
        .def(py::init<>())
        .def_readwrite("nt_ie", &integral::IeSolverConfig::nt_ie)
        .def_readwrite("newton_tol", &integral::IeSolverConfig::newton_tol)
        .def_readwrite("lambda_cap", &integral::IeSolverConfig::lambda_cap)
        .def_readwrite("endpoint_offset", &integral::IeSolverConfig::endpoint_offset);

    py::class_<integral::IeSolution>(m, "IeSolution")
        .def_readonly("boundaries", &integral::IeSolution::boundaries)
        .def_property_readonly("max_equation_residual",
                               [](const integral::IeSolution& s) { return s.stats.max_equation_residual; })
        .def_property_readonly("nodes", [](const integral::IeSolution& s) { return s.stats.nodes; });

    m.def("solve_boundaries_ie",
          [](const Model& model, const integral::IeSolverConfig& c) {
              integral::validate_config(c, model);
              py::gil_scoped_release release;
              return integral::solve_boundaries_ie(model, c);
          },
          py::arg("model"), py::arg("config") = integral::IeSolverConfig{});
    m.def("q0", &integral::q0_ie, py::arg("model"), py::arg("t"), py::arg("lam"), py::arg("boundaries"));
    m.def("q1", &integral::q1_ie, py::arg("model"), py::arg("t"), py::arg("lam"), py::arg("boundaries"));

    py::class_<strategy::StrategySurface>(m, "StrategySurface")
        .def(py::init<const Model&, BoundaryPair>(), py::arg("model"), py::arg("boundaries"))
        .def("q_hat", &strategy::StrategySurface::q_hat, py::arg("job"), py::arg("t"), py::arg("lam"))
        .def("wealth", &strategy::StrategySurface::wealth, py::arg("job"), py::arg("t"), py::arg("lam"))
        .def("investment", &strategy::StrategySurface::investment, py::arg("job"), py::arg("t"), py::arg("lam"))
        .def("w0", &strategy::StrategySurface::w0, py::arg("t"))
        .def("w1", &strategy::StrategySurface::w1, py::arg("t"))
        .def("wealth_lower_bound", &strategy::StrategySurface::wealth_lower_bound, py::arg("job"), py::arg("t"))
        .def("lambda_from_wealth", &strategy::StrategySurface::lambda_from_wealth, py::arg("job"), py::arg("t"),
             py::arg("w"))
        .def("region", [](const strategy::StrategySurface& s, int j, double t, double w) {
            return strategy::region_name(s.classify_wealth(j, t, w));
        }, py::arg("job"), py::arg("t"), py::arg("w"))
        .def("feedback", [](const strategy::StrategySurface& s, int j, double t, double w) {
            const auto p = s.feedback(j, t, w);
            return py::dict(py::arg("lam") = p.lambda, py::arg("consumption") = p.consumption,
                            py::arg("position") = p.position, py::arg("switch_now") = p.switch_now,
                            py::arg("job_after") = p.job_after, py::arg("wealth_after") = p.wealth_after);
        }, py::arg("job"), py::arg("t"), py::arg("w"));

    m.def("simulate",
          [](const Model& model, const BoundaryPair& b, int n_paths, int n_steps, std::uint64_t seed, double lambda0,
             int job0, bool antithetic, int threads) {
              simulate::SimConfig c;
              c.n_paths = n_paths;
              c.n_steps = n_steps;
              c.seed = seed;
              c.lambda0 = lambda0;
              c.job0 = job0;
              c.antithetic = antithetic;
              c.threads = threads;
              c = simulate::resolve_config(c, model);
              simulate::SimReport r;
              {
                  py::gil_scoped_release release;
                  const auto e = simulate::simulate_dual(c, model);
                  r = simulate::estimate_values(simulate::run_switching(e, b), model);
              }
              return report_dict(r);
          },
          py::arg("model"), py::arg("boundaries"), py::arg("n_paths") = 10000, py::arg("n_steps") = 3000,
          py::arg("seed") = 20240917, py::arg("lambda0") = 0.725, py::arg("job0") = 0, py::arg("antithetic") = false,
          py::arg("threads") = 0);

    m.def("run_command",
          [](const std::string& name, const std::string& config_json, const std::string& out_dir, bool per_path) {
              cli::CommandOptions o;
              o.cfg = config_json.empty() ? default_config() : config_from_json(nlohmann::json::parse(config_json));
              o.out_dir = out_dir;
              o.quiet = true;
              o.per_path = per_path;
              std::ostringstream log;
              cli::CommandResult r;
              {
                  py::gil_scoped_release release;
                  if (name == "solve-pde") r = cli::cmd_solve_pde(o, log);
                  else if (name == "solve-ie") r = cli::cmd_solve_ie(o, log);
                  else if (name == "strategy") r = cli::cmd_strategy(o, log);
                  else if (name == "simulate") r = cli::cmd_simulate(o, log);
                  else throw ValidationError("unknown command '" + name + "'");
              }
              return py::make_tuple(r.exit_code, r.out_dir.string(), log.str());
          },
          py::arg("command"), py::arg("config_json") = "", py::arg("out_dir") = "", py::arg("per_path") = false);
}
