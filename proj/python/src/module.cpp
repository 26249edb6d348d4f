#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <sstream>

#include "kirchhoff/cli.hpp"
#include "kirchhoff/config.hpp"
#include "kirchhoff/fixedpoint.hpp"
#include "kirchhoff/hypothesis.hpp"

namespace py = pybind11;
namespace kh = kirchhoff;

namespace {

kh::RunConfig with_n(kh::RunConfig cfg, std::optional<int> n) {
  if (n) cfg.n.assign(cfg.n.size(), *n);
  return cfg;
}

py::array_t<double> to_array(const kh::Field& f) {
  py::array_t<double> out(static_cast<py::ssize_t>(f.size()));
  std::copy(f.begin(), f.end(), out.mutable_data());
  return out;
}

/// Node coordinates, shape (size,) in 1D and (size, 2) in 2D.
py::array_t<double> nodes(const kh::Grid& grid) {
  const auto size = static_cast<py::ssize_t>(grid.size());
  if (grid.dim() == 1) {
    py::array_t<double> x(size);
    auto* p = x.mutable_data();
    for (std::size_t k = 0; k < grid.size(); ++k) p[k] = grid.node(k).x;
    return x;
  }
  py::array_t<double> xy({size, py::ssize_t{2}});
  auto* p = xy.mutable_data();
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const auto pt = grid.node(k);
    p[2 * k] = pt.x;
    p[2 * k + 1] = pt.y;
  }
  return xy;
}

struct Problem {
  kh::Grid grid;
  kh::AuxiliarySolver solver;
};

Problem make_problem(const kh::RunConfig& cfg) {
  auto grid = kh::make_grid(cfg);
  kh::AuxiliarySolver solver(grid, kh::make_coefficient(cfg), kh::make_source(cfg), kh::make_coupled_options(cfg));
  return {std::move(grid), std::move(solver)};
}

py::dict solve(const kh::RunConfig& base, std::optional<int> n) {
  const auto cfg = with_n(base, n);
  std::optional<Problem> prob;
  kh::FixedPointResult fp;
  {
    py::gil_scoped_release release;
    prob.emplace(make_problem(cfg));
    fp = kh::find_fixed_point(prob->solver, kh::make_fixed_point_options(cfg));
  }
  py::dict d;
  d["r_star"] = fp.r_star;
  d["S_at_star"] = fp.S_at_star;
  d["gap"] = fp.gap;
  d["evaluations"] = fp.evaluations;
  d["converged"] = fp.converged;
  d["bracket_invariant"] = fp.bracket_invariant;
  d["R"] = fp.R;
  d["x"] = nodes(prob->grid);
  d["u"] = to_array(fp.bundle.u);
  d["w"] = to_array(fp.bundle.w);
  d["v"] = to_array(fp.bundle.v);
  d["residual_fourth_order"] = fp.bundle.residual_fourth_order;
  d["picard_steps"] = fp.bundle.trace.steps.size();
  return d;
}

double eval_S(const kh::RunConfig& base, double r, std::optional<int> n) {
  const auto cfg = with_n(base, n);
  py::gil_scoped_release release;
  return make_problem(cfg).solver.S(r);
}

py::dict sweep(const kh::RunConfig& base, std::optional<std::vector<double>> r, std::optional<int> n) {
  const auto cfg = with_n(base, n);
  kh::SCurve curve;
  {
    py::gil_scoped_release release;
    kh::SweepOptions sopts;
    sopts.threads = cfg.sweep.threads;
    sopts.coarse_comparison = cfg.sweep.coarse_comparison;
    curve = kh::sweep_S(make_problem(cfg).solver, r ? *r : cfg.sweep.r, sopts);
  }
  std::vector<double> rs, S, S_coarse;
  for (const auto& s : curve.samples) {
    rs.push_back(s.r);
    S.push_back(s.S);
    S_coarse.push_back(s.S_coarse);
  }
  py::dict d;
  d["r"] = to_array(rs);
  d["S"] = to_array(S);
  d["S_coarse"] = to_array(S_coarse);
  d["coarse_n"] = curve.coarse_n;
  d["resolution_gap"] = curve.resolution_gap;
  if (curve.bracket) d["bracket"] = py::make_tuple(curve.bracket->first, curve.bracket->second);
  else d["bracket"] = py::none();
  return d;
}

py::dict audit(const kh::RunConfig& cfg) {
  kh::HypothesisReport rep;
  {
    py::gil_scoped_release release;
    kh::AuditOptions aopts;
    aopts.box = cfg.coefficient.box;
    aopts.samples = cfg.audit_samples;
    aopts.seed = cfg.seed;
    rep = kh::audit(kh::make_grid(cfg), kh::make_coefficient(cfg), kh::make_source(cfg), aopts);
  }
  py::dict d;
  d["status"] = kh::to_string(rep.overall);
  d["failures"] = rep.failures;
  d["lambda1"] = rep.lambda1;
  d["lambda1_discrete"] = rep.lambda1_discrete;
  d["gamma"] = rep.gamma;
  return d;
}

/// Runs a CLI command in-process; returns (exit code, log text).
py::tuple run(const std::string& command, const kh::RunConfig& cfg, std::optional<std::string> out,
              std::optional<int> n, bool override_theory, bool timestamp) {
  const auto cmd = kh::cli::parse_command(command);
  if (!cmd) throw py::value_error("unknown command: " + command);
  kh::cli::RunOptions opts;
  if (out) opts.out_dir = *out;
  opts.n = n;
  opts.override_theory = override_theory;
  opts.timestamp = timestamp;
  std::ostringstream log;
  int code = 0;
  {
    py::gil_scoped_release release;
    code = kh::cli::run(*cmd, cfg, opts, log);
  }
  return py::make_tuple(code, log.str());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Nonlocal fourth-order plate solver";

  // Translators run newest first, so the base class goes first.
  py::register_exception<kh::Error>(m, "SolverError", PyExc_RuntimeError);
  py::register_exception<kh::ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::class_<kh::RunConfig>(m, "Config")
      .def_static("from_text", &kh::parse_config, py::arg("text"), py::arg("origin") = "<config>")
      .def_static("from_file", [](const std::string& path) { return kh::load_config(path); }, py::arg("path"))
      .def_readwrite("n", &kh::RunConfig::n)
      .def_readwrite("out_dir", &kh::RunConfig::out_dir)
      .def_readwrite("override_theory", &kh::RunConfig::override_theory)
      .def_property_readonly("dim", [](const kh::RunConfig& c) { return c.domain.dim(); })
      .def_property_readonly("hash", [](const kh::RunConfig& c) { return kh::config_hash(c.text); })
      .def_readonly("origin", &kh::RunConfig::origin);

  m.def("solve", &solve, py::arg("config"), py::arg("n") = py::none(),
        "Fixed point r* = S(r*) and the solution at r*.");
  m.def("S", &eval_S, py::arg("config"), py::arg("r"), py::arg("n") = py::none(),
        "h10(u)^2 of the auxiliary problem at frozen r.");
  m.def("sweep", &sweep, py::arg("config"), py::arg("r") = py::none(), py::arg("n") = py::none(),
        "Sample S over r, with the coarse-grid comparison.");
  m.def("audit", &audit, py::arg("config"), "Hypothesis audit of the configured problem.");
  m.def("run", &run, py::arg("command"), py::arg("config"), py::arg("out") = py::none(), py::arg("n") = py::none(),
        py::arg("override_theory") = false, py::arg("timestamp") = true,
        "Run a CLI command and write its outputs; returns (exit_code, log).");
  m.def("config_hash", &kh::config_hash, py::arg("text"));
}
