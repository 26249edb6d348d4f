#include "kirchhoff/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <ostream>

#include "json.hpp"
#include "kirchhoff/fixedpoint.hpp"
#include "kirchhoff/hypothesis.hpp"
#include "kirchhoff/verify.hpp"

namespace kirchhoff::cli {

using nlohmann::json;

std::optional<Command> parse_command(std::string_view name) {
  if (name == "solve") return Command::Solve;
  if (name == "sweep") return Command::Sweep;
  if (name == "verify") return Command::Verify;
  if (name == "audit") return Command::Audit;
  return std::nullopt;
}

const char* to_string(Command c) {
  switch (c) {
    case Command::Solve:
      return "solve";
    case Command::Sweep:
      return "sweep";
    case Command::Verify:
      return "verify";
    case Command::Audit:
      return "audit";
  }
  return "?";
}

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json grid_json(const Grid& g) {
  json j;
  const auto& d = g.domain();
  j["kind"] = d.kind() == DomainKind::Interval ? "interval" : "rectangle";
  j["dim"] = g.dim();
  for (int a = 0; a < g.dim(); ++a) {
    j["n"].push_back(g.n(a));
    j["h"].push_back(g.h(a));
    j["bounds"].push_back({d.bounds(a).low, d.bounds(a).high});
  }
  j["interior_nodes"] = g.size();
  j["volume"] = d.volume();
  return j;
}

json sampled_json(const SampledCheck& c) {
  return {{"applicable", c.applicable}, {"pass", c.pass}, {"samples", c.samples}, {"worst", c.worst},
          {"witness", c.witness}};
}

json audit_json(const HypothesisReport& r) {
  json j;
  j["overall"] = to_string(r.overall);
  j["failures"] = r.failures;
  j["lambda1"] = r.lambda1;
  j["lambda1_discrete"] = r.lambda1_discrete;
  j["gamma_surrogate"] = r.gamma;
  j["volume"] = r.volume;
  j["m_floor"] = {{"declared", r.m_floor.declared}, {"sampled_min", r.m_floor.sampled_min},
                  {"pass", r.m_floor.pass}, {"witness", r.m_floor.witness}};
  if (r.m2) j["m2"] = {{"pass", r.m2->pass}, {"worst_defect", r.m2->worst_defect}, {"witness", r.m2->witness}};
  j["f1"] = {{"pass", r.f1_pass}, {"max_abs_f_at_zero", r.f1_max_abs}};
  j["pure_x"] = sampled_json(r.pure_x);
  j["f2_growth"] = sampled_json(r.growth);
  j["f3_lipschitz"] = sampled_json(r.lipschitz);
  j["nu_bound"] = {{"applicable", r.nu_bound.applicable}, {"nu", r.nu_bound.nu},
                   {"limit1", r.nu_bound.limit1},         {"limit2", r.nu_bound.limit2},
                   {"pass", r.nu_bound.pass},             {"gamma_binding", r.nu_bound.gamma_binding}};
  j["theta_bound"] = {{"applicable", r.theta_bound.applicable}, {"theta", r.theta_bound.theta},
                      {"limit", r.theta_bound.limit}, {"pass", r.theta_bound.pass}};
  j["delta_pass"] = r.delta_pass;
  j["q_pass"] = r.q_pass;
  return j;
}

json properties_json(const PropertyReport& p) {
  json j = json::array();
  for (const auto& c : p.checks) {
    const char* status = c.status == CheckStatus::Pass ? "Pass" : c.status == CheckStatus::Fail ? "Fail" : "Skipped";
    j.push_back({{"id", c.id},
                 {"description", c.description},
                 {"status", status},
                 {"samples", c.samples},
                 {"violations", c.violations},
                 {"worst_slack", c.worst_slack},
                 {"witness", c.witness}});
  }
  return j;
}

json trace_json(const IterationTrace& t) {
  json j;
  const auto& c = t.constants;
  j["constants"] = {{"lambda1", c.lambda1}, {"gamma", c.gamma},       {"C1", c.C1},
                    {"C2", c.C2},           {"C2_sharp", c.C2_sharp}, {"contraction_factor", c.contraction_factor}};
  j["converged"] = t.converged;
  j["steps"] = t.steps.size();
  j["violations"] = t.violations;
  j["violations_sharp"] = t.violations_sharp;
  j["min_slack"] = {{"est1", t.min_est1},       {"finish", t.min_finish}, {"finish_sharp", t.min_finish_sharp},
                    {"inequ", t.min_inequ},     {"estiman", t.min_estiman}, {"est2", t.min_est2},
                    {"contraction", t.min_contraction}};
  json steps = json::array();
  for (const auto& s : t.steps)
    steps.push_back({{"n", s.n},
                     {"w_h10", s.w_h10},
                     {"z_h10", s.z_h10},
                     {"w_linf", s.w_linf},
                     {"z_linf", s.z_linf},
                     {"step_delta", s.step_delta},
                     {"est1", s.est1},
                     {"finish", s.finish},
                     {"finish_sharp", s.finish_sharp},
                     {"inequ", s.inequ},
                     {"estiman", s.estiman},
                     {"est2", s.est2},
                     {"contraction", s.contraction}});
  j["records"] = steps;
  return j;
}

json bundle_json(const Grid& g, const SolutionBundle& b) {
  return {{"r", b.r},
          {"S_value", b.S_value},
          {"u_linf", linf_norm(b.u)},
          {"u_h10", h10_norm(g, b.u)},
          {"w_linf", linf_norm(b.w)},
          {"m_bound_slack", b.m_bound_slack},
          {"linf_bound_slack", b.linf_bound_slack},
          {"tau1", b.tau1},
          {"tau2", b.tau2},
          {"newton_iters", b.newton_iters},
          {"outside_theory", b.outside_theory}};
}

json residual_json(const ResidualReport& r) {
  return {{"fourth_order_linf", r.fourth_order_linf},
          {"fourth_order_l2", r.fourth_order_l2},
          {"continuum_linf", r.continuum_linf},
          {"system_consistency_linf", r.system_consistency_linf},
          {"reconstruction_linf", r.reconstruction_linf},
          {"weak_form_defect", r.weak_form_defect}};
}

json fixed_point_json(const FixedPointResult& fp) {
  json hist = json::array();
  for (const auto& s : fp.bracket_history)
    hist.push_back({{"r_lo", s.r_lo}, {"g_lo", s.g_lo}, {"r_hi", s.r_hi}, {"g_hi", s.g_hi},
                    {"r_trial", s.r_trial}, {"g_trial", s.g_trial}});
  return {{"r_star", fp.r_star},
          {"S_at_star", fp.S_at_star},
          {"gap", fp.gap},
          {"evaluations", fp.evaluations},
          {"R", fp.R},
          {"converged", fp.converged},
          {"bracket_invariant", fp.bracket_invariant},
          {"bracket_history", hist}};
}

void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  out << s;
}

void write_solution_csv(const std::filesystem::path& p, const Grid& g, const SourceSpec& src, const SolutionBundle& b) {
  std::string s = g.dim() == 1 ? "x,u,w,v,f\n" : "x,y,u,w,v,f\n";
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Point x = g.node(k);
    s += num(x.x) + ",";
    if (g.dim() == 2) s += num(x.y) + ",";
    s += num(b.u[k]) + "," + num(b.w[k]) + "," + num(b.v[k]) + "," + num(src(x, b.u[k])) + "\n";
  }
  write_text(p, s);
}

void write_trace_csv(const std::filesystem::path& p, const IterationTrace& t) {
  std::string s = "n,w_h10,z_h10,w_linf,z_linf,step_delta,est1,finish,finish_sharp,inequ,estiman,est2,contraction\n";
  for (const auto& r : t.steps) {
    s += std::to_string(r.n);
    for (double v : {r.w_h10, r.z_h10, r.w_linf, r.z_linf, r.step_delta, r.est1, r.finish, r.finish_sharp, r.inequ,
                     r.estiman, r.est2, r.contraction})
      s += "," + num(v);
    s += "\n";
  }
  write_text(p, s);
}

void write_scurve_csv(const std::filesystem::path& p, const SCurve& c) {
  std::string s = "r,S,g,S_coarse,newton_iters,picard_steps,picard_converged\n";
  for (const auto& e : c.samples)
    s += num(e.r) + "," + num(e.S) + "," + num(e.S - e.r) + "," + num(e.S_coarse) + "," +
         std::to_string(e.newton_iters) + "," + std::to_string(e.picard_steps) + "," +
         (e.picard_converged ? "1" : "0") + "\n";
  write_text(p, s);
}

double max_diff(const Field& a, const Field& b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, std::abs(a[k] - b[k]));
  return d;
}

}  // namespace

int run(Command command, RunConfig cfg, const RunOptions& opts, std::ostream& log) {
  if (opts.n) cfg.n.assign(cfg.n.size(), *opts.n);
  if (opts.override_theory) cfg.override_theory = true;
  const auto out_dir = opts.out_dir ? *opts.out_dir : std::filesystem::path(cfg.out_dir);
  std::filesystem::create_directories(out_dir);

  json report;
  report["schema"] = 1;
  report["command"] = to_string(command);
  report["config"] = {{"hash", config_hash(cfg.text)},
                      {"origin", cfg.origin},
                      {"override_theory", cfg.override_theory},
                      {"n", cfg.n},
                      {"coefficient", make_coefficient(cfg).description()},
                      {"source", cfg.source.f}};
  if (opts.timestamp) report["generated_at"] = utc_now();

  int code = kOk;
  auto finish = [&](const char* status) {
    report["status"] = status;
    write_text(out_dir / "report.json", report.dump(2) + "\n");
    log << to_string(command) << ": " << status << " (" << (out_dir / "report.json").string() << ")\n";
    return code;
  };

  const Grid grid = make_grid(cfg);
  const Coefficient coef = make_coefficient(cfg);
  const SourceSpec src = make_source(cfg);
  const auto copts = make_coupled_options(cfg);
  report["grid"] = grid_json(grid);

  AuditOptions aopts;
  aopts.box = cfg.coefficient.box;
  aopts.samples = cfg.audit_samples;
  aopts.seed = cfg.seed;
  const auto audit_rep = audit(grid, coef, src, aopts);
  report["audit"] = audit_json(audit_rep);
  const bool theory_fail = audit_rep.overall == AuditStatus::Fail;
  log << "audit: " << to_string(audit_rep.overall) << "\n";

  if (command == Command::Audit) {
    PropertyOptions popts;
    popts.box = cfg.coefficient.box;
    popts.seed = cfg.seed;
    const auto props = check_lemma_properties(coef, std::max(100, cfg.audit_samples), popts);
    report["primitive_properties"] = properties_json(props);
    if (theory_fail || !props.all_passed()) {
      code = kHypothesisFailure;
      return finish("hypothesis_failure");
    }
    return finish("ok");
  }

  if (theory_fail && !cfg.override_theory) {
    code = kHypothesisFailure;
    report["error"] = "hypotheses not satisfied; rerun with --override-theory to solve anyway";
    return finish("hypothesis_failure");
  }

  try {
    const AuxiliarySolver solver(grid, coef, src, copts);
    if (command == Command::Sweep) {
      if (cfg.sweep.r.empty()) throw ConfigError("sweep needs [sweep] r or r_stop/r_step", "sweep", 0);
      SweepOptions sopts;
      sopts.threads = cfg.sweep.threads;
      sopts.coarse_comparison = cfg.sweep.coarse_comparison;
      const auto curve = sweep_S(solver, cfg.sweep.r, sopts);
      write_scurve_csv(out_dir / "scurve.csv", curve);
      json sc;
      sc["samples"] = curve.samples.size();
      sc["max_adjacent_variation"] = curve.max_adjacent_variation;
      sc["coarse_max_adjacent_variation"] = curve.coarse_max_adjacent_variation;
      sc["resolution_gap"] = curve.resolution_gap;
      sc["coarse_n"] = curve.coarse_n;
      sc["bracket"] = curve.bracket ? json{curve.bracket->first, curve.bracket->second} : json(nullptr);
      sc["sign_changes"] = curve.sign_changes;
      report["scurve"] = sc;
      return finish("ok");
    }

    const auto fp = find_fixed_point(solver, make_fixed_point_options(cfg));
    report["fixed_point"] = fixed_point_json(fp);
    report["solution"] = bundle_json(grid, fp.bundle);
    const auto res = fourth_order_residual(grid, coef, src, fp.bundle, cfg.seed + 20);
    report["residuals"] = residual_json(res);
    report["trace"] = trace_json(fp.bundle.trace);
    write_solution_csv(out_dir / "solution.csv", grid, src, fp.bundle);
    write_trace_csv(out_dir / "trace.csv", fp.bundle.trace);
    log << "r* = " << num(fp.r_star) << "  gap = " << num(fp.gap) << "\n";
    if (!fp.converged) {
      code = kSolverFailure;
      report["error"] = "fixed-point search did not reach the tolerance";
      return finish("solver_failure");
    }

    if (command == Command::Verify) {
      json v;
      if (grid.size() > 1200) {
        v["oracle"] = "skipped: grid larger than 1200 interior nodes";
      } else {
        OracleOptions oopts;
        oopts.starts = cfg.oracle_starts;
        oopts.seed = cfg.seed + 1;
        const auto o = dense_oracle(grid, coef, src, oopts);
        const double du = max_diff(o.bundle.u, fp.bundle.u), dw = max_diff(o.bundle.w, fp.bundle.w);
        const double dr = std::abs(o.bundle.r - fp.r_star);
        const bool agree = du <= 1e-7 && dw <= 1e-7 && dr <= 1e-7;
        v["oracle"] = {{"r", o.bundle.r},
                       {"starts", o.starts},
                       {"converged_starts", o.converged_starts},
                       {"spread", o.spread},
                       {"max_newton_iters", o.max_newton_iters},
                       {"u_linf_diff", du},
                       {"w_linf_diff", dw},
                       {"r_diff", dr},
                       {"agree", agree},
                       {"residuals", residual_json(fourth_order_residual(grid, coef, src, o.bundle, cfg.seed + 20))}};
        if (!agree) {
          code = kSolverFailure;
          report["verify"] = v;
          report["error"] = "staged solver and dense oracle disagree";
          return finish("solver_failure");
        }
      }
      report["verify"] = v;
    }
    return finish("ok");
  } catch (const PicardError& e) {
    code = kSolverFailure;
    report["error"] = e.what();
    report["trace"] = trace_json(e.trace());
    write_trace_csv(out_dir / "trace.csv", e.trace());
    return finish("solver_failure");
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    code = kSolverFailure;
    report["error"] = e.what();
    return finish("solver_failure");
  }
}

}  // namespace kirchhoff::cli
