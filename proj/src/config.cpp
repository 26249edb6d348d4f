#include "kirchhoff/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#define TOML_EXCEPTIONS 1
#include "toml.hpp"

#include "kirchhoff/expr.hpp"

namespace kirchhoff {

std::string ConfigError::format(const std::string& what, const std::string& key, int line) {
  std::string out;
  if (line > 0) out += "line " + std::to_string(line) + ": ";
  if (!key.empty()) out += key + ": ";
  return out + what;
}

namespace {

int line_of(const toml::node& n) { return static_cast<int>(n.source().begin.line); }

class Section {
 public:
  Section(const toml::table* table, std::string name, std::set<std::string> allowed)
      : table_(table), name_(std::move(name)) {
    if (!table_) return;
    for (const auto& [k, v] : *table_) {
      if (!allowed.count(std::string(k.str())))
        throw ConfigError("unknown key", name_ + "." + std::string(k.str()), line_of(v));
    }
  }

  bool present() const { return table_ != nullptr; }
  int line() const { return table_ ? line_of(*table_) : 0; }
  std::string key(std::string_view k) const { return name_ + "." + std::string(k); }

  const toml::node* get(std::string_view k) const { return table_ ? table_->get(k) : nullptr; }
  bool has(std::string_view k) const { return get(k) != nullptr; }

  const toml::node& require(std::string_view k) const {
    const auto* n = get(k);
    if (!n) throw ConfigError("missing required key", key(k), line());
    return *n;
  }

  double real(std::string_view k, double fallback) const {
    const auto* n = get(k);
    return n ? to_real(*n, key(k)) : fallback;
  }
  double real(std::string_view k) const { return to_real(require(k), key(k)); }

  int integer(std::string_view k, int fallback) const {
    const auto* n = get(k);
    if (!n) return fallback;
    if (const auto v = n->value<std::int64_t>(); v && n->is_integer()) return static_cast<int>(*v);
    throw ConfigError("expected an integer", key(k), line_of(*n));
  }

  bool boolean(std::string_view k, bool fallback) const {
    const auto* n = get(k);
    if (!n) return fallback;
    if (const auto v = n->value<bool>()) return *v;
    throw ConfigError("expected true or false", key(k), line_of(*n));
  }

  std::string string(std::string_view k, std::string fallback) const {
    const auto* n = get(k);
    if (!n) return fallback;
    if (const auto v = n->value<std::string>(); v && n->is_string()) return *v;
    throw ConfigError("expected a string", key(k), line_of(*n));
  }

  std::vector<double> reals(std::string_view k) const {
    const auto& n = require(k);
    const auto* arr = n.as_array();
    if (!arr) throw ConfigError("expected an array", key(k), line_of(n));
    std::vector<double> out;
    for (const auto& e : *arr) out.push_back(to_real(e, key(k)));
    return out;
  }

  static double to_real(const toml::node& n, const std::string& key) {
    if (n.is_integer() || n.is_floating_point()) return *n.value<double>();
    if (n.is_string()) {
      const auto text = *n.value<std::string>();
      try {
        return expr::parse(text, expr::VariableSet{}).eval(expr::Bindings{});
      } catch (const Error& e) {
        throw ConfigError(std::string("bad constant expression: ") + e.what(), key, line_of(n));
      }
    }
    throw ConfigError("expected a number or a constant expression", key, line_of(n));
  }

 private:
  const toml::table* table_;
  std::string name_;
};

const toml::table* subtable(const toml::table& root, std::string_view name) {
  const auto* n = root.get(name);
  if (!n) return nullptr;
  if (!n->is_table()) throw ConfigError("expected a table", std::string(name), line_of(*n));
  return n->as_table();
}

std::pair<double, double> range(const Section& s, std::string_view k) {
  const auto v = s.reals(k);
  if (v.size() != 2) throw ConfigError("expected [low, high]", s.key(k), line_of(s.require(k)));
  if (!(v[0] < v[1])) throw ConfigError("needs low < high", s.key(k), line_of(s.require(k)));
  return {v[0], v[1]};
}

void positive(const Section& s, std::string_view k, double v) {
  if (!(v > 0.0)) throw ConfigError("must be positive", s.key(k), s.has(k) ? line_of(s.require(k)) : s.line());
}

}  // namespace

RunConfig parse_config(std::string_view text, const std::string& origin) {
  toml::table root;
  try {
    root = toml::parse(text, origin);
  } catch (const toml::parse_error& e) {
    throw ConfigError(std::string(e.description()), "", static_cast<int>(e.source().begin.line));
  }
  for (const auto& [k, v] : root) {
    static const std::set<std::string> known{"domain", "coefficient", "source", "solver", "sweep", "run"};
    if (!known.count(std::string(k.str()))) throw ConfigError("unknown section", std::string(k.str()), line_of(v));
  }

  RunConfig cfg;
  cfg.text = std::string(text);
  cfg.origin = origin;

  // [domain]
  const Section dom(subtable(root, "domain"), "domain", {"kind", "x", "y", "n"});
  if (!dom.present()) throw ConfigError("missing section", "domain", 0);
  const auto kind = dom.string("kind", dom.has("y") ? "rectangle" : "interval");
  const auto [x0, x1] = range(dom, "x");
  if (kind == "interval") {
    if (dom.has("y")) throw ConfigError("an interval has no y range", dom.key("y"), line_of(dom.require("y")));
    cfg.domain = Domain::interval(x0, x1);
  } else if (kind == "rectangle") {
    const auto [y0, y1] = range(dom, "y");
    cfg.domain = Domain::rectangle(x0, x1, y0, y1);
  } else {
    throw ConfigError("expected \"interval\" or \"rectangle\"", dom.key("kind"), line_of(dom.require("kind")));
  }
  const auto& n_node = dom.require("n");
  if (n_node.is_integer()) {
    cfg.n.assign(static_cast<std::size_t>(cfg.domain.dim()), static_cast<int>(*n_node.value<std::int64_t>()));
  } else if (const auto* arr = n_node.as_array()) {
    for (const auto& e : *arr) {
      if (!e.is_integer()) throw ConfigError("expected integer node counts", dom.key("n"), line_of(e));
      cfg.n.push_back(static_cast<int>(*e.value<std::int64_t>()));
    }
  } else {
    throw ConfigError("expected an integer or an array of integers", dom.key("n"), line_of(n_node));
  }
  if (static_cast<int>(cfg.n.size()) != cfg.domain.dim())
    throw ConfigError("one node count per axis expected", dom.key("n"), line_of(n_node));
  for (int v : cfg.n)
    if (v < 2) throw ConfigError("at least 2 interior nodes per axis", dom.key("n"), line_of(n_node));

  // [coefficient]
  const Section co(subtable(root, "coefficient"), "coefficient",
                   {"kind", "m", "floor", "m2", "value", "a", "b", "coeffs", "r_coeff", "audit_t", "audit_r"});
  if (!co.present()) throw ConfigError("missing section", "coefficient", 0);
  auto& c = cfg.coefficient;
  const auto ckind = co.string("kind", "expression");
  if (ckind == "constant") {
    c.kind = CoefficientKind::Constant;
    c.value = co.real("value");
  } else if (ckind == "affine_in_r") {
    c.kind = CoefficientKind::AffineInR;
    c.a = co.real("a");
    c.b = co.real("b");
  } else if (ckind == "polynomial_in_t") {
    c.kind = CoefficientKind::PolynomialInT;
    c.coeffs = co.reals("coeffs");
    c.r_coeff = co.real("r_coeff", 0.0);
    if (!co.has("floor")) throw ConfigError("polynomial_in_t needs a declared floor", co.key("floor"), co.line());
  } else if (ckind == "gaussian_bump") {
    c.kind = CoefficientKind::GaussianBump;
    c.a = co.real("a");
    c.b = co.real("b");
  } else if (ckind == "expression") {
    c.kind = CoefficientKind::Expression;
    c.m = co.string("m", "");
    if (c.m.empty()) throw ConfigError("missing required key", co.key("m"), co.line());
    if (!co.has("floor")) throw ConfigError("an expression coefficient needs a declared floor", co.key("floor"), co.line());
  } else {
    throw ConfigError("unknown coefficient kind '" + ckind + "'", co.key("kind"), line_of(co.require("kind")));
  }
  if (co.has("floor")) {
    c.floor = co.real("floor");
    positive(co, "floor", *c.floor);
  }
  c.m2 = co.boolean("m2", false);
  if (co.has("audit_t")) std::tie(c.box.t_low, c.box.t_high) = range(co, "audit_t");
  if (co.has("audit_r")) std::tie(c.box.r_low, c.box.r_high) = range(co, "audit_r");

  // [source]
  const Section so(subtable(root, "source"), "source", {"f", "mu_bound", "nu", "delta", "theta", "q"});
  if (!so.present()) throw ConfigError("missing section", "source", 0);
  cfg.source.f = so.string("f", "");
  if (cfg.source.f.empty()) throw ConfigError("missing required key", so.key("f"), so.line());
  auto& p = cfg.source.params;
  p.mu_bound = so.real("mu_bound");
  p.nu = so.real("nu", 0.0);
  p.delta = so.real("delta", 1.0);
  p.theta = so.real("theta", 0.0);
  if (so.has("q")) {
    p.q = so.real("q");
    if (!(*p.q > 0.5 * cfg.domain.dim()))
      throw ConfigError("integrability exponent must exceed N/2", so.key("q"), line_of(so.require("q")));
  }
  if (!(p.delta > 0.0 && p.delta <= 1.0)) throw ConfigError("must lie in (0, 1]", so.key("delta"), so.line());
  for (auto [k, v] : {std::pair{"mu_bound", p.mu_bound}, {"nu", p.nu}, {"theta", p.theta}})
    if (!(v >= 0.0)) throw ConfigError("must be non-negative", so.key(k), so.line());

  // [solver]
  const Section sv(subtable(root, "solver"), "solver",
                   {"residual_tol", "poisson_tol", "picard_tol", "max_picard", "fixed_point_tol", "method", "omega"});
  auto& s = cfg.solver;
  s.residual_tol = sv.real("residual_tol", s.residual_tol);
  s.poisson_tol = sv.real("poisson_tol", s.poisson_tol);
  s.picard_tol = sv.real("picard_tol", s.picard_tol);
  s.fixed_point_tol = sv.real("fixed_point_tol", s.fixed_point_tol);
  s.max_picard = sv.integer("max_picard", s.max_picard);
  s.omega = sv.real("omega", s.omega);
  positive(sv, "residual_tol", s.residual_tol);
  positive(sv, "poisson_tol", s.poisson_tol);
  positive(sv, "picard_tol", s.picard_tol);
  positive(sv, "fixed_point_tol", s.fixed_point_tol);
  positive(sv, "max_picard", s.max_picard);
  if (!(s.omega > 0.0 && s.omega <= 1.0)) throw ConfigError("must lie in (0, 1]", sv.key("omega"), sv.line());
  const auto method = sv.string("method", "bracketed");
  if (method == "bracketed") {
    s.method = FixedPointMethod::Bracketed;
  } else if (method == "damped") {
    s.method = FixedPointMethod::Damped;
  } else {
    throw ConfigError("expected \"bracketed\" or \"damped\"", sv.key("method"), line_of(sv.require("method")));
  }

  // [sweep]
  const Section sw(subtable(root, "sweep"), "sweep", {"r", "r_start", "r_stop", "r_step", "threads", "coarse"});
  if (sw.has("r")) {
    cfg.sweep.r = sw.reals("r");
  } else if (sw.has("r_stop")) {
    const double a = sw.real("r_start", 0.0), b = sw.real("r_stop"), d = sw.real("r_step");
    positive(sw, "r_step", d);
    if (a < 0.0 || b < a) throw ConfigError("needs 0 <= r_start <= r_stop", sw.key("r_stop"), sw.line());
    const auto count = static_cast<long>(std::floor((b - a) / d + 1e-9));
    for (long i = 0; i <= count; ++i) cfg.sweep.r.push_back(a + d * static_cast<double>(i));
  }
  cfg.sweep.threads = sw.integer("threads", 0);
  cfg.sweep.coarse_comparison = sw.boolean("coarse", true);

  // [run]
  const Section rn(subtable(root, "run"), "run", {"out", "override_theory", "seed", "audit_samples", "oracle_starts"});
  cfg.out_dir = rn.string("out", cfg.out_dir);
  cfg.override_theory = rn.boolean("override_theory", false);
  const int seed = rn.integer("seed", 0);
  if (seed < 0) throw ConfigError("must be non-negative", rn.key("seed"), rn.line());
  cfg.seed = static_cast<std::uint64_t>(seed);
  cfg.audit_samples = rn.integer("audit_samples", cfg.audit_samples);
  cfg.oracle_starts = rn.integer("oracle_starts", cfg.oracle_starts);
  positive(rn, "audit_samples", cfg.audit_samples);
  positive(rn, "oracle_starts", cfg.oracle_starts);

  // Expressions are checked here so errors carry the key.
  try {
    make_coefficient(cfg);
  } catch (const Error& e) {
    throw ConfigError(e.what(), "coefficient", co.line());
  }
  try {
    make_source(cfg);
  } catch (const Error& e) {
    throw ConfigError(e.what(), "source.f", line_of(so.require("f")));
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file", path.string(), 0);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

Grid make_grid(const RunConfig& cfg) { return build_grid(cfg.domain, cfg.n); }

Coefficient make_coefficient(const RunConfig& cfg) {
  const auto& c = cfg.coefficient;
  switch (c.kind) {
    case CoefficientKind::Constant:
      return Coefficient::constant(c.value);
    case CoefficientKind::AffineInR:
      return Coefficient::affine_in_r(c.a, c.b);
    case CoefficientKind::PolynomialInT:
      return Coefficient::polynomial_in_t(c.coeffs, c.floor.value_or(0.0), c.m2, c.r_coeff);
    case CoefficientKind::GaussianBump:
      return Coefficient::gaussian_bump(c.a, c.b);
    case CoefficientKind::Expression:
      return Coefficient::from_expression(expr::parse(c.m, expr::VariableSet::coefficient()), c.floor.value_or(0.0),
                                          c.m2);
  }
  throw InvalidArgument("unknown coefficient kind");
}

SourceSpec make_source(const RunConfig& cfg) {
  return SourceSpec::from_expression(expr::parse(cfg.source.f, expr::VariableSet::source()), cfg.source.params);
}

CoupledOptions make_coupled_options(const RunConfig& cfg) {
  CoupledOptions o;
  o.semilinear.residual_tol = cfg.solver.residual_tol;
  o.poisson_tol = cfg.solver.poisson_tol;
  o.picard_tol = cfg.solver.picard_tol;
  o.max_picard = cfg.solver.max_picard;
  o.outside_theory = cfg.override_theory;
  return o;
}

FixedPointOptions make_fixed_point_options(const RunConfig& cfg) {
  FixedPointOptions o;
  o.tol = cfg.solver.fixed_point_tol;
  o.method = cfg.solver.method;
  o.omega = cfg.solver.omega;
  return o;
}

std::string config_hash(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace kirchhoff
