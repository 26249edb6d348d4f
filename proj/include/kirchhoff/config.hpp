#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kirchhoff/coefficient.hpp"
#include "kirchhoff/coupled.hpp"
#include "kirchhoff/error.hpp"
#include "kirchhoff/fixedpoint.hpp"
#include "kirchhoff/grid.hpp"

namespace kirchhoff {

/// Bad or missing configuration entry. `line` is 0 when unknown.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, std::string key, int line)
      : Error(format(what, key, line)), key_(std::move(key)), line_(line) {}

  const std::string& key() const noexcept { return key_; }
  int line() const noexcept { return line_; }

 private:
  static std::string format(const std::string& what, const std::string& key, int line);
  std::string key_;
  int line_;
};

enum class CoefficientKind { Constant, AffineInR, PolynomialInT, GaussianBump, Expression };

struct CoefficientConfig {
  CoefficientKind kind = CoefficientKind::Expression;
  /// Expression for m(t, r) (kind = Expression).
  std::string m;
  /// Declared floor; catalog entries fill it in when absent.
  std::optional<double> floor;
  /// Shape claim for the inverse-map properties (expression and polynomial
  /// kinds only).
  bool m2 = false;
  /// Catalog parameters: value (constant), a, b (affine, bump),
  /// coeffs, r_coeff (polynomial).
  double value = 1.0;
  double a = 1.0;
  double b = 0.0;
  std::vector<double> coeffs;
  double r_coeff = 0.0;
  AuditBox box;
};

struct SourceConfig {
  std::string f;
  SourceParams params;
};

struct SolverConfig {
  double residual_tol = 1e-9;
  double poisson_tol = 1e-12;
  double picard_tol = 1e-10;
  int max_picard = 500;
  double fixed_point_tol = 1e-8;
  FixedPointMethod method = FixedPointMethod::Bracketed;
  double omega = 0.5;
};

struct SweepConfig {
  std::vector<double> r;
  int threads = 0;
  bool coarse_comparison = true;
};

struct RunConfig {
  Domain domain = Domain::interval(0.0, 1.0);
  std::vector<int> n;
  CoefficientConfig coefficient;
  SourceConfig source;
  SolverConfig solver;
  SweepConfig sweep;
  std::string out_dir = "out";
  bool override_theory = false;
  std::uint64_t seed = 0;
  int audit_samples = 10000;
  int oracle_starts = 10;

  /// Raw text the config was read from, for hashing.
  std::string text;
  std::string origin;
};

/// TOML document with sections [domain], [coefficient], [source], [solver],
/// [sweep], [run]. Real-valued entries accept numbers or constant
/// expressions such as "pi/2".
RunConfig parse_config(std::string_view text, const std::string& origin = "<config>");
RunConfig load_config(const std::filesystem::path& path);

Grid make_grid(const RunConfig& cfg);
Coefficient make_coefficient(const RunConfig& cfg);
SourceSpec make_source(const RunConfig& cfg);
CoupledOptions make_coupled_options(const RunConfig& cfg);
FixedPointOptions make_fixed_point_options(const RunConfig& cfg);

/// 64-bit FNV-1a of the config text, as 16 hex digits.
std::string config_hash(std::string_view text);

}  // namespace kirchhoff
