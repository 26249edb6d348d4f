#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kirchhoff/coefficient.hpp"
#include "kirchhoff/coupled.hpp"
#include "kirchhoff/grid.hpp"

namespace kirchhoff {

enum class AuditStatus { Pass, PassWithSurrogateGamma, Fail };

const char* to_string(AuditStatus s);

/// Sampled check of a declared inequality. `worst` is the smallest
/// observed margin (>= 0 when every sample held).
struct SampledCheck {
  bool applicable = true;
  bool pass = true;
  int samples = 0;
  double worst = 0.0;
  std::string witness;
};

struct FloorAudit {
  double declared = 0.0;
  double sampled_min = 0.0;
  bool pass = true;
  std::string witness;
};

struct NuBound {
  bool applicable = true;
  double nu = 0.0;
  double limit1 = 0.0;
  /// Uses the surrogate gamma.
  double limit2 = 0.0;
  bool pass = true;
  bool gamma_binding = false;
};

struct ThetaBound {
  bool applicable = true;
  double theta = 0.0;
  double limit = 0.0;
  bool pass = true;
};

struct HypothesisReport {
  double lambda1 = 0.0;
  double lambda1_discrete = 0.0;
  double gamma = 0.0;
  double volume = 0.0;

  FloorAudit m_floor;
  /// Present when the coefficient claims the shape condition.
  std::optional<M2Audit> m2;
  bool f1_pass = true;
  double f1_max_abs = 0.0;
  /// t-independence of a PureX load.
  SampledCheck pure_x;
  /// |f(x, t)| <= mu_bound + nu |t|^delta.
  SampledCheck growth;
  /// |f(x, t1) - f(x, t2)| <= theta |t1 - t2|.
  SampledCheck lipschitz;
  NuBound nu_bound;
  ThetaBound theta_bound;
  bool delta_pass = true;
  /// q > N/2 when q is declared.
  bool q_pass = true;

  AuditStatus overall = AuditStatus::Pass;
  std::vector<std::string> failures;
};

struct AuditOptions {
  AuditBox box;
  int samples = 10000;
  std::uint64_t seed = 0;
};

/// Side-effect free audit of the coefficient and source hypotheses on this
/// grid. Bounds use the continuous lambda1 and the surrogate gamma.
HypothesisReport audit(const Grid& grid, const Coefficient& coef, const SourceSpec& src,
                       const AuditOptions& opts = {});

}  // namespace kirchhoff
