#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "kirchhoff/expr.hpp"

namespace kirchhoff {

/// The (t, r) box over which a black-box m is audited by sampling.
struct AuditBox {
  double t_low = -50.0;
  double t_high = 50.0;
  double r_low = 0.0;
  double r_high = 100.0;
};

/// The nonlocal coefficient m(t, r) > 0 together with its declared floor and
/// the two primitives the solver needs:
///   M_r(t)    = ∫_0^t m(s, r) ds
///   Mhat_r(t) = ∫_0^t M_r(s) ds = ∫_0^t (t - s) m(s, r) ds
/// Catalog entries carry closed forms; everything else is integrated by
/// adaptive Simpson (abs tol 1e-12, depth 40). Immutable, cheap to copy.
class Coefficient {
 public:
  using Function = std::function<double(double t, double r)>;

  static Coefficient constant(double value);
  /// m = a + b r.
  static Coefficient affine_in_r(double a, double b);
  /// m = sum_k coeffs[k] t^k + r_coeff * r. The floor is declared.
  static Coefficient polynomial_in_t(std::vector<double> coeffs, double m_floor, bool supports_m2,
                                     double r_coeff = 0.0);
  /// m = a + b r exp(-t^2).
  static Coefficient gaussian_bump(double a, double b);
  static Coefficient from_expression(const expr::Expr& m, double m_floor, bool supports_m2);
  static Coefficient from_function(Function m, double m_floor, bool supports_m2, std::string description);

  double m(double t, double r) const;
  double M(double t, double r) const;
  double M_hat(double t, double r) const;
  /// ∫_a^b m(s, r) ds, by quadrature over [a, b] only.
  double M_between(double a, double b, double r) const;

  double m_floor() const;
  /// The caller's claim that (m2) holds: m_r decreasing on (-inf, 0) and
  /// increasing on (0, inf).
  bool supports_m2() const;
  bool depends_on_r() const;
  bool has_closed_form() const;
  const std::string& description() const;

  /// Slope of M_r when M_r is linear in t (m independent of t).
  std::optional<double> linear_slope(double r) const;

  struct Impl;

 private:
  explicit Coefficient(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<const Impl> impl_;
};

double big_M(const Coefficient& coef, double t, double r);

/// t with |M_r(t) - y| <= 1e-10, by bracketing on [0, y/floor] and bisection.
double big_M_inverse(const Coefficient& coef, double y, double r);

struct Thresholds {
  double tau1 = 0.0;
  double tau2 = 0.0;
};

/// τ1 < 0 < τ2 with M_r(τ1) = -c and M_r(τ2) = c.
Thresholds find_thresholds(const Coefficient& coef, double r, double c);

/// M_r clamped to its values at τ1 and τ2.
class TruncatedM {
 public:
  TruncatedM(Coefficient base, double r, double tau1, double tau2);
  /// Thresholds from find_thresholds(base, r, level).
  static TruncatedM at_level(Coefficient base, double r, double level);

  double eval(double t) const;
  /// One-sided derivative m_r(clamp(t)); used as the Newton slope.
  double slope(double t) const;
  /// Primitive of eval vanishing at 0.
  double primitive(double t) const;

  double tau1() const { return tau1_; }
  double tau2() const { return tau2_; }
  double lower_value() const { return low_value_; }
  double upper_value() const { return high_value_; }
  double r() const { return r_; }
  const Coefficient& base() const { return base_; }

 private:
  Coefficient base_;
  double r_;
  double tau1_;
  double tau2_;
  double low_value_;
  double high_value_;
  double low_primitive_;
  double high_primitive_;
};

double truncated_M_eval(const TruncatedM& trunc, double t);

enum class CheckStatus { Pass, Fail, Skipped };

struct PropertyCheck {
  std::string id;
  std::string description;
  CheckStatus status = CheckStatus::Skipped;
  int samples = 0;
  int violations = 0;
  /// Most negative slack met; >= 0 means every sample held.
  double worst_slack = 0.0;
  std::string witness;
};

struct PropertyReport {
  std::vector<PropertyCheck> checks;

  const PropertyCheck& get(const std::string& id) const;
  bool all_passed() const;
};

struct PropertyOptions {
  AuditBox box;
  /// Inverse-map checks sample y in [-y_range, y_range].
  double y_range = 10.0;
  std::uint64_t seed = 0;
};

/// Sampled verification of the monotone-primitive properties:
///  a  sign condition, strict monotonicity and |M_r(t)| >= floor |t|
///  b  joint sequential continuity of (t, r) -> M_r(t)
///  c  inverse is Lipschitz with constant 1/floor
///  d  joint continuity of (t, r) -> M_r^{-1}(t)        [only under (m2)]
///  e  M_r^{-1}(t)/t decreasing on (0, inf), increasing on (-inf, 0)  [(m2)]
/// `sample_budget` (>= 100) is the number of points used for (a); the other
/// checks scale from it.
PropertyReport check_lemma_properties(const Coefficient& coef, int sample_budget, const PropertyOptions& opts = {});

/// Lattice check of the (m2) shape of m_r over the audit box. Returns the
/// worst monotonicity defect found (<= 0 means the shape holds).
struct M2Audit {
  bool pass = true;
  double worst_defect = 0.0;
  std::string witness;
};
M2Audit audit_m2_shape(const Coefficient& coef, const AuditBox& box, int r_samples = 16, int t_samples = 256);

}  // namespace kirchhoff
