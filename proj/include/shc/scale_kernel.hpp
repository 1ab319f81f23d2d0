#pragma once

#include "shc/model.hpp"
#include "shc/profile.hpp"
#include "shc/quadrature.hpp"

#include <functional>
#include <optional>
#include <utility>
#include <vector>

namespace shc {

/// psi(r) for r <= R0, psi(R0) (r/R0)^tail_exponent beyond.
double eval_psi(const ScalingProfile& profile, double r);

struct WlscReport {
  double alpha = 0.0;
  double C_psi = 0.0;
  double min_ratio = 0.0;  // min over pairs of psi(R)/psi(r) (r/R)^alpha
  double argmin_r = 0.0;
  double argmin_R = 0.0;
  std::size_t pairs = 0;
  bool pass = false;
};

/// Scans (r, R) pairs with 0 < r <= R < R0. `alpha` overrides the profile's index.
WlscReport verify_wlsc(const ScalingProfile& profile, const std::vector<std::pair<double, double>>& grid,
                       std::optional<double> alpha = std::nullopt);

/// All pairs r_i <= r_j from n log-spaced radii in [R0 * lo_frac, R0 * hi_frac].
std::vector<std::pair<double, double>> log_spaced_pairs(double R0, int n, double lo_frac = 1e-6,
                                                        double hi_frac = 0.999);

/// phi(r) = r^2 / (||A|| + 2 int_0^r s/psi(s) ds), with the inner integral cached on a
/// graded mesh r_k = R0 q^k. Immutable after construction.
class ScaleFunction {
 public:
  ScaleFunction(std::optional<ScalingProfile> profile, double a_norm, quad::Options opt = {});
  static ScaleFunction of(const LevyModel& model, quad::Options opt = {});

  /// phi on (0, R0]; r > R0 raises ArgumentError. Pure diffusions accept any r > 0.
  double phi(double r) const;
  /// phi built from the extended psi, defined for all r > 0.
  double phi_extended(double r) const;
  /// int_0^r s / psi(s) ds for r <= R0 (extended psi beyond).
  double small_jump_integral(double r) const;

  double R0() const;
  double a_norm() const { return a_norm_; }
  const std::optional<ScalingProfile>& profile() const { return profile_; }
  /// c = 2 int_0^{R0} s/psi(s) ds; (c + ||A||)^{-1} r^2 <= phi(r) <= ||A||^{-1} r^2.
  double square_constant() const { return 2.0 * small_jump_integral(R0()); }

 private:
  std::optional<ScalingProfile> profile_;
  double a_norm_ = 0.0;
  quad::Options opt_;
  std::vector<double> nodes_;       // R0 q^k, decreasing
  std::vector<double> cumulative_;  // int_0^{nodes_[k]}
  double tail_power_ = 0.0;         // local exponent of s/psi(s) below the last node
};

/// Convenience wrapper over ScaleFunction::phi.
double eval_phi(const ScaleFunction& sf, double r);

/// phi^{-1}(t) by bisection in log r over [R0 1e-12, R0], clamped to that range;
/// sqrt(||A|| t) for pure diffusions.
double phi_inverse(const ScaleFunction& sf, double t);

struct InvertOptions {
  double tol = 1e-12;
  int monotone_grid = 64;
};

/// Bisection for f(r) = t on [lo, hi] after checking f is non-decreasing on a grid.
double invert_monotone(const std::function<double(double)>& f, double t, double lo, double hi,
                       const InvertOptions& opt = {});

/// Surface-integrated radial tail int_r^inf j(s) s^{d-1} ds (no omega_d factor).
double radial_tail(const RadialJumpLaw& law, int d, double r);

/// J(B(0, r)^c) = omega_d int_r^inf j(s) s^{d-1} ds.
double levy_tail_mass(const LevyModel& model, double r);
double levy_tail_mass(const RadialJumpLaw& law, int d, double r);

/// C3 = int (1 ^ |x|^2 / R0^2) J(x) dx.
double levy_c3(const RadialJumpLaw& law, int d);

struct TailConstants {
  double C1 = 1.0;
  double C2 = 1.0;
  double C3 = 0.0;
};

/// Constants of the jump-density comparison for a radial law: C1 = C2 = kappa.
TailConstants tail_constants(const RadialJumpLaw& law, int d);

struct TailBounds {
  double lower = 0.0;
  double upper = 0.0;
};

/// (C1 omega_d / (2 psi(2r)), (omega_d C2 / (alpha C_psi) + C3 psi(R0)) / psi(r)) for r <= R0/2.
TailBounds tail_bounds(const ScalingProfile& profile, const TailConstants& constants, int d, double r);

enum class Variation { Unbounded, Bounded };

const char* to_string(Variation v);

struct VariationClass {
  Variation kind = Variation::Unbounded;
  bool diffusion = false;
  bool diagnosed = false;  // false when the answer came only from a declaration
  // I(eps_k) = int_{eps_k}^{R0} dr / psi(r), eps_k = R0 2^{-k}
  std::vector<double> integral;
  double last_levels_relative_change = 0.0;
  double increment_ratio = 0.0;  // mean ratio of successive dyadic increments, last 8 levels
  double log_growth_slope = 0.0;    // fit of I against log(1/eps)
  double power_growth_slope = 0.0;  // fit of I against eps^{-(1-alpha)}
};

/// Diagnoses bounded vs unbounded variation. A declaration is authoritative when the
/// diagnostic is inconclusive and is cross-checked otherwise.
VariationClass classify_variation(const LevyModel& model, std::optional<Variation> declared = std::nullopt);

}  // namespace shc
