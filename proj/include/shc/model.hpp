#pragma once

#include "shc/core.hpp"
#include "shc/profile.hpp"

#include <optional>
#include <string>

namespace shc {

enum class TailMode {
  Extended,   // density continues beyond R0 with the profile's power extension
  Truncated,  // density is zero beyond R0
};

/// Isotropic jump density j(x) = kappa / (|x|^d psi(|x|)) for |x| <= R0.
struct RadialJumpLaw {
  ScalingProfile profile;
  double kappa = 1.0;
  TailMode tail = TailMode::Extended;
};

/// Symmetric Levy process with triplet (A, 0, J dx) in R^d.
struct LevyModel {
  std::string name;
  int dim = 2;
  std::optional<Mat> diffusion;          // zero when absent, otherwise SPD
  std::optional<RadialJumpLaw> jumps;    // none for pure diffusions
  std::optional<double> exact_stable;    // sample jumps as an exact isotropic stable law
  bool isotropic = true;

  bool has_diffusion() const { return diffusion.has_value(); }
  bool has_jumps() const { return jumps.has_value(); }
  /// Operator norm of A (0 when A = 0).
  double a_norm() const;
  double a_trace() const;
  /// nu^T A nu (0 when A = 0).
  double a_quadratic(const Vec& nu) const;
};

/// Kernel constant giving the isotropic stable law with exponent |xi|^beta:
/// beta 2^{beta-1} Gamma((d+beta)/2) / (pi^{d/2} Gamma(1-beta/2)).
double stable_kernel_constant(int d, double beta);

/// Radial jump density j(r) (0 where the law is truncated).
double jump_density(const RadialJumpLaw& law, int d, double r);

/// Checks dimensions, positive definiteness of A and finiteness of the Levy measure
/// integral of (1 ^ |x|^2); throws InvalidModelError.
void validate(const LevyModel& m);

namespace models {

LevyModel brownian(int d, const Mat& A);
LevyModel brownian(int d, double scale = 1.0);
LevyModel stable(int d, double beta);
LevyModel jump_diffusion(int d, const Mat& A, double beta);
LevyModel truncated_stable(int d, double beta, double R0);
LevyModel radial_density(int d, ScalingProfile profile, double kappa,
                         TailMode tail = TailMode::Extended);

}  // namespace models

}  // namespace shc
