#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace shc {

/// Radial scale function psi on (0, R0] together with its lower weak scaling
/// certificate psi(R)/psi(r) >= C_psi (R/r)^alpha for 0 < r <= R < R0.
/// Beyond R0, psi is extended as psi(R0) (r/R0)^tail_exponent.
struct ScalingProfile {
  std::string name;
  std::function<double(double)> psi;
  double R0 = 1.0;
  double alpha = 1.0;
  double C_psi = 1.0;
  double tail_exponent = 1.0;
};

/// Checks R0 > 0, alpha in (0, 2], C_psi in (0, 1], tail_exponent > 0.
void validate(const ScalingProfile& p);

ScalingProfile stable_profile(double beta, double R0 = 1.0);

/// psi(r) = r log(1 + 1/r)^b. For b <= 0 the certificate is alpha = 1, C_psi = 1;
/// for b > 0 a smaller alpha must be supplied and C_psi is found by a grid scan.
ScalingProfile stable_log_profile(double b, double R0 = 1.0, double alpha = 0.0);

/// psi(r) = r^{a(r)}, a(r) = a1 + (a2 - a1) r on (0, 1). Certified with alpha = a1
/// and C_psi = exp(-(a2 - a1)/e), the infimum of g(R)/g(r), g(r) = r^{(a2-a1) r}.
ScalingProfile variable_order_profile(double a1, double a2);

/// Tabulated (r, psi) pairs, monotone cubic interpolation in log-log space;
/// below the first node psi follows the first segment's power law.
ScalingProfile tabulated_profile(std::vector<double> r, std::vector<double> psi, double alpha,
                                 double C_psi, std::string name = "tabulated");

/// Infimum of psi(R)/psi(r) (r/R)^alpha over a log grid on [R0 * lo_frac, R0),
/// computed exactly over all grid pairs r <= R.
double scan_wlsc_constant(const std::function<double(double)>& psi, double R0, double alpha,
                          int n = 2000, double lo_frac = 1e-10);

}  // namespace shc
