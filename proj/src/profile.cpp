#include "shc/profile.hpp"

#include "shc/core.hpp"

#include <cmath>
using std::isnan;
#include <boost/math/interpolators/pchip.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace shc {

void validate(const ScalingProfile& p) {
  std::ostringstream os;
  if (!p.psi) os << "psi is empty; ";
  if (!(p.R0 > 0.0)) os << "R0 must be positive; ";
  if (!(p.alpha > 0.0 && p.alpha <= 2.0)) os << "alpha must lie in (0, 2]; ";
  if (!(p.C_psi > 0.0 && p.C_psi <= 1.0)) os << "C_psi must lie in (0, 1]; ";
  if (!(p.tail_exponent > 0.0)) os << "tail_exponent must be positive; ";
  if (!os.str().empty()) throw InvalidProfileError("profile '" + p.name + "': " + os.str());
}

ScalingProfile stable_profile(double beta, double R0) {
  if (!(beta > 0.0 && beta < 2.0)) throw ArgumentError("stable index must lie in (0, 2)");
  ScalingProfile p;
  p.name = "stable";
  p.psi = [beta](double r) { return std::pow(r, beta); };
  p.R0 = R0;
  p.alpha = beta;
  p.C_psi = 1.0;
  p.tail_exponent = beta;
  validate(p);
  return p;
}

ScalingProfile stable_log_profile(double b, double R0, double alpha) {
  if (!(b > -1.0)) throw ArgumentError("stable-log exponent must exceed -1");
  ScalingProfile p;
  p.name = "stable-log";
  p.psi = [b](double r) { return r * std::pow(std::log1p(1.0 / r), b); };
  p.R0 = R0;
  if (b <= 0.0) {
    // log(1 + 1/r)^b is non-decreasing in r when b <= 0.
    p.alpha = alpha > 0.0 ? alpha : 1.0;
    p.C_psi = p.alpha <= 1.0 ? 1.0 : scan_wlsc_constant(p.psi, R0, p.alpha);
  } else {
    p.alpha = alpha > 0.0 ? alpha : 0.5;
    p.C_psi = scan_wlsc_constant(p.psi, R0, p.alpha);
  }
  p.tail_exponent = p.alpha;
  validate(p);
  return p;
}

ScalingProfile variable_order_profile(double a1, double a2) {
  if (!(a1 > 0.0 && a1 <= a2 && a2 < 2.0)) throw ArgumentError("need 0 < a1 <= a2 < 2");
  ScalingProfile p;
  p.name = "variable-order";
  p.psi = [a1, a2](double r) { return std::pow(r, a1 + (a2 - a1) * r); };
  p.R0 = 1.0;
  p.alpha = a1;
  p.C_psi = std::exp(-(a2 - a1) / std::numbers::e);
  p.tail_exponent = a2;
  validate(p);
  return p;
}

ScalingProfile tabulated_profile(std::vector<double> r, std::vector<double> psi, double alpha,
                                 double C_psi, std::string name) {
  if (r.size() != psi.size() || r.size() < 4)
    throw InvalidProfileError("tabulated profile needs at least 4 matching (r, psi) pairs");
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (!(r[i] > 0.0) || !(psi[i] > 0.0) || !std::isfinite(psi[i]))
      throw InvalidProfileError("tabulated profile values must be positive and finite");
    if (i > 0 && !(r[i] > r[i - 1])) throw InvalidProfileError("tabulated radii must increase");
    if (i > 0 && psi[i] < psi[i - 1]) throw InvalidProfileError("tabulated psi must be non-decreasing");
  }
  const double r_lo = r.front();
  const double psi_lo = psi.front();
  const double slope = std::log(psi[1] / psi[0]) / std::log(r[1] / r[0]);
  std::vector<double> lr(r.size()), lp(r.size());
  std::transform(r.begin(), r.end(), lr.begin(), [](double x) { return std::log(x); });
  std::transform(psi.begin(), psi.end(), lp.begin(), [](double x) { return std::log(x); });
  const double R0 = r.back();
  auto spline = std::make_shared<boost::math::interpolators::pchip<std::vector<double>>>(
      std::move(lr), std::move(lp));

  ScalingProfile p;
  p.name = std::move(name);
  p.psi = [spline, r_lo, psi_lo, slope](double x) {
    if (x < r_lo) return psi_lo * std::pow(x / r_lo, slope);
    return std::exp((*spline)(std::log(x)));
  };
  p.R0 = R0;
  p.alpha = alpha;
  p.C_psi = C_psi;
  p.tail_exponent = alpha;
  validate(p);
  return p;
}

double scan_wlsc_constant(const std::function<double(double)>& psi, double R0, double alpha, int n,
                          double lo_frac) {
  // With f = psi / r^alpha, the constant is min over R of f(R) / max_{r <= R} f(r).
  double best = 1.0;
  double running_max = 0.0;
  const double lo = std::log(R0 * lo_frac);
  const double hi = std::log(R0);
  for (int i = 0; i < n; ++i) {
    const double r = std::exp(lo + (hi - lo) * i / n);  // stays below R0
    const double f = psi(r) / std::pow(r, alpha);
    running_max = std::max(running_max, f);
    best = std::min(best, f / running_max);
  }
  return best;
}

}  // namespace shc
