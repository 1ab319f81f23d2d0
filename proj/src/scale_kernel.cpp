#include "shc/scale_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace shc {

double eval_psi(const ScalingProfile& profile, double r) {
  if (!(r > 0.0)) throw ArgumentError("eval_psi requires r > 0");
  const double value = r <= profile.R0 ? profile.psi(r)
                                        : profile.psi(profile.R0) * std::pow(r / profile.R0, profile.tail_exponent);
  if (!std::isfinite(value) || !(value > 0.0)) {
    std::ostringstream os;
    os << "profile '" << profile.name << "' returned psi(" << r << ") = " << value;
    throw InvalidProfileError(os.str());
  }
  return value;
}

WlscReport verify_wlsc(const ScalingProfile& profile, const std::vector<std::pair<double, double>>& grid,
                       std::optional<double> alpha) {
  if (grid.empty()) throw ArgumentError("verify_wlsc needs a non-empty grid");
  WlscReport rep;
  rep.alpha = alpha.value_or(profile.alpha);
  rep.C_psi = profile.C_psi;
  rep.min_ratio = std::numeric_limits<double>::infinity();
  for (const auto& [r, R] : grid) {
    if (!(r > 0.0 && r <= R && R < profile.R0))
      throw ArgumentError("verify_wlsc pairs must satisfy 0 < r <= R < R0");
    const double ratio = eval_psi(profile, R) / eval_psi(profile, r) * std::pow(r / R, rep.alpha);
    if (ratio < rep.min_ratio) {
      rep.min_ratio = ratio;
      rep.argmin_r = r;
      rep.argmin_R = R;
    }
  }
  rep.pairs = grid.size();
  // Relative slack for rounding when the bound is saturated (exact power laws).
  rep.pass = rep.min_ratio >= rep.C_psi * (1.0 - 1e-12);
  return rep;
}

std::vector<std::pair<double, double>> log_spaced_pairs(double R0, int n, double lo_frac, double hi_frac) {
  std::vector<double> radii(n);
  const double lo = std::log(R0 * lo_frac);
  const double hi = std::log(R0 * hi_frac);
  for (int i = 0; i < n; ++i) radii[i] = std::exp(lo + (hi - lo) * i / std::max(1, n - 1));
  std::vector<std::pair<double, double>> pairs;
  pairs.reserve(static_cast<std::size_t>(n) * (n + 1) / 2);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) pairs.emplace_back(radii[i], radii[j]);
  return pairs;
}

// ---------------------------------------------------------------------------

ScaleFunction::ScaleFunction(std::optional<ScalingProfile> profile, double a_norm, quad::Options opt)
    : profile_(std::move(profile)), a_norm_(a_norm), opt_(opt) {
  if (a_norm_ < 0.0) throw ArgumentError("||A|| must be non-negative");
  if (!profile_) {
    if (!(a_norm_ > 0.0)) throw DegenerateScaleError("scale function needs jumps or a diffusion");
    return;
  }
  validate(*profile_);
  const ScalingProfile& p = *profile_;
  auto integrand = [&p](double s) { return s / eval_psi(p, s); };

  std::vector<double> panels;
  nodes_.push_back(p.R0);
  double upper = p.R0;
  double total = 0.0;
  double tail = std::numeric_limits<double>::quiet_NaN();
  for (int k = 0; k < opt_.max_panels; ++k) {
    const double lower = upper * opt_.grading;
    const quad::Result panel = quad::adaptive(integrand, lower, upper, opt_);
    if (!panel.converged) {
      std::ostringstream os;
      os << "panel [" << lower << ", " << upper << "] of int s/psi(s) did not converge";
      throw NumericError(os.str());
    }
    panels.push_back(panel.value);
    nodes_.push_back(lower);
    total += panel.value;
    upper = lower;
    if (k >= 2) {
      const double ratio = panel.value / panels[panels.size() - 2];
      if (ratio > 0.0 && ratio < 1.0) {
        const double t = panel.value * ratio / (1.0 - ratio);
        if (t <= 0.1 * opt_.rtol * total) {
          tail = t;
          tail_power_ = std::log(ratio) / std::log(opt_.grading);  // I(r) ~ r^{tail_power_}
          break;
        }
      }
    }
  }
  if (std::isnan(tail)) {
    std::ostringstream os;
    os << "int_0^R0 s/psi(s) ds did not converge after " << panels.size()
       << " graded panels (last panel " << (panels.empty() ? 0.0 : panels.back()) << ", running total "
       << total << ")";
    throw NumericError(os.str());
  }
  cumulative_.assign(nodes_.size(), 0.0);
  cumulative_.back() = tail;
  for (std::size_t k = panels.size(); k-- > 0;) cumulative_[k] = cumulative_[k + 1] + panels[k];
}

ScaleFunction ScaleFunction::of(const LevyModel& model, quad::Options opt) {
  std::optional<ScalingProfile> profile;
  if (model.jumps) profile = model.jumps->profile;
  return ScaleFunction(std::move(profile), model.a_norm(), opt);
}

double ScaleFunction::R0() const {
  return profile_ ? profile_->R0 : std::numeric_limits<double>::infinity();
}

double ScaleFunction::small_jump_integral(double r) const {
  if (!profile_) return 0.0;
  const ScalingProfile& p = *profile_;
  if (r > p.R0) {
    const double e = 2.0 - p.tail_exponent;
    const double c = std::pow(p.R0, p.tail_exponent) / eval_psi(p, p.R0);
    const double extra = std::abs(e) < 1e-12 ? c * std::log(r / p.R0)
                                             : c * (std::pow(r, e) - std::pow(p.R0, e)) / e;
    return cumulative_.front() + extra;
  }
  // nodes_[k] = R0 q^k; locate k with nodes_[k+1] < r <= nodes_[k].
  const double q = opt_.grading;
  std::size_t k = static_cast<std::size_t>(std::max(0.0, std::floor(std::log(r / p.R0) / std::log(q))));
  while (k > 0 && nodes_[k] < r) --k;
  while (k + 1 < nodes_.size() && nodes_[k + 1] >= r) ++k;
  if (k + 1 >= nodes_.size()) return cumulative_.back() * std::pow(r / nodes_.back(), tail_power_);
  auto integrand = [&p](double s) { return s / eval_psi(p, s); };
  const quad::Result part = quad::adaptive(integrand, nodes_[k + 1], r, opt_);
  return cumulative_[k + 1] + quad::require(part, "int s/psi(s)");
}

double ScaleFunction::phi(double r) const {
  if (!(r > 0.0)) throw ArgumentError("phi requires r > 0");
  if (profile_ && r > profile_->R0 * (1.0 + 1e-12)) throw ArgumentError("phi requires r <= R0");
  return phi_extended(std::min(r, R0()));
}

double ScaleFunction::phi_extended(double r) const {
  if (!(r > 0.0)) throw ArgumentError("phi requires r > 0");
  const double denom = a_norm_ + 2.0 * small_jump_integral(r);
  if (!(denom > 0.0) || !std::isfinite(denom)) throw DegenerateScaleError("phi denominator is not positive");
  return r * r / denom;
}

double eval_phi(const ScaleFunction& sf, double r) { return sf.phi(r); }

double phi_inverse(const ScaleFunction& sf, double t) {
  if (!(t > 0.0)) throw ArgumentError("phi_inverse needs t > 0");
  if (!sf.profile()) return std::sqrt(sf.a_norm() * t);
  const double R0 = sf.R0();
  double lo = std::log(R0 * 1e-12), hi = std::log(R0);
  if (t >= sf.phi(R0)) return R0;
  if (t <= sf.phi(std::exp(lo))) return std::exp(lo);
  for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (sf.phi(std::exp(mid)) < t)
      lo = mid;
    else
      hi = mid;
  }
  return std::exp(0.5 * (lo + hi));
}

double invert_monotone(const std::function<double(double)>& f, double t, double lo, double hi,
                       const InvertOptions& opt) {
  if (!(lo < hi)) throw BracketError("invert_monotone needs lo < hi");
  const int n = std::max(2, opt.monotone_grid);
  double prev = f(lo);
  const double f_lo = prev;
  for (int i = 1; i < n; ++i) {
    const double x = lo + (hi - lo) * i / (n - 1);
    const double v = f(x);
    if (!(v >= prev)) {
      std::ostringstream os;
      os << "map is not non-decreasing on [" << lo << ", " << hi << "] near x = " << x;
      throw DegenerateScaleError(os.str());
    }
    prev = v;
  }
  const double f_hi = prev;
  if (!(t >= f_lo && t <= f_hi)) {
    std::ostringstream os;
    os << "target " << t << " outside [" << f_lo << ", " << f_hi << "]";
    throw BracketError(os.str());
  }
  double a = lo, b = hi;
  while (b - a > opt.tol) {
    const double m = 0.5 * (a + b);
    if (m <= a || m >= b) break;
    if (f(m) < t)
      a = m;
    else
      b = m;
  }
  return 0.5 * (a + b);
}

// ---------------------------------------------------------------------------

namespace {

double beyond(const RadialJumpLaw& law, double x) {
  // int_x^inf ds / (s psi(s)) for x >= R0
  if (law.tail == TailMode::Truncated) return 0.0;
  const ScalingProfile& p = law.profile;
  return std::pow(p.R0 / x, p.tail_exponent) / (p.tail_exponent * eval_psi(p, p.R0));
}

}  // namespace

double radial_tail(const RadialJumpLaw& law, int /*d*/, double r) {
  if (!(r > 0.0)) throw ArgumentError("tail mass requires r > 0");
  const ScalingProfile& p = law.profile;
  if (law.tail == TailMode::Extended && !(p.tail_exponent > 0.0))
    throw InvalidModelError("divergent tail: extension exponent must be positive");
  if (r >= p.R0) return law.kappa * beyond(law, r);
  auto integrand = [&p](double s) { return 1.0 / (s * eval_psi(p, s)); };
  quad::Options opt;
  const double inner = quad::require(quad::graded_from_left(integrand, r, p.R0, opt), "Levy tail mass");
  const double value = law.kappa * (inner + beyond(law, p.R0));
  if (!std::isfinite(value)) throw InvalidModelError("Levy tail mass is not finite");
  return value;
}

double levy_tail_mass(const RadialJumpLaw& law, int d, double r) { return omega(d) * radial_tail(law, d, r); }

double levy_tail_mass(const LevyModel& model, double r) {
  if (!model.jumps) return 0.0;
  return levy_tail_mass(*model.jumps, model.dim, r);
}

double levy_c3(const RadialJumpLaw& law, int d) {
  const ScalingProfile& p = law.profile;
  auto integrand = [&p](double s) { return s / eval_psi(p, s); };
  const double inner = quad::require(quad::graded_from_zero(integrand, p.R0), "int_0^R0 s/psi(s) ds");
  return omega(d) * law.kappa * (inner / (p.R0 * p.R0) + beyond(law, p.R0));
}

TailConstants tail_constants(const RadialJumpLaw& law, int d) {
  return TailConstants{law.kappa, law.kappa, levy_c3(law, d)};
}

TailBounds tail_bounds(const ScalingProfile& profile, const TailConstants& c, int d, double r) {
  if (!(r > 0.0)) throw ArgumentError("tail_bounds requires r > 0");
  if (r > 0.5 * profile.R0 * (1.0 + 1e-14)) throw OutOfRangeError("tail_bounds requires r <= R0/2");
  const double w = omega(d);
  TailBounds b;
  b.lower = c.C1 * w / (2.0 * eval_psi(profile, 2.0 * r));
  b.upper = (w * c.C2 / (profile.alpha * profile.C_psi) + c.C3 * eval_psi(profile, profile.R0)) /
            eval_psi(profile, r);
  return b;
}

// ---------------------------------------------------------------------------

const char* to_string(Variation v) { return v == Variation::Unbounded ? "unbounded" : "bounded"; }

namespace {

double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxx > 0.0 ? sxy / sxx : 0.0;
}

}  // namespace

VariationClass classify_variation(const LevyModel& model, std::optional<Variation> declared) {
  VariationClass vc;
  if (model.has_diffusion()) {
    vc.kind = Variation::Unbounded;
    vc.diffusion = true;
    vc.diagnosed = true;
    if (declared && *declared != vc.kind)
      throw ClassificationConflictError("declared bounded variation but the diffusion matrix is non-degenerate");
    return vc;
  }
  if (!model.jumps) throw InvalidModelError("model has no jump law to classify");
  const ScalingProfile& p = model.jumps->profile;
  constexpr int kLevels = 120;
  constexpr int kWindow = 8;
  std::vector<double> increments;
  double running = 0.0;
  auto integrand = [&p](double r) { return 1.0 / eval_psi(p, r); };
  for (int k = 1; k <= kLevels; ++k) {
    const double hi = p.R0 * std::ldexp(1.0, -(k - 1));
    const double lo = 0.5 * hi;
    const double inc = quad::require(quad::adaptive(integrand, lo, hi), "int dr/psi(r)");
    increments.push_back(inc);
    running += inc;
    vc.integral.push_back(running);
  }
  const double I_last = vc.integral.back();
  vc.last_levels_relative_change = (I_last - vc.integral[kLevels - 1 - kWindow]) / I_last;
  double ratio_sum = 0.0;
  for (int k = kLevels - kWindow; k < kLevels; ++k) ratio_sum += increments[k] / increments[k - 1];
  vc.increment_ratio = ratio_sum / kWindow;

  std::vector<double> xs_log, xs_pow, ys, lk, ld;
  for (int k = kLevels - 2 * kWindow; k < kLevels; ++k) {
    const double eps = p.R0 * std::ldexp(1.0, -(k + 1));
    xs_log.push_back(std::log(1.0 / eps));
    xs_pow.push_back(std::pow(eps, -(1.0 - p.alpha)));
    ys.push_back(vc.integral[k]);
    lk.push_back(std::log(k + 1.0));
    ld.push_back(std::log(increments[k]));
  }
  vc.log_growth_slope = ls_slope(xs_log, ys);
  vc.power_growth_slope = p.alpha < 1.0 ? ls_slope(xs_pow, ys) : 0.0;
  // Increments behaving like k^{-gamma}: the dyadic series diverges iff gamma <= 1.
  const double gamma = -ls_slope(lk, ld);

  std::optional<Variation> diagnosis;
  if (vc.last_levels_relative_change < 1e-3)
    diagnosis = Variation::Bounded;
  else if (gamma < 0.9)
    diagnosis = Variation::Unbounded;

  if (diagnosis) {
    vc.kind = *diagnosis;
    vc.diagnosed = true;
    if (declared && *declared != *diagnosis) {
      std::ostringstream os;
      os << "declared " << to_string(*declared) << " variation contradicts the diagnostic ("
         << to_string(*diagnosis) << ", relative change " << vc.last_levels_relative_change << ")";
      throw ClassificationConflictError(os.str());
    }
    return vc;
  }
  if (!declared) {
    std::ostringstream os;
    os << "variation class is indeterminate: relative change over the last " << kWindow << " dyadic levels "
       << vc.last_levels_relative_change << ", increment decay exponent " << gamma;
    throw IndeterminateClassificationError(os.str());
  }
  vc.kind = *declared;
  vc.diagnosed = false;
  return vc;
}

}  // namespace shc
