#pragma once

#include "shc/core.hpp"
#include "shc/geometry.hpp"
#include "shc/model.hpp"
#include "shc/sampling.hpp"
#include "shc/scale_kernel.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace shc {

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
  std::uint64_t n = 0;
  std::uint64_t seed = 0;
  double wall_ms = 0.0;
  // Auxiliary numbers (level means, fitted constants, ...) in insertion order.
  std::vector<std::pair<std::string, double>> details;

  double detail(const std::string& key) const;
  bool has_detail(const std::string& key) const;
};

/// Simulation controls shared by the Monte Carlo estimators.
struct RunOptions {
  int steps = 1024;
  double cutoff = 0.0;  // 0: default_cutoff(model, t)
  SamplerMode mode = SamplerMode::Auto;
  std::uint64_t seed = 1;
  bool antithetic = true;   // mirror every path (X -> 2 x0 - X), valid by symmetry
  bool extrapolate = true;  // Richardson over the step sizes dt and 2 dt
  bool bridge = true;       // Brownian-bridge crossing correction for the Gaussian part
  int threads = 0;          // 0: SHC_THREADS or the hardware concurrency
  int block = 512;          // paths per reduction block
};

/// Resolves RunOptions::threads.
int resolve_threads(int requested);

namespace mc {

/// Welford accumulator; merge() uses the pairwise update of Chan et al.
struct Accumulator {
  std::uint64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x);
  void merge(const Accumulator& other);
  double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
  double std_error() const { return n > 1 ? std::sqrt(variance() / static_cast<double>(n)) : 0.0; }
};

using SampleFn = std::function<void(std::uint64_t index, std::span<double> out)>;

/// Evaluates f for indices first .. first + n - 1 in blocks spread over threads and
/// merges the per-block accumulators in block order, so the result does not depend
/// on the thread count.
std::vector<Accumulator> run(std::uint64_t first, std::uint64_t n, int channels, int threads, int block,
                             const SampleFn& f);

}  // namespace mc

/// Order of the leading discretization bias of discretely monitored suprema and
/// exits: 1/2 with a diffusion, min(1, 1/alpha) for pure-jump models.
double monitoring_bias_order(const LevyModel& model);

/// E[min(b, sup_{s <= t} <X_s - X_0, nu>)]. Details: fine, coarse (level means),
/// gamma (extrapolation order).
Estimate sup_functional(const LevyModel& model, const Vec& nu, double t, double b, std::uint64_t n_paths,
                        const RunOptions& opt = {});

/// int_0^a P_{x - r nu}(tau_H <= t) dr for the half-space H(x, nu); equal to
/// sup_functional with b = a by translation invariance.
Estimate halfspace_layer_integral(const LevyModel& model, const Vec& nu, double a, double t, std::uint64_t n_paths,
                                  const RunOptions& opt = {});

/// Layer integrals int_0^a P_{x - r nu}(tau_D <= t) dr from a boundary point x with
/// outward normal nu = e_1, for D the half-space H(x, nu), the inner ball B(x - R nu, R)
/// and the outer-ball complement B(x + R nu, R)^c, all from the same paths. Since
/// B(x - R nu, R) is inside H which is inside B(x + R nu, R)^c, the path-wise values
/// are ordered inner >= half-space >= outer.
struct LayerTriple {
  Estimate halfspace;
  Estimate inner_ball;
  Estimate outer_ball;
};

LayerTriple boundary_layer_integrals(const LevyModel& model, double R, double a, double t, std::uint64_t n_paths,
                                     const RunOptions& opt = {});

/// Exit statistics from the origin for several radii, all from one path set.
struct ExitProfile {
  std::vector<double> radii;
  std::vector<Estimate> ball;       // P(tau_{B(0, r)} <= t)
  std::vector<Estimate> line;       // P(tau_{(-r, r)} <= t) for the first coordinate
  std::vector<Estimate> sup;        // P(sup_{s <= t} X^1_s >= r), antithetic over the sign
  std::uint64_t n = 0;
  double wall_ms = 0.0;
};

/// The ball column uses the bridge correction and Richardson extrapolation when
/// enabled; the line and sup columns are raw discretely monitored indicators so
/// that |Y| >= r implies Y >= r or -Y >= r path by path.
ExitProfile exit_profile(const LevyModel& model, const std::vector<double>& radii, double t,
                         std::uint64_t n_paths, const RunOptions& opt = {});

Estimate exit_probability_ball(const LevyModel& model, double r, double t, std::uint64_t n_paths,
                               const RunOptions& opt = {});

/// E[min(tau_{B(0, r)}, horizon)] by the trapezoid rule on the survival curve.
Estimate expected_exit_time(const LevyModel& model, double r, double horizon, std::uint64_t n_paths,
                            const RunOptions& opt = {});

/// Rate J({z : |z| > eps, x + z outside D}) of jumps leaving a ball or half-space,
/// tabulated against the depth of x.
class EscapeRate {
 public:
  EscapeRate(const LevyModel& model, const Domain& domain, double eps, int points_per_decade = 32);

  double operator()(double depth) const;
  double cutoff() const { return eps_; }
  /// Direct quadrature (no table).
  double exact(double depth) const;

 private:
  int d_;
  double eps_;
  double R_;         // ball radius (infinite for half-spaces)
  bool halfspace_;
  TailTable tail_;
  std::vector<double> log_depth_;
  std::vector<double> value_;
};

struct DeficitStrategy {
  enum Kind { UniformDomain, BoundaryLayer, Stratified } kind = BoundaryLayer;
  std::optional<double> a;          // layer width, default R/4
  double interior_fraction = 0.25;  // Stratified: share of samples drawn uniformly in D_a
  std::optional<DepthLaw> depth;    // default chosen from the model's space-time scale

  static DeficitStrategy uniform() { return {UniformDomain, std::nullopt, 0.25, std::nullopt}; }
  static DeficitStrategy layer(std::optional<double> a = std::nullopt) { return {BoundaryLayer, a, 0.25, std::nullopt}; }
  static DeficitStrategy stratified(std::optional<double> a = std::nullopt, double interior = 0.25) {
    return {Stratified, a, interior, std::nullopt};
  }
};

const char* to_string(DeficitStrategy::Kind k);

struct DeficitEstimate : Estimate {
  std::string strategy;
  double layer_width = 0.0;
  // BoundaryLayer only: the interior term lies in [bias_lo, bias_hi].
  double bias_lo = 0.0;
  double bias_hi = 0.0;
  bool killing = false;  // jumps leaving D integrated out analytically
};

/// |D| - Q_D(t) = int_D P_x(tau_D <= t) dx.
DeficitEstimate heat_content_deficit(const LevyModel& model, const Domain& domain, double t, std::uint64_t n_paths,
                                     const DeficitStrategy& strategy = {}, const RunOptions& opt = {});

/// Fitted constant c with P_0(tau_{B(0,a)} <= s) <= c s / phi(a), from
/// s = phi(a) 2^{-k}, k = 0..levels-1 (used for the interior bias interval).
double fit_survival_constant(const LevyModel& model, double a, std::uint64_t n_paths, const RunOptions& opt,
                             int levels = 4);

enum class PerimeterMethod { Quadrature, MonteCarlo };

struct PerimeterOptions {
  PerimeterMethod method = PerimeterMethod::Quadrature;
  std::uint64_t samples = 2'000'000;                  // MonteCarlo, per ladder level
  std::vector<double> ladder = {1e-2, 1e-3, 1e-4};  // delta_floor / R
  std::uint64_t seed = 1;
  int threads = 0;
  double rtol = 1e-7;  // Quadrature
};

/// Per_X(D) = int_D int_{D^c} J(y - x) dy dx. Refuses unbounded-variation models.
/// Details (MonteCarlo): level values, slope, flat_slope.
Estimate perimeter(const LevyModel& model, const Domain& domain, const PerimeterOptions& opt = {});

/// int_0^h J(x, H^c) ds per unit boundary area, x at depth s below a flat boundary.
double flat_layer_perimeter(const LevyModel& model, double h);

/// Closed forms used as oracles.
namespace reference {

/// E[sup_{s <= t} B_s] = sqrt(2 t sigma2 / pi) for a Brownian coordinate with variance sigma2 per unit time.
double brownian_sup_mean(double t, double sigma2 = 1.0);
/// t ln(1/t) / pi, the small-time size of E[sup Y_t ^ 1] for the Cauchy process.
double cauchy_sup_asymptotic(double t);
/// E[sup_{s <= 1} Y_s] = (beta / pi) Gamma(1 - 1/beta) for a symmetric beta-stable Y, beta in (1, 2).
double stable_sup_mean(double beta);
/// E[max(0, S_1, ..., S_n)] for the random walk sampled from Y on the grid k/n.
double stable_discrete_sup_mean(double beta, std::uint64_t n);
/// K_{d,beta} = pi^{(d-1)/2} Gamma((1+beta)/2) / Gamma((d+beta)/2): marginal of |z|^{-d-beta} on one axis.
double projection_constant(int d, double beta);

}  // namespace reference

}  // namespace shc
