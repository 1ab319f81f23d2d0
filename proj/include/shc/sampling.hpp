#pragma once

#include "shc/core.hpp"
#include "shc/geometry.hpp"
#include "shc/model.hpp"
#include "shc/rng.hpp"

#include <boost/random/exponential_distribution.hpp>
#include <boost/random/normal_distribution.hpp>

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace shc {

enum class SamplerMode {
  Auto,     // exact stable sampler when the model carries one, density sampler otherwise
  Exact,    // requires model.exact_stable (or a pure diffusion)
  Density,  // diffusion + compound Poisson above the cutoff + Gaussian small jumps
};

struct PathGrid {
  double t = 1.0;
  int steps = 1;
  double cutoff = 0.0;  // small-jump cutoff; 0 selects default_cutoff(model, t)
  SamplerMode mode = SamplerMode::Auto;
};

/// min(R0/100, phi^{-1}(t)/10).
double default_cutoff(const LevyModel& model, double t);

/// Symmetric beta-stable variate with E exp(i xi S) = exp(-dt |xi|^beta)
/// (Chambers-Mallows-Stuck).
template <class Engine>
double sample_stable_increment(double beta, double dt, Engine& rng);

/// Radial tail T(r) = int_r^inf j(s) s^{d-1} ds tabulated on a log grid over
/// [r_min, R0], closed form beyond R0 and a power-law continuation below r_min.
class TailTable {
 public:
  TailTable(const RadialJumpLaw& law, double r_min, int points_per_decade = 64);
  double operator()(double r) const;
  /// Smallest r >= r_min with T(r) <= target (target in (0, T(r_min)]).
  double inverse(double target) const;
  double r_min() const { return std::exp(log_r_.front()); }
  double at_r_min() const { return tail_.front(); }

 private:
  RadialJumpLaw law_;
  double tail_R0_ = 0.0;
  double low_slope_ = 0.0;  // d log T / d log r at r_min
  std::vector<double> log_r_;
  std::vector<double> tail_;
  std::vector<double> log_tail_;
  std::vector<double> slope_;  // d log T / d log r at the nodes
};

/// Radius of a jump conditioned on exceeding eps.
class RadiusSampler {
 public:
  RadiusSampler(const RadialJumpLaw& law, double eps);
  /// Radius with P(radius > r) = T(r) / T(eps) for u uniform on (0, 1).
  double operator()(double u) const { return table_.inverse(u * tail_eps_); }
  double tail_at_cutoff() const { return tail_eps_; }
  const TailTable& table() const { return table_; }

 private:
  TailTable table_;
  double tail_eps_ = 0.0;
};

/// Draws increments of a model over a fixed time step. Immutable after construction.
class IncrementSampler {
 public:
  enum class Kind { Diffusion, ExactStable, Density };

  IncrementSampler(const LevyModel& model, double dt, double cutoff = 0.0, SamplerMode mode = SamplerMode::Auto);

  int dim() const { return d_; }
  double dt() const { return dt_; }
  Kind kind() const { return kind_; }
  double cutoff() const { return eps_; }
  /// Expected number of jumps above the cutoff per step.
  double jump_rate() const { return lambda_; }
  /// Total second moment of the jumps below the cutoff, sigma^2(eps).
  double small_jump_variance() const { return sigma2_; }
  /// Per-coordinate Gaussian variance per unit time (diffusion trace / d + sigma^2 / d).
  double gaussian_variance_rate() const { return gauss_rate_; }
  const std::vector<std::string>& warnings() const { return warnings_; }
  /// Radius law of the jumps above the cutoff (density kind only).
  const RadiusSampler* radius_sampler() const { return radius_ ? &*radius_ : nullptr; }

  /// Full increment.
  void sample(Rng& rng, Vec& out) const;

  /// Gaussian part into `gauss`; every jump above the cutoff is passed to on_jump(z)
  /// in order. Density kind only.
  template <class OnJump>
  void sample_parts(Rng& rng, Vec& gauss, OnJump&& on_jump) const;

  /// Increment of <X, nu> for a unit vector nu (same law as the projection).
  double sample_projected(Rng& rng, const Vec& nu) const;

 private:
  void gaussian(Rng& rng, Vec& out) const;
  void jump(Rng& rng, Vec& z) const;
  void exact_stable(Rng& rng, Vec& out) const;

  int d_;
  double dt_;
  Kind kind_;
  double eps_ = 0.0;
  double lambda_ = 0.0;
  double sigma2_ = 0.0;
  double gauss_rate_ = 0.0;
  double beta_ = 0.0;
  double stable_scale_ = 1.0;
  bool has_gauss_ = false;
  Mat chol_;  // Cholesky factor of the Gaussian covariance per step
  std::optional<RadiusSampler> radius_;
  Mat cov_;  // Gaussian covariance per step
  std::vector<std::string> warnings_;
};

/// Convenience wrapper that builds a sampler for a single draw.
Vec sample_increment(const LevyModel& model, double dt, const PathGrid& grid, Rng& rng);

struct Path {
  Mat positions;  // d x (steps + 1), column k at time k t / steps
  std::uint64_t seed = 0;
  std::uint64_t index = 0;
  double cutoff = 0.0;
  double t = 0.0;

  int steps() const { return static_cast<int>(positions.cols()) - 1; }
  Vec at(int k) const { return positions.col(k); }
};

/// Path from a stream keyed by (seed, index).
Path sample_path(const LevyModel& model, const Vec& x0, const PathGrid& grid, std::uint64_t seed,
                 std::uint64_t index);
Path sample_path(const IncrementSampler& sampler, const Vec& x0, int steps, Rng& rng);

/// max(0, max_{j <= k} <X_j - X_0, nu>) for k = 1..n.
std::vector<double> project_running_sup(const Path& path, const Vec& nu);

struct ExitRecord {
  bool exited = false;
  std::optional<int> exit_step;
  double exit_time_estimate = 0.0;  // grid time of exit_step, or the bridge interval's end
  bool via_bridge = false;          // flagged by the bridge correction between two inside points
};

struct BridgeCorrection {
  double variance_rate = 0.0;  // per-coordinate Gaussian variance per unit time
  Rng* rng = nullptr;
};

/// First grid point outside the domain. With a bridge correction, consecutive inside
/// points at distances delta_k, delta_{k+1} flag an exit with probability
/// exp(-2 delta_k delta_{k+1} / (variance_rate dt)).
ExitRecord first_exit(const Path& path, const Domain& domain,
                      std::optional<BridgeCorrection> bridge = std::nullopt);

/// exp(-2 a b / (v dt)) for a, b > 0 (Brownian bridge crossing of a flat boundary).
inline double bridge_crossing_probability(double a, double b, double variance_dt) {
  if (!(a > 0.0) || !(b > 0.0)) return 1.0;
  return std::exp(-2.0 * a * b / variance_dt);
}

// ---------------------------------------------------------------------------

template <class Engine>
double sample_stable_increment(double beta, double dt, Engine& rng) {
  if (!(beta > 0.0 && beta < 2.0)) throw ArgumentError("stable index must lie in (0, 2)");
  if (!(dt > 0.0)) throw ArgumentError("time step must be positive");
  const double v = kPi * (rng.uniform() - 0.5);
  const double scale = std::pow(dt, 1.0 / beta);
  if (beta == 1.0) return scale * std::tan(v);
  const double w = boost::random::exponential_distribution<double>(1.0)(rng);
  const double s = std::sin(beta * v) / std::pow(std::cos(v), 1.0 / beta) *
                   std::pow(std::cos((1.0 - beta) * v) / w, (1.0 - beta) / beta);
  return scale * s;
}

template <class OnJump>
void IncrementSampler::sample_parts(Rng& rng, Vec& gauss, OnJump&& on_jump) const {
  gauss.resize(d_);
  gaussian(rng, gauss);
  if (kind_ != Kind::Density || lambda_ <= 0.0) return;
  const int count = std::poisson_distribution<int>(lambda_)(rng);
  Vec z(d_);
  for (int i = 0; i < count; ++i) {
    jump(rng, z);
    on_jump(z);
  }
}

}  // namespace shc
