#include "shc/sampling.hpp"

#include "shc/scale_kernel.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace shc {

double default_cutoff(const LevyModel& model, double t) {
  if (!model.jumps) return 0.0;
  if (!(t > 0.0)) throw ArgumentError("horizon must be positive");
  const double R0 = model.jumps->profile.R0;
  const double r = phi_inverse(ScaleFunction::of(model), t);
  return std::min(R0 / 100.0, r / 10.0);
}

// ---------------------------------------------------------------------------

TailTable::TailTable(const RadialJumpLaw& law, double r_min, int points_per_decade) : law_(law) {
  if (!(r_min > 0.0)) throw ArgumentError("tail table needs r_min > 0");
  const ScalingProfile& p = law.profile;
  const double R0 = p.R0;
  tail_R0_ = law.tail == TailMode::Extended ? law.kappa / (p.tail_exponent * eval_psi(p, R0)) : 0.0;
  const double lo = std::log(std::min(r_min, R0)), hi = std::log(R0);
  const int n = std::max(2, static_cast<int>(std::ceil((hi - lo) / std::log(10.0) * points_per_decade)) + 1);
  log_r_.resize(n);
  tail_.resize(n);
  for (int i = 0; i < n; ++i) log_r_[i] = lo + (hi - lo) * i / (n - 1);
  log_r_.back() = hi;
  tail_.back() = tail_R0_;
  auto integrand = [&p](double s) { return 1.0 / (s * eval_psi(p, s)); };
  for (int i = n - 2; i >= 0; --i) {
    const double a = std::exp(log_r_[i]), b = std::exp(log_r_[i + 1]);
    tail_[i] = tail_[i + 1] + law.kappa * quad::require(quad::adaptive(integrand, a, b), "radial tail");
  }
  if (!std::isfinite(tail_.front())) throw InvalidModelError("radial tail is not finite");
  log_tail_.resize(n);
  slope_.resize(n);
  for (int i = 0; i < n; ++i) {
    log_tail_[i] = tail_[i] > 0.0 ? std::log(tail_[i]) : -HUGE_VAL;
    // d log T / d log r = -r j(r) r^{d-1} / T(r) = -kappa / (psi(r) T(r)).
    const double r = std::exp(log_r_[i]);
    slope_[i] = tail_[i] > 0.0 ? -law.kappa / (eval_psi(p, r) * tail_[i]) : 0.0;
  }
  low_slope_ = tail_.front() > 0.0 ? slope_.front() : -p.alpha;
}

double TailTable::operator()(double r) const {
  const ScalingProfile& p = law_.profile;
  if (r >= p.R0) {
    return law_.tail == TailMode::Extended ? tail_R0_ * std::pow(p.R0 / r, p.tail_exponent) : 0.0;
  }
  const double lr = std::log(r);
  if (lr <= log_r_.front()) return tail_.front() * std::exp(low_slope_ * (lr - log_r_.front()));
  const double h = (log_r_.back() - log_r_.front()) / (log_r_.size() - 1);
  std::size_t i = std::min(log_r_.size() - 2, static_cast<std::size_t>((lr - log_r_.front()) / h));
  const double w = log_r_[i + 1] - log_r_[i];
  const double f = (lr - log_r_[i]) / w;
  if (tail_[i + 1] > 0.0) {
    // Cubic Hermite in (log r, log T) with exact end slopes: C^1 across nodes.
    const double f2 = f * f, f3 = f2 * f;
    const double h00 = 2 * f3 - 3 * f2 + 1, h10 = f3 - 2 * f2 + f, h01 = -2 * f3 + 3 * f2, h11 = f3 - f2;
    return std::exp(h00 * log_tail_[i] + h10 * w * slope_[i] + h01 * log_tail_[i + 1] + h11 * w * slope_[i + 1]);
  }
  return tail_[i] + f * (tail_[i + 1] - tail_[i]);
}

double TailTable::inverse(double target) const {
  const ScalingProfile& p = law_.profile;
  if (!(target > 0.0)) throw ArgumentError("tail inverse needs a positive target");
  if (law_.tail == TailMode::Extended && target <= tail_R0_)
    return p.R0 * std::pow(tail_R0_ / target, 1.0 / p.tail_exponent);
  if (target >= tail_.front()) return std::exp(log_r_.front() + std::log(target / tail_.front()) / low_slope_);
  // tail_ is decreasing; find i with tail_[i] >= target > tail_[i+1].
  const auto it = std::lower_bound(tail_.begin(), tail_.end(), target, std::greater<double>());
  std::size_t i = static_cast<std::size_t>(it - tail_.begin());
  if (i >= tail_.size()) return std::exp(log_r_.back());
  if (i > 0) --i;
  double f;
  if (tail_[i + 1] > 0.0)
    f = (std::log(target) - log_tail_[i]) / (log_tail_[i + 1] - log_tail_[i]);
  else
    f = (tail_[i] - target) / (tail_[i] - tail_[i + 1]);
  return std::exp(log_r_[i] + f * (log_r_[i + 1] - log_r_[i]));
}

RadiusSampler::RadiusSampler(const RadialJumpLaw& law, double eps) : table_(law, eps) {
  if (!(eps > 0.0)) throw ArgumentError("small-jump cutoff must be positive");
  tail_eps_ = table_(eps);
  if (!std::isfinite(tail_eps_)) throw InvalidModelError("jump mass above the cutoff is not finite");
}

// ---------------------------------------------------------------------------

IncrementSampler::IncrementSampler(const LevyModel& model, double dt, double cutoff, SamplerMode mode)
    : d_(model.dim), dt_(dt) {
  if (!(dt > 0.0)) throw ArgumentError("time step must be positive");
  if (!model.jumps) {
    if (mode == SamplerMode::Density) throw ArgumentError("density sampler needs a jump law");
    kind_ = Kind::Diffusion;
  } else if (mode == SamplerMode::Exact || (mode == SamplerMode::Auto && model.exact_stable)) {
    if (!model.exact_stable) throw ArgumentError("model has no exact stable sampler");
    kind_ = Kind::ExactStable;
    beta_ = *model.exact_stable;
    stable_scale_ = std::pow(dt, 1.0 / beta_);
  } else {
    kind_ = Kind::Density;
  }

  cov_ = Mat::Zero(d_, d_);
  if (model.diffusion) cov_ += dt * *model.diffusion;
  if (kind_ == Kind::Density) {
    const RadialJumpLaw& law = *model.jumps;
    eps_ = cutoff > 0.0 ? cutoff : default_cutoff(model, dt);
    if (!(eps_ > 0.0)) throw ArgumentError("small-jump cutoff must be positive");
    radius_.emplace(law, eps_);
    lambda_ = dt * omega(d_) * radius_->tail_at_cutoff();
    const ScalingProfile& p = law.profile;
    const double upper = law.tail == TailMode::Truncated ? std::min(eps_, p.R0) : eps_;
    auto integrand = [&p](double s) { return s / eval_psi(p, s); };
    sigma2_ = omega(d_) * law.kappa *
              quad::require(quad::graded_from_zero(integrand, upper), "small-jump second moment");
    cov_ += Mat::Identity(d_, d_) * (sigma2_ / d_ * dt);
    const double ratio = std::sqrt(sigma2_) / eps_;
    if (ratio < 1.0) {
      std::ostringstream os;
      os << "small-jump Gaussian substitute outside its validity range: sigma(eps)/eps = " << ratio;
      warnings_.push_back(os.str());
    }
  }
  has_gauss_ = cov_.cwiseAbs().maxCoeff() > 0.0;
  if (has_gauss_) {
    Eigen::LLT<Mat> llt(cov_);
    if (llt.info() != Eigen::Success) throw InvalidModelError("Gaussian covariance is not positive definite");
    chol_ = llt.matrixL();
  }
  gauss_rate_ = cov_.trace() / (d_ * dt);
}

void IncrementSampler::gaussian(Rng& rng, Vec& out) const {
  out.setZero(d_);
  if (!has_gauss_) return;
  boost::random::normal_distribution<double> normal;
  Vec z(d_);
  for (int j = 0; j < d_; ++j) z[j] = normal(rng);
  out.noalias() = chol_.triangularView<Eigen::Lower>() * z;
}

void IncrementSampler::jump(Rng& rng, Vec& z) const {
  boost::random::normal_distribution<double> normal;
  const double r = (*radius_)(rng.uniform());
  double n2;
  do {
    for (int j = 0; j < d_; ++j) z[j] = normal(rng);
    n2 = z.squaredNorm();
  } while (!(n2 > 0.0));
  z *= r / std::sqrt(n2);
}

void IncrementSampler::exact_stable(Rng& rng, Vec& out) const {
  boost::random::normal_distribution<double> normal;
  if (beta_ == 1.0) {
    // G / |g| with independent standard normals is isotropic Cauchy with exponent |xi|.
    double g;
    do g = normal(rng);
    while (g == 0.0);
    const double scale = stable_scale_ / std::abs(g);
    for (int j = 0; j < d_; ++j) out[j] = scale * normal(rng);
    return;
  }
  // Subordinated Gaussian: sqrt(S) G, G ~ N(0, 2I), S positive (beta/2)-stable (Kanter).
  const double a = 0.5 * beta_;
  const double u = kPi * rng.uniform();
  const double e = boost::random::exponential_distribution<double>(1.0)(rng);
  const double s = std::sin(a * u) / std::pow(std::sin(u), 1.0 / a) *
                   std::pow(std::sin((1.0 - a) * u) / e, (1.0 - a) / a);
  const double scale = stable_scale_ * std::sqrt(2.0 * s);
  for (int j = 0; j < d_; ++j) out[j] = scale * normal(rng);
}

void IncrementSampler::sample(Rng& rng, Vec& out) const {
  out.resize(d_);
  switch (kind_) {
    case Kind::Diffusion:
      gaussian(rng, out);
      return;
    case Kind::ExactStable: {
      exact_stable(rng, out);
      if (has_gauss_) {
        Vec g(d_);
        gaussian(rng, g);
        out += g;
      }
      return;
    }
    case Kind::Density:
      sample_parts(rng, out, [&out](const Vec& z) { out += z; });
      return;
  }
}

double IncrementSampler::sample_projected(Rng& rng, const Vec& nu) const {
  double value = 0.0;
  if (has_gauss_) {
    const double var = nu.dot(cov_ * nu);
    value += std::sqrt(var) * boost::random::normal_distribution<double>()(rng);
  }
  if (kind_ == Kind::ExactStable) {
    value += sample_stable_increment(beta_, dt_, rng);
  } else if (kind_ == Kind::Density && lambda_ > 0.0) {
    const int count = std::poisson_distribution<int>(lambda_)(rng);
    Vec z(d_);
    for (int i = 0; i < count; ++i) {
      jump(rng, z);
      value += z.dot(nu);
    }
  }
  return value;
}

Vec sample_increment(const LevyModel& model, double dt, const PathGrid& grid, Rng& rng) {
  const double eps = grid.cutoff > 0.0 ? grid.cutoff : (model.jumps ? default_cutoff(model, grid.t) : 0.0);
  IncrementSampler sampler(model, dt, eps, grid.mode);
  Vec out;
  sampler.sample(rng, out);
  return out;
}

Path sample_path(const IncrementSampler& sampler, const Vec& x0, int steps, Rng& rng) {
  if (steps < 1) throw ArgumentError("path needs at least one step");
  if (x0.size() != sampler.dim()) throw ArgumentError("starting point has the wrong dimension");
  Path path;
  path.positions.resize(sampler.dim(), steps + 1);
  path.positions.col(0) = x0;
  path.cutoff = sampler.cutoff();
  path.t = sampler.dt() * steps;
  Vec inc;
  for (int k = 1; k <= steps; ++k) {
    sampler.sample(rng, inc);
    path.positions.col(k) = path.positions.col(k - 1) + inc;
  }
  return path;
}

Path sample_path(const LevyModel& model, const Vec& x0, const PathGrid& grid, std::uint64_t seed,
                 std::uint64_t index) {
  if (grid.steps < 1) throw ArgumentError("path grid needs at least one step");
  if (!(grid.t > 0.0)) throw ArgumentError("path grid needs a positive horizon");
  const double eps = grid.cutoff > 0.0 ? grid.cutoff : (model.jumps ? default_cutoff(model, grid.t) : 0.0);
  IncrementSampler sampler(model, grid.t / grid.steps, eps, grid.mode);
  Rng rng(seed, index);
  Path path = sample_path(sampler, x0, grid.steps, rng);
  path.seed = seed;
  path.index = index;
  path.t = grid.t;
  return path;
}

std::vector<double> project_running_sup(const Path& path, const Vec& nu) {
  if (nu.size() != path.positions.rows()) throw ArgumentError("direction has the wrong dimension");
  if (std::abs(nu.norm() - 1.0) > 1e-12) throw ArgumentError("direction must be a unit vector");
  const int n = path.steps();
  std::vector<double> out(n);
  double running = 0.0;
  const Vec x0 = path.positions.col(0);
  for (int k = 1; k <= n; ++k) {
    running = std::max(running, (path.positions.col(k) - x0).dot(nu));
    out[k - 1] = running;
  }
  return out;
}

ExitRecord first_exit(const Path& path, const Domain& domain, std::optional<BridgeCorrection> bridge) {
  if (!contains(domain, path.positions.col(0))) throw ArgumentError("path must start inside the domain");
  if (bridge && !bridge->rng) throw ArgumentError("bridge correction needs a random stream");
  ExitRecord rec;
  const int n = path.steps();
  const double dt = path.t / n;
  double prev = -signed_distance(domain, path.positions.col(0));
  for (int k = 1; k <= n; ++k) {
    const double depth = -signed_distance(domain, path.positions.col(k));
    if (depth <= 0.0) {
      rec.exited = true;
      rec.exit_step = k;
      rec.exit_time_estimate = k * dt;
      return rec;
    }
    if (bridge && bridge->variance_rate > 0.0) {
      const double p = bridge_crossing_probability(prev, depth, bridge->variance_rate * dt);
      if (bridge->rng->uniform() < p) {
        rec.exited = true;
        rec.exit_step = k;
        rec.exit_time_estimate = k * dt;
        rec.via_bridge = true;
        return rec;
      }
    }
    prev = depth;
  }
  return rec;
}

}  // namespace shc
