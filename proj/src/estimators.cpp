#include "shc/estimators.hpp"

#include "shc/quadrature.hpp"

#include <boost/random/normal_distribution.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

namespace shc {

double Estimate::detail(const std::string& key) const {
  for (const auto& [k, v] : details)
    if (k == key) return v;
  throw ArgumentError("estimate has no detail '" + key + "'");
}

bool Estimate::has_detail(const std::string& key) const {
  return std::any_of(details.begin(), details.end(), [&](const auto& kv) { return kv.first == key; });
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("SHC_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace mc {

void Accumulator::add(double x) {
  ++n;
  const double delta = x - mean;
  mean += delta / static_cast<double>(n);
  m2 += delta * (x - mean);
}

void Accumulator::merge(const Accumulator& o) {
  if (o.n == 0) return;
  if (n == 0) {
    *this = o;
    return;
  }
  const double na = static_cast<double>(n), nb = static_cast<double>(o.n);
  const double delta = o.mean - mean;
  const double total = na + nb;
  mean += delta * nb / total;
  m2 += o.m2 + delta * delta * na * nb / total;
  n += o.n;
}

std::vector<Accumulator> run(std::uint64_t first, std::uint64_t n, int channels, int threads, int block,
                             const SampleFn& f) {
  if (channels < 1) throw ArgumentError("need at least one channel");
  const std::uint64_t bsize = static_cast<std::uint64_t>(std::max(1, block));
  const std::uint64_t nblocks = (n + bsize - 1) / bsize;
  std::vector<std::vector<Accumulator>> partial(nblocks, std::vector<Accumulator>(channels));
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    std::vector<double> buf(channels);
    for (;;) {
      const std::uint64_t b = next.fetch_add(1);
      if (b >= nblocks) return;
      try {
        const std::uint64_t lo = b * bsize, hi = std::min(n, lo + bsize);
        for (std::uint64_t i = lo; i < hi; ++i) {
          std::fill(buf.begin(), buf.end(), 0.0);
          f(first + i, buf);
          for (int c = 0; c < channels; ++c) partial[b][c].add(buf[c]);
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(nblocks);
        return;
      }
    }
  };

  const int nthreads = static_cast<int>(std::min<std::uint64_t>(std::max(1, threads), std::max<std::uint64_t>(1, nblocks)));
  if (nthreads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<Accumulator> total(channels);
  for (const auto& blk : partial)
    for (int c = 0; c < channels; ++c) total[c].merge(blk[c]);
  return total;
}

}  // namespace mc

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

void check_unit(const Vec& nu, int d) {
  if (nu.size() != d) throw ArgumentError("direction has the wrong dimension");
  if (std::abs(nu.norm() - 1.0) > 1e-12) throw ArgumentError("direction must be a unit vector");
}

void check_run(double t, std::uint64_t n_paths, const RunOptions& opt) {
  if (!(t > 0.0)) throw ArgumentError("horizon t must be positive");
  if (n_paths < 2) throw ArgumentError("need at least two paths");
  if (opt.steps < 1) throw ArgumentError("need at least one step");
  if (opt.extrapolate && (opt.steps < 2 || opt.steps % 2 != 0))
    throw ArgumentError("extrapolation needs an even number of steps");
}

double cutoff_for(const LevyModel& model, double t, const RunOptions& opt) {
  if (!model.jumps) return 0.0;
  return opt.cutoff > 0.0 ? opt.cutoff : default_cutoff(model, t);
}

double richardson(double fine, double coarse, double w) { return (w * fine - coarse) / (w - 1.0); }

Estimate make_estimate(const mc::Accumulator& acc, std::uint64_t seed, Clock::time_point start) {
  Estimate e;
  e.value = acc.mean;
  e.std_error = acc.std_error();
  e.n = acc.n;
  e.seed = seed;
  e.wall_ms = elapsed_ms(start);
  return e;
}

// log(1 - p) for the bridge crossing probability between two inside points.
double log_bridge_survival(double a, double b, double variance_dt) {
  const double x = 2.0 * a * b / variance_dt;
  if (x > 50.0) return 0.0;
  return std::log1p(-std::exp(-x));
}

Vec uniform_direction(int d, Rng& rng) {
  boost::random::normal_distribution<double> normal;
  Vec u(d);
  double n2;
  do {
    for (int j = 0; j < d; ++j) u[j] = normal(rng);
    n2 = u.squaredNorm();
  } while (!(n2 > 0.0));
  return u / std::sqrt(n2);
}

Vec uniform_in_ball(const Vec& center, double radius, Rng& rng) {
  const int d = static_cast<int>(center.size());
  const double r = radius * std::pow(rng.uniform(), 1.0 / d);
  return center + r * uniform_direction(d, rng);
}

// Uniform point of {x in D : d(x) < -depth} (depth >= 0).
Vec uniform_in_domain(const Domain& domain, double depth, Rng& rng) {
  if (const Ball* b = domain.as_ball()) return uniform_in_ball(b->center, b->radius - depth, rng);
  const ImplicitShape* s = domain.as_implicit();
  if (!s) throw ArgumentError("uniform sampling needs a bounded domain");
  const int d = domain.dim();
  Vec x(d);
  for (int attempt = 0; attempt < 1'000'000; ++attempt) {
    for (int j = 0; j < d; ++j) x[j] = s->lo[j] + rng.uniform() * (s->hi[j] - s->lo[j]);
    if (s->sdf(x) < -depth) return x;
  }
  throw QualityError("rejection sampling in " + domain.describe() + " failed");
}

// |{x in D : d(x) < -depth}|.
double inner_volume(const Domain& domain, double depth) {
  if (const Ball* b = domain.as_ball()) return unit_ball_volume(domain.dim()) * std::pow(b->radius - depth, domain.dim());
  const double total = volume(domain).value;
  if (depth <= 0.0) return total;
  return total - qmc_integral(domain, [](const Vec&) { return 1.0; }, depth).value;
}

double scale_phi(const LevyModel& model, const ScaleFunction& sf, double r) {
  if (!model.jumps || r <= sf.R0()) return sf.phi(r);
  return sf.phi_extended(r);
}

}  // namespace

double monitoring_bias_order(const LevyModel& model) {
  if (model.has_diffusion() || !model.jumps) return 0.5;
  const double alpha = model.exact_stable ? *model.exact_stable : model.jumps->profile.alpha;
  return std::min(1.0, 1.0 / alpha);
}

// ---------------------------------------------------------------------------
// Supremum functional

Estimate sup_functional(const LevyModel& model, const Vec& nu, double t, double b, std::uint64_t n_paths,
                        const RunOptions& opt) {
  validate(model);
  check_unit(nu, model.dim);
  check_run(t, n_paths, opt);
  if (!(b > 0.0)) throw ArgumentError("cap b must be positive");
  const auto start = Clock::now();
  const int n = opt.steps;
  const IncrementSampler sampler(model, t / n, cutoff_for(model, t, opt), opt.mode);
  const double gamma = monitoring_bias_order(model);
  const double w = std::pow(2.0, gamma);

  auto path = [&](std::uint64_t index, std::span<double> out) {
    Rng rng(opt.seed, index);
    double s = 0.0, hi = 0.0, lo = 0.0, hi_c = 0.0, lo_c = 0.0;
    for (int k = 1; k <= n; ++k) {
      s += sampler.sample_projected(rng, nu);
      hi = std::max(hi, s);
      lo = std::min(lo, s);
      if ((k & 1) == 0) {
        hi_c = std::max(hi_c, s);
        lo_c = std::min(lo_c, s);
      }
    }
    const double fine = opt.antithetic ? 0.5 * (std::min(hi, b) + std::min(-lo, b)) : std::min(hi, b);
    const double coarse = opt.antithetic ? 0.5 * (std::min(hi_c, b) + std::min(-lo_c, b)) : std::min(hi_c, b);
    out[0] = opt.extrapolate ? richardson(fine, coarse, w) : fine;
    out[1] = fine;
    out[2] = coarse;
  };
  const auto acc = mc::run(0, n_paths, 3, resolve_threads(opt.threads), opt.block, path);
  Estimate e = make_estimate(acc[0], opt.seed, start);
  e.details = {{"fine", acc[1].mean},
               {"fine_stderr", acc[1].std_error()},
               {"coarse", acc[2].mean},
               {"gamma", opt.extrapolate ? gamma : 0.0},
               {"steps", static_cast<double>(n)},
               {"cutoff", sampler.cutoff()}};
  return e;
}

Estimate halfspace_layer_integral(const LevyModel& model, const Vec& nu, double a, double t, std::uint64_t n_paths,
                                  const RunOptions& opt) {
  if (!(a > 0.0)) throw ArgumentError("layer width a must be positive");
  return sup_functional(model, nu, t, a, n_paths, opt);
}

// ---------------------------------------------------------------------------
// Layer integrals for the half-space and the two tangent balls

namespace {

struct LayerLevel {
  double half = 0.0;   // max_k Z^nu
  double inner = 0.0;  // max_k Z^nu + R - sqrt(R^2 - |Z_perp|^2)
  double outer_hi = 0.0;
  bool outer_simple = true;  // every interval starts at or below 0
  std::vector<std::pair<double, double>> outer;
};

void layer_update(LayerLevel& lv, double zn, double zp2, double R) {
  lv.half = std::max(lv.half, zn);
  const double disc = R * R - zp2;
  if (disc <= 0.0) {
    lv.inner = HUGE_VAL;
    return;
  }
  const double root = std::sqrt(disc);
  lv.inner = std::max(lv.inner, zn + R - root);
  const double lo = zn - R - root, hi = zn - R + root;
  if (hi > 0.0) {
    lv.outer.emplace_back(lo, hi);
    if (lo > 0.0) lv.outer_simple = false;
    lv.outer_hi = std::max(lv.outer_hi, hi);
  }
}

// Measure of (0, a) covered by the union of the recorded intervals.
double outer_measure(LayerLevel& lv, double a) {
  if (lv.outer_simple) return std::min(a, lv.outer_hi);
  auto& iv = lv.outer;
  std::sort(iv.begin(), iv.end());
  double covered = 0.0, cur_lo = 0.0, cur_hi = -HUGE_VAL;
  for (auto [lo, hi] : iv) {
    lo = std::max(lo, 0.0);
    hi = std::min(hi, a);
    if (hi <= lo) continue;
    if (lo > cur_hi) {
      if (cur_hi > cur_lo) covered += cur_hi - cur_lo;
      cur_lo = lo;
      cur_hi = hi;
    } else {
      cur_hi = std::max(cur_hi, hi);
    }
  }
  if (cur_hi > cur_lo) covered += cur_hi - cur_lo;
  return covered;
}

}  // namespace

LayerTriple boundary_layer_integrals(const LevyModel& model, double R, double a, double t, std::uint64_t n_paths,
                                     const RunOptions& opt) {
  validate(model);
  check_run(t, n_paths, opt);
  if (!(R > 0.0) || !(a > 0.0)) throw ArgumentError("R and a must be positive");
  const auto start = Clock::now();
  const int d = model.dim, n = opt.steps;
  const IncrementSampler sampler(model, t / n, cutoff_for(model, t, opt), opt.mode);
  const double gamma = monitoring_bias_order(model);
  const double w = std::pow(2.0, gamma);

  auto path = [&](std::uint64_t index, std::span<double> out) {
    Rng rng(opt.seed, index);
    const int sides = opt.antithetic ? 2 : 1;
    LayerLevel fine[2], coarse[2];
    Vec z = Vec::Zero(d), inc(d);
    for (int k = 1; k <= n; ++k) {
      sampler.sample(rng, inc);
      z += inc;
      const double zp2 = z.squaredNorm() - z[0] * z[0];
      for (int s = 0; s < sides; ++s) {
        const double zn = s == 0 ? z[0] : -z[0];
        layer_update(fine[s], zn, zp2, R);
        if ((k & 1) == 0) layer_update(coarse[s], zn, zp2, R);
      }
    }
    double f[3] = {0, 0, 0}, c[3] = {0, 0, 0};
    for (int s = 0; s < sides; ++s) {
      f[0] += std::min(a, fine[s].half);
      f[1] += std::min(a, fine[s].inner);
      f[2] += outer_measure(fine[s], a);
      c[0] += std::min(a, coarse[s].half);
      c[1] += std::min(a, coarse[s].inner);
      c[2] += outer_measure(coarse[s], a);
    }
    for (int j = 0; j < 3; ++j) {
      f[j] /= sides;
      c[j] /= sides;
      out[j] = opt.extrapolate ? richardson(f[j], c[j], w) : f[j];
    }
  };
  const auto acc = mc::run(0, n_paths, 3, resolve_threads(opt.threads), opt.block, path);
  LayerTriple out;
  out.halfspace = make_estimate(acc[0], opt.seed, start);
  out.inner_ball = make_estimate(acc[1], opt.seed, start);
  out.outer_ball = make_estimate(acc[2], opt.seed, start);
  return out;
}

// ---------------------------------------------------------------------------
// Exit from balls centred at the starting point

ExitProfile exit_profile(const LevyModel& model, const std::vector<double>& radii, double t, std::uint64_t n_paths,
                         const RunOptions& opt) {
  validate(model);
  check_run(t, n_paths, opt);
  if (radii.empty()) throw ArgumentError("need at least one radius");
  for (double r : radii)
    if (!(r > 0.0)) throw ArgumentError("radii must be positive");
  const auto start = Clock::now();
  const int d = model.dim, n = opt.steps, m = static_cast<int>(radii.size());
  const double dt = t / n;
  const IncrementSampler sampler(model, dt, cutoff_for(model, t, opt), opt.mode);
  const bool bridge = opt.bridge && sampler.kind() != IncrementSampler::Kind::ExactStable &&
                      sampler.gaussian_variance_rate() > 0.0;
  const double vdt = sampler.gaussian_variance_rate() * dt;
  const double gamma = monitoring_bias_order(model);
  const double w = std::pow(2.0, gamma);
  const double r_max = *std::max_element(radii.begin(), radii.end());

  // Channels per radius: ball, ball fine, ball coarse, line, sup.
  auto path = [&](std::uint64_t index, std::span<double> out) {
    Rng rng(opt.seed, index);
    std::vector<double> log_f(m, 0.0), log_c(m, 0.0);
    std::vector<char> out_f(m, 0), out_c(m, 0);
    Vec x = Vec::Zero(d), inc(d);
    double rho_prev = 0.0, rho_prev_c = 0.0;
    double line_max = 0.0, up = 0.0, down = 0.0;
    for (int k = 1; k <= n; ++k) {
      sampler.sample(rng, inc);
      x += inc;
      const double rho = x.norm();
      line_max = std::max(line_max, std::abs(x[0]));
      up = std::max(up, x[0]);
      down = std::max(down, -x[0]);
      const bool even = (k & 1) == 0;
      for (int j = 0; j < m; ++j) {
        const double r = radii[j];
        if (!out_f[j]) {
          if (rho >= r)
            out_f[j] = 1;
          else if (bridge)
            log_f[j] += log_bridge_survival(r - rho_prev, r - rho, vdt);
        }
        if (even && !out_c[j]) {
          if (rho >= r)
            out_c[j] = 1;
          else if (bridge)
            log_c[j] += log_bridge_survival(r - rho_prev_c, r - rho, 2.0 * vdt);
        }
      }
      rho_prev = rho;
      if (even) rho_prev_c = rho;
      if (rho >= r_max && line_max >= r_max && up >= r_max && down >= r_max && (!opt.extrapolate || even)) {
        bool all = true;
        for (int j = 0; j < m; ++j) all = all && out_f[j] && out_c[j];
        if (all) break;
      }
    }
    for (int j = 0; j < m; ++j) {
      const double r = radii[j];
      const double fine = out_f[j] ? 1.0 : 1.0 - std::exp(log_f[j]);
      const double coarse = out_c[j] ? 1.0 : 1.0 - std::exp(log_c[j]);
      out[5 * j + 0] = opt.extrapolate ? richardson(fine, coarse, w) : fine;
      out[5 * j + 1] = fine;
      out[5 * j + 2] = coarse;
      out[5 * j + 3] = line_max >= r ? 1.0 : 0.0;
      out[5 * j + 4] = opt.antithetic ? 0.5 * ((up >= r) + (down >= r)) : (up >= r ? 1.0 : 0.0);
    }
  };
  const auto acc = mc::run(0, n_paths, 5 * m, resolve_threads(opt.threads), opt.block, path);
  ExitProfile prof;
  prof.radii = radii;
  prof.n = n_paths;
  prof.wall_ms = elapsed_ms(start);
  for (int j = 0; j < m; ++j) {
    Estimate ball = make_estimate(acc[5 * j], opt.seed, start);
    ball.details = {{"fine", acc[5 * j + 1].mean},
                    {"coarse", acc[5 * j + 2].mean},
                    {"gamma", opt.extrapolate ? gamma : 0.0},
                    {"bridge", bridge ? 1.0 : 0.0}};
    prof.ball.push_back(ball);
    prof.line.push_back(make_estimate(acc[5 * j + 3], opt.seed, start));
    prof.sup.push_back(make_estimate(acc[5 * j + 4], opt.seed, start));
  }
  return prof;
}

Estimate exit_probability_ball(const LevyModel& model, double r, double t, std::uint64_t n_paths,
                               const RunOptions& opt) {
  ExitProfile p = exit_profile(model, {r}, t, n_paths, opt);
  Estimate e = p.ball.front();
  e.wall_ms = p.wall_ms;
  return e;
}

Estimate expected_exit_time(const LevyModel& model, double r, double horizon, std::uint64_t n_paths,
                            const RunOptions& opt) {
  validate(model);
  check_run(horizon, n_paths, opt);
  if (!(r > 0.0)) throw ArgumentError("radius must be positive");
  const auto start = Clock::now();
  const int d = model.dim, n = opt.steps;
  const double dt = horizon / n;
  const IncrementSampler sampler(model, dt, cutoff_for(model, horizon, opt), opt.mode);
  const bool bridge = opt.bridge && sampler.kind() != IncrementSampler::Kind::ExactStable &&
                      sampler.gaussian_variance_rate() > 0.0;
  const double vdt = sampler.gaussian_variance_rate() * dt;
  const double w = std::pow(2.0, monitoring_bias_order(model));

  auto path = [&](std::uint64_t index, std::span<double> out) {
    Rng rng(opt.seed, index);
    Vec x = Vec::Zero(d), inc(d);
    double surv_f = 1.0, surv_c = 1.0, area_f = 0.0, area_c = 0.0;
    double rho_prev = 0.0, rho_prev_c = 0.0;
    for (int k = 1; k <= n && (surv_f > 0.0 || surv_c > 0.0); ++k) {
      sampler.sample(rng, inc);
      x += inc;
      const double rho = x.norm();
      const double prev_f = surv_f;
      if (surv_f > 0.0) {
        surv_f = rho >= r ? 0.0 : surv_f * (bridge ? std::exp(log_bridge_survival(r - rho_prev, r - rho, vdt)) : 1.0);
        area_f += 0.5 * (prev_f + surv_f) * dt;
      }
      rho_prev = rho;
      if ((k & 1) == 0) {
        const double prev_c = surv_c;
        if (surv_c > 0.0) {
          surv_c = rho >= r ? 0.0
                            : surv_c * (bridge ? std::exp(log_bridge_survival(r - rho_prev_c, r - rho, 2.0 * vdt)) : 1.0);
          area_c += (prev_c + surv_c) * dt;
        }
        rho_prev_c = rho;
      }
    }
    out[0] = opt.extrapolate ? richardson(area_f, area_c, w) : area_f;
    out[1] = area_f;
    out[2] = area_c;
  };
  const auto acc = mc::run(0, n_paths, 3, resolve_threads(opt.threads), opt.block, path);
  Estimate e = make_estimate(acc[0], opt.seed, start);
  e.details = {{"fine", acc[1].mean}, {"coarse", acc[2].mean}, {"horizon", horizon}};
  return e;
}

// ---------------------------------------------------------------------------
// Rate of jumps leaving a ball or half-space

namespace {

double sphere_weight(int d, double theta) {
  if (d == 2) return 2.0;  // both half-circles
  return omega(d - 1) * std::pow(std::sin(theta), d - 2);
}

}  // namespace

EscapeRate::EscapeRate(const LevyModel& model, const Domain& domain, double eps, int points_per_decade)
    : d_(model.dim),
      eps_(eps),
      R_(domain.R()),
      halfspace_(domain.as_halfspace() != nullptr),
      tail_(model.jumps ? TailTable(*model.jumps, eps > 0.0 ? eps : model.jumps->profile.R0 * 1e-12)
                        : throw ArgumentError("escape rate needs a jump law")) {
  if (domain.dim() != model.dim) throw ArgumentError("model and domain dimensions differ");
  if (!domain.as_ball() && !halfspace_) throw ArgumentError("escape rate is implemented for balls and half-spaces");
  if (eps < 0.0) throw ArgumentError("cutoff must be non-negative");
  const double R0 = model.jumps->profile.R0;
  const double lo = std::log(eps > 0.0 ? 1e-3 * std::min(eps, R_) : 1e-12 * std::min(R0, R_));
  const double hi = std::log(halfspace_ ? 1e3 * R0 : R_);
  const int n = std::max(8, static_cast<int>(std::ceil((hi - lo) / std::log(10.0) * points_per_decade)) + 1);
  log_depth_.resize(n);
  value_.resize(n);
  for (int i = 0; i < n; ++i) {
    log_depth_[i] = lo + (hi - lo) * i / (n - 1);
    value_[i] = exact(std::exp(log_depth_[i]));
  }
}

double EscapeRate::exact(double depth) const {
  if (!(depth > 0.0)) throw ArgumentError("depth must be positive");
  // The tail table is piecewise smooth: aim at 1e-7, accept 1e-5.
  quad::Options qo;
  qo.rtol = 1e-7;
  auto settle = [](const quad::Result& r) {
    if (!r.converged && r.abs_error > 1e-5 * std::abs(r.value) + 1e-300)
      return quad::require(r, "escape rate");
    return r.value;
  };
  const double eps = eps_;
  if (halfspace_) {
    auto f = [&](double th) {
      const double c = std::cos(th);
      if (c <= 0.0) return 0.0;
      return sphere_weight(d_, th) * tail_(std::max(depth / c, eps));
    };
    // Split where the clamp at eps switches off.
    const double th_eps = eps > depth ? std::acos(depth / eps) : 0.0;
    double v = 0.0;
    if (th_eps > 0.0) v += settle(quad::adaptive(f, 0.0, th_eps, qo));
    v += settle(quad::adaptive(f, th_eps, 0.5 * kPi, qo));
    return v;
  }
  if (depth > R_) throw ArgumentError("depth exceeds the ball radius");
  const double rho = R_ - depth;
  // Chord length from the point towards angle th; R^2 - rho^2 = depth (2R - depth)
  // is formed exactly to avoid cancellation near the boundary.
  const double gap = depth * (2.0 * R_ - depth);
  auto ell = [&, gap](double th) {
    const double c = std::cos(th);
    const double root = std::sqrt(gap + rho * rho * c * c);
    return c > 0.0 ? gap / (rho * c + root) : root - rho * c;
  };
  auto f = [&](double th) { return sphere_weight(d_, th) * tail_(std::max(ell(th), eps)); };
  // Breakpoints: the clamp switch (ell increases in theta) and pi/2.
  std::vector<double> cuts = {0.0, 0.5 * kPi, kPi};
  if (eps > depth && eps < 2.0 * R_ - depth) {
    double lo = 0.0, hi = kPi;
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (lo + hi);
      (ell(mid) < eps ? lo : hi) = mid;
    }
    cuts.push_back(0.5 * (lo + hi));
  }
  // Near the boundary the chord length changes on the angular scale sqrt(depth / R).
  const double th_edge = 0.5 * kPi - std::sqrt(depth / R_);
  if (th_edge > 0.0) cuts.push_back(th_edge);
  std::sort(cuts.begin(), cuts.end());
  double v = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    if (cuts[i + 1] > cuts[i]) v += settle(quad::adaptive(f, cuts[i], cuts[i + 1], qo));
  return v;
}

double EscapeRate::operator()(double depth) const {
  const double ld = std::log(std::max(depth, 1e-300));
  if (ld <= log_depth_.front()) return value_.front();
  const std::size_t n = log_depth_.size();
  if (ld >= log_depth_.back()) {
    if (!halfspace_ || value_[n - 1] <= 0.0 || value_[n - 2] <= 0.0) return value_.back();
    const double slope = std::log(value_[n - 1] / value_[n - 2]) / (log_depth_[n - 1] - log_depth_[n - 2]);
    return value_.back() * std::exp(slope * (ld - log_depth_.back()));
  }
  const double h = (log_depth_.back() - log_depth_.front()) / (n - 1);
  const std::size_t i = std::min(n - 2, static_cast<std::size_t>((ld - log_depth_.front()) / h));
  const double f = (ld - log_depth_[i]) / h;
  // Four-point Lagrange in (log depth, log rate), linear where the rate vanishes.
  const std::size_t j = std::clamp<std::size_t>(i, 1, n - 3) - 1;
  bool positive = true;
  for (std::size_t k = j; k < j + 4; ++k) positive = positive && value_[k] > 0.0;
  if (!positive) return (1.0 - f) * value_[i] + f * value_[i + 1];
  const double x = (ld - log_depth_[j]) / h;
  double v = 0.0;
  for (int k = 0; k < 4; ++k) {
    double w = 1.0;
    for (int m = 0; m < 4; ++m)
      if (m != k) w *= (x - m) / (k - m);
    v += w * std::log(value_[j + k]);
  }
  return std::exp(v);
}

// ---------------------------------------------------------------------------
// Heat content deficit

const char* to_string(DeficitStrategy::Kind k) {
  switch (k) {
    case DeficitStrategy::UniformDomain:
      return "uniform";
    case DeficitStrategy::BoundaryLayer:
      return "layer";
    case DeficitStrategy::Stratified:
      return "stratified";
  }
  return "?";
}

namespace {

// Probability of leaving D by time t from x, estimated on the step grid dt and 2 dt.
// Jumps that would land outside are optionally removed and their rate integrated
// along the path (the survival weight exp(-int kappa)), which makes the estimator
// smooth in x.
class ExitKernel {
 public:
  ExitKernel(const LevyModel& model, const Domain& domain, double t, const RunOptions& opt, bool allow_killing)
      : domain_(domain), opt_(opt), steps_(opt.steps), dt_(t / opt.steps) {
    const double eps = cutoff_for(model, t, opt);
    SamplerMode mode = opt.mode;
    const bool killable = model.jumps && (domain.as_ball() || domain.as_halfspace()) && allow_killing;
    if (killable && mode == SamplerMode::Auto) mode = SamplerMode::Density;
    sampler_.emplace(model, dt_, eps, mode);
    killing_ = killable && sampler_->kind() == IncrementSampler::Kind::Density;
    if (killing_) rate_.emplace(model, domain, sampler_->cutoff());
    const bool gaussian = sampler_->kind() != IncrementSampler::Kind::ExactStable;
    vdt_ = (opt.bridge && gaussian) ? sampler_->gaussian_variance_rate() * dt_ : 0.0;
    gamma_ = killing_ ? 1.0 : (vdt_ > 0.0 && !model.jumps ? 1.0 : monitoring_bias_order(model));
    w_ = std::pow(2.0, gamma_);
  }

  bool killing() const { return killing_; }
  double gamma() const { return gamma_; }
  const IncrementSampler& sampler() const { return *sampler_; }

  struct Value {
    double fine = 0.0;
    double coarse = 0.0;
  };

  Value operator()(const Vec& x0, Rng& rng) const {
    const double depth0 = -signed_distance(domain_, x0);
    if (!(depth0 > 0.0)) return {1.0, 1.0};
    const int sides = opt_.antithetic ? 2 : 1;
    const bool two_levels = opt_.extrapolate;
    Side side[2];
    const double kappa0 = killing_ ? (*rate_)(depth0) : 0.0;
    for (int s = 0; s < sides; ++s) {
      side[s].x = x0;
      side[s].depth = side[s].depth_c = depth0;
      side[s].kappa_f = side[s].kappa_c = kappa0;
      if (!two_levels) side[s].out_c = true;
    }
    const int d = domain_.dim();
    Vec g(d);
    std::vector<Vec>& jumps = scratch();
    const bool density = sampler_->kind() == IncrementSampler::Kind::Density;
    for (int k = 1; k <= steps_; ++k) {
      jumps.clear();
      if (density)
        sampler_->sample_parts(rng, g, [&](const Vec& z) { jumps.push_back(z); });
      else
        sampler_->sample(rng, g);
      const bool even = (k & 1) == 0;
      bool all_done = true;
      for (int s = 0; s < sides; ++s) {
        Side& sd = side[s];
        if (sd.done()) continue;
        const double sign = s == 0 ? 1.0 : -1.0;
        // Continuous part, monitored before the jumps of this step.
        Vec q = sd.x + sign * g;
        const double dq = -signed_distance(domain_, q);
        if (!sd.out_f) {
          if (dq <= 0.0)
            sd.out_f = true;
          else if (vdt_ > 0.0)
            sd.log_f += log_bridge_survival(sd.depth, dq, vdt_);
        }
        if (even && !sd.out_c) {
          if (dq <= 0.0)
            sd.out_c = true;
          else if (vdt_ > 0.0)
            sd.log_c += log_bridge_survival(sd.depth_c, dq, 2.0 * vdt_);
        }
        sd.x = q;
        sd.depth = dq;
        for (const Vec& z : jumps) {
          Vec y = sd.x + sign * z;
          const double dy = -signed_distance(domain_, y);
          if (killing_) {
            if (dy > 0.0) {
              sd.x = y;
              sd.depth = dy;
            }
          } else {
            sd.x = y;
            sd.depth = dy;
            if (dy <= 0.0) {
              sd.out_f = sd.out_c = true;
              break;
            }
          }
        }
        if (killing_) {
          if (!sd.out_f) {
            const double kappa = (*rate_)(sd.depth);
            sd.log_f -= 0.5 * (sd.kappa_f + kappa) * dt_;
            sd.kappa_f = kappa;
          }
          if (even && !sd.out_c) {
            const double kappa = (*rate_)(sd.depth);
            sd.log_c -= (sd.kappa_c + kappa) * dt_;
            sd.kappa_c = kappa;
          }
        }
        if (even) sd.depth_c = sd.depth;
        all_done = all_done && sd.done();
      }
      if (all_done) break;
    }
    Value v;
    for (int s = 0; s < sides; ++s) {
      v.fine += side[s].out_f ? 1.0 : -std::expm1(side[s].log_f);
      v.coarse += side[s].out_c ? 1.0 : -std::expm1(side[s].log_c);
    }
    v.fine /= sides;
    v.coarse /= sides;
    if (!two_levels) v.coarse = v.fine;
    return v;
  }

  double combine(const Value& v) const { return opt_.extrapolate ? richardson(v.fine, v.coarse, w_) : v.fine; }

 private:
  struct Side {
    Vec x;
    double depth = 0.0, depth_c = 0.0;
    double kappa_f = 0.0, kappa_c = 0.0;
    double log_f = 0.0, log_c = 0.0;
    bool out_f = false, out_c = false;
    bool done() const { return (out_f || log_f < -40.0) && (out_c || log_c < -40.0); }
  };

  static std::vector<Vec>& scratch() {
    thread_local std::vector<Vec> buf;
    return buf;
  }

  const Domain& domain_;
  RunOptions opt_;
  int steps_;
  double dt_;
  std::optional<IncrementSampler> sampler_;
  std::optional<EscapeRate> rate_;
  bool killing_ = false;
  double vdt_ = 0.0;
  double gamma_ = 0.5;
  double w_ = std::sqrt(2.0);
};

DepthLaw default_depth_law(const LevyModel& model, double t, double a) {
  const double r = phi_inverse(ScaleFunction::of(model), t);
  DepthLaw law;
  if (model.has_diffusion() || !model.jumps) {
    law.kind = DepthLaw::Exponential;
    law.scale = 3.0 * r;
  } else {
    law.kind = DepthLaw::Logarithmic;
    law.scale = r;
  }
  if (!(law.scale < 0.5 * a)) law = DepthLaw{};
  return law;
}

}  // namespace

double fit_survival_constant(const LevyModel& model, double a, std::uint64_t n_paths, const RunOptions& opt,
                             int levels) {
  const ScaleFunction sf = ScaleFunction::of(model);
  const double phi_a = scale_phi(model, sf, a);
  double c = 0.0;
  for (int k = 0; k < levels; ++k) {
    const double s = phi_a * std::ldexp(1.0, -k);
    RunOptions o = opt;
    o.seed = opt.seed + 0x9e37 + k;
    const Estimate p = exit_probability_ball(model, a, s, n_paths, o);
    c = std::max(c, p.value * phi_a / s);
  }
  return c;
}

DeficitEstimate heat_content_deficit(const LevyModel& model, const Domain& domain, double t, std::uint64_t n_paths,
                                     const DeficitStrategy& strategy, const RunOptions& opt) {
  validate(model);
  check_run(t, n_paths, opt);
  if (domain.dim() != model.dim) throw ArgumentError("model and domain dimensions differ");
  const auto start = Clock::now();
  const int threads = resolve_threads(opt.threads);

  DeficitEstimate out;
  out.strategy = to_string(strategy.kind);
  out.seed = opt.seed;

  if (strategy.kind == DeficitStrategy::UniformDomain) {
    if (!domain.bounded()) throw ArgumentError("uniform sampling needs a bounded domain");
    const ExitKernel kernel(model, domain, t, opt, true);
    const double vol = volume(domain).value;
    auto f = [&](std::uint64_t index, std::span<double> o) {
      Rng rng(opt.seed, index);
      const Vec x = uniform_in_domain(domain, 0.0, rng);
      const auto v = kernel(x, rng);
      o[0] = vol * kernel.combine(v);
      o[1] = vol * v.fine;
      o[2] = vol * v.coarse;
    };
    const auto acc = mc::run(0, n_paths, 3, threads, opt.block, f);
    static_cast<Estimate&>(out) = make_estimate(acc[0], opt.seed, start);
    out.strategy = to_string(strategy.kind);
    out.killing = kernel.killing();
    out.details = {{"fine", acc[1].mean}, {"coarse", acc[2].mean}, {"gamma", opt.extrapolate ? kernel.gamma() : 0.0},
                   {"volume", vol}};
    return out;
  }

  const double R = domain.R();
  const double a = strategy.a.value_or(std::isfinite(R) ? 0.25 * R : 0.25);
  if (!(a > 0.0)) throw ArgumentError("layer width must be positive");
  if (std::isfinite(R) && !(a < 0.5 * R)) throw ArgumentError("layer width must be below R/2");
  if (strategy.kind == DeficitStrategy::Stratified && !domain.bounded())
    throw ArgumentError("stratified sampling needs a bounded domain");
  const DepthLaw depth = strategy.depth.value_or(default_depth_law(model, t, a));
  const LayerSampler layer(domain, a, depth);
  const ExitKernel kernel(model, domain, t, opt, true);

  std::uint64_t n_layer = n_paths, n_inner = 0;
  if (strategy.kind == DeficitStrategy::Stratified) {
    if (!(strategy.interior_fraction > 0.0 && strategy.interior_fraction < 1.0))
      throw ArgumentError("interior fraction must lie in (0, 1)");
    n_inner = std::max<std::uint64_t>(2, static_cast<std::uint64_t>(std::llround(strategy.interior_fraction * n_paths)));
    n_layer = n_paths > n_inner + 2 ? n_paths - n_inner : 2;
  }

  auto f_layer = [&](std::uint64_t index, std::span<double> o) {
    Rng rng(opt.seed, index);
    const LayerSample ls = layer.sample(rng);
    const auto v = kernel(ls.x, rng);
    const double w = ls.weight * ls.jacobian;
    o[0] = w * kernel.combine(v);
    o[1] = w * v.fine;
    o[2] = w * v.coarse;
  };
  const auto acc = mc::run(0, n_layer, 3, threads, opt.block, f_layer);
  double value = acc[0].mean, var = acc[0].std_error() * acc[0].std_error();
  double fine = acc[1].mean, coarse = acc[2].mean;
  out.details = {{"layer", acc[0].mean}, {"layer_stderr", acc[0].std_error()}};

  if (n_inner > 0) {
    const double vol = inner_volume(domain, a);
    auto f_inner = [&](std::uint64_t index, std::span<double> o) {
      Rng rng(opt.seed, index);
      const Vec x = uniform_in_domain(domain, a, rng);
      const auto v = kernel(x, rng);
      o[0] = vol * kernel.combine(v);
      o[1] = vol * v.fine;
      o[2] = vol * v.coarse;
    };
    const auto inner = mc::run(n_layer, n_inner, 3, threads, opt.block, f_inner);
    value += inner[0].mean;
    var += inner[0].std_error() * inner[0].std_error();
    fine += inner[1].mean;
    coarse += inner[2].mean;
    out.details.emplace_back("interior", inner[0].mean);
    out.details.emplace_back("interior_stderr", inner[0].std_error());
  }

  out.value = value;
  out.std_error = std::sqrt(var);
  out.n = n_layer + n_inner;
  out.layer_width = a;
  out.killing = kernel.killing();
  out.details.emplace_back("fine", fine);
  out.details.emplace_back("coarse", coarse);
  out.details.emplace_back("gamma", opt.extrapolate ? kernel.gamma() : 0.0);
  out.details.emplace_back("depth_scale", depth.kind == DepthLaw::Uniform ? 0.0 : depth.scale);
  out.details.emplace_back("cutoff", kernel.sampler().cutoff());

  if (strategy.kind == DeficitStrategy::BoundaryLayer) {
    if (domain.bounded()) {
      const ScaleFunction sf = ScaleFunction::of(model);
      RunOptions fit = opt;
      fit.steps = std::min(opt.steps, 256);
      fit.steps += fit.steps % 2;
      const std::uint64_t n_fit = std::clamp<std::uint64_t>(n_paths / 50, 1000, 20000);
      const double c = fit_survival_constant(model, a, n_fit, fit);
      out.bias_hi = c * t * inner_volume(domain, a) / scale_phi(model, sf, a);
      out.details.emplace_back("survival_constant", c);
    } else {
      out.bias_hi = HUGE_VAL;
    }
  }
  out.wall_ms = elapsed_ms(start);
  return out;
}

// ---------------------------------------------------------------------------
// Perimeter

double flat_layer_perimeter(const LevyModel& model, double h) {
  if (!model.jumps) throw ArgumentError("flat-layer perimeter needs a jump law");
  if (!(h > 0.0)) throw ArgumentError("layer depth must be positive");
  const Domain half = Domain::halfspace(Vec::Zero(model.dim), unit_vec(model.dim, 0));
  const EscapeRate rate(model, half, 0.0);
  quad::Options qo;
  qo.rtol = 1e-9;
  return quad::require(quad::graded_from_zero([&](double s) { return rate.exact(s); }, h, qo), "flat-layer perimeter");
}

namespace {

Estimate perimeter_quadrature(const LevyModel& model, const Domain& domain, const PerimeterOptions& opt) {
  const Ball* ball = domain.as_ball();
  if (!ball) throw ArgumentError("quadrature perimeter is implemented for balls; use the Monte Carlo method");
  const auto start = Clock::now();
  const int d = domain.dim();
  const double R = ball->radius;
  const EscapeRate rate(model, domain, 0.0);
  quad::Options qo;
  qo.rtol = opt.rtol;
  auto f = [&](double s) { return omega(d) * std::pow(R - s, d - 1) * rate.exact(s); };
  const quad::Result near = quad::graded_from_zero(f, 0.5 * R, qo);
  const quad::Result far = quad::adaptive(f, 0.5 * R, R, qo);
  Estimate e;
  e.value = quad::require(near, "perimeter layer") + quad::require(far, "perimeter core");
  e.std_error = near.abs_error + far.abs_error;
  e.n = static_cast<std::uint64_t>(near.panels + far.panels);
  e.seed = opt.seed;
  e.wall_ms = elapsed_ms(start);
  e.details = {{"method_quadrature", 1.0}};
  return e;
}

Estimate perimeter_monte_carlo(const LevyModel& model, const Domain& domain, const PerimeterOptions& opt) {
  if (opt.ladder.empty()) throw ArgumentError("Monte Carlo perimeter needs a cutoff ladder");
  if (opt.samples < 2) throw ArgumentError("need at least two samples per level");
  const auto start = Clock::now();
  const int d = domain.dim();
  const RadialJumpLaw& law = *model.jumps;
  const double R = domain.R();
  const double vol = volume(domain).value;
  const int threads = resolve_threads(opt.threads);

  std::vector<double> V, S, B;
  Estimate e;
  for (std::size_t level = 0; level < opt.ladder.size(); ++level) {
    const double delta = opt.ladder[level] * R;
    const RadiusSampler radius(law, delta);
    const double scale = vol * omega(d) * radius.tail_at_cutoff();
    auto f = [&](std::uint64_t index, std::span<double> o) {
      Rng rng(opt.seed, index);
      const Vec x = uniform_in_domain(domain, 0.0, rng);
      const double r = radius(rng.uniform());
      const Vec y = x + r * uniform_direction(d, rng);
      o[0] = contains(domain, y) ? 0.0 : scale;
    };
    const auto acc = mc::run(level * opt.samples, opt.samples, 1, threads, 512, f);
    const ScalingProfile& p = law.profile;
    const double b = quad::require(quad::graded_from_zero([&](double r) { return 1.0 / eval_psi(p, r); }, delta),
                                   "int_0^delta dr / psi");
    V.push_back(acc[0].mean);
    S.push_back(std::max(acc[0].std_error(), 1e-300));
    B.push_back(b);
    std::ostringstream key;
    key << "level_" << opt.ladder[level];
    e.details.emplace_back(key.str(), acc[0].mean);
    e.details.emplace_back(key.str() + "_stderr", acc[0].std_error());
  }

  // Weighted least squares V_i = P - c B_i.
  const double flat = surface_area(domain) * law.kappa * omega(d - 1) / (d - 1);
  if (V.size() == 1) {
    e.value = V[0];
    e.std_error = S[0];
  } else {
    double sw = 0, sb = 0, sbb = 0, sv = 0, sbv = 0;
    for (std::size_t i = 0; i < V.size(); ++i) {
      const double w = 1.0 / (S[i] * S[i]);
      sw += w;
      sb += w * B[i];
      sbb += w * B[i] * B[i];
      sv += w * V[i];
      sbv += w * B[i] * V[i];
    }
    const double det = sw * sbb - sb * sb;
    if (!(det > 0.0)) throw NumericError("degenerate cutoff ladder in the perimeter fit");
    const double P = (sbb * sv - sb * sbv) / det;
    const double slope = -(sw * sbv - sb * sv) / det;
    e.value = P;
    e.std_error = std::sqrt(sbb / det);
    e.details.emplace_back("slope", slope);
  }
  e.details.emplace_back("flat_slope", flat);
  e.n = opt.samples * opt.ladder.size();
  e.seed = opt.seed;
  e.wall_ms = elapsed_ms(start);
  return e;
}

}  // namespace

Estimate perimeter(const LevyModel& model, const Domain& domain, const PerimeterOptions& opt) {
  validate(model);
  if (domain.dim() != model.dim) throw ArgumentError("model and domain dimensions differ");
  if (!model.jumps || model.has_diffusion())
    throw DivergentPerimeterError("the perimeter diverges for processes with a diffusion part");
  const VariationClass vc = classify_variation(model);
  if (vc.kind == Variation::Unbounded)
    throw DivergentPerimeterError("the perimeter diverges for unbounded-variation jump kernels");
  if (!domain.bounded()) throw ArgumentError("the perimeter of an unbounded domain is infinite");
  return opt.method == PerimeterMethod::Quadrature ? perimeter_quadrature(model, domain, opt)
                                                   : perimeter_monte_carlo(model, domain, opt);
}

// ---------------------------------------------------------------------------

namespace reference {

double brownian_sup_mean(double t, double sigma2) { return std::sqrt(2.0 * t * sigma2 / kPi); }

double cauchy_sup_asymptotic(double t) { return t * std::log(1.0 / t) / kPi; }

double stable_sup_mean(double beta) {
  if (!(beta > 1.0 && beta < 2.0)) throw ArgumentError("the supremum has a finite mean only for beta in (1, 2)");
  return beta / kPi * std::tgamma(1.0 - 1.0 / beta);
}

double stable_discrete_sup_mean(double beta, std::uint64_t n) {
  if (!(beta > 1.0 && beta < 2.0)) throw ArgumentError("the supremum has a finite mean only for beta in (1, 2)");
  const double positive_part = std::tgamma(1.0 - 1.0 / beta) / kPi;
  double sum = 0.0;
  for (std::uint64_t k = n; k >= 1; --k) sum += std::pow(static_cast<double>(k) / n, 1.0 / beta) / k;
  return positive_part * sum;
}

double projection_constant(int d, double beta) {
  return std::pow(kPi, 0.5 * (d - 1)) * std::tgamma(0.5 * (1.0 + beta)) / std::tgamma(0.5 * (d + beta));
}

}  // namespace reference

}  // namespace shc
