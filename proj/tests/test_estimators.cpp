#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "shc/estimators.hpp"
#include "shc/scale_kernel.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>

using namespace shc;

namespace {

RunOptions opts(int steps, std::uint64_t seed) {
  RunOptions o;
  o.steps = steps;
  o.seed = seed;
  return o;
}

bool within(const Estimate& e, double target, double k) { return std::abs(e.value - target) <= k * e.std_error; }

}  // namespace

TEST_CASE("accumulator merge equals a single pass") {
  mc::Accumulator all, left, right;
  for (int i = 0; i < 1000; ++i) {
    const double x = std::sin(i * 0.37) * 3.0 + i * 1e-3;
    all.add(x);
    (i < 400 ? left : right).add(x);
  }
  left.merge(right);
  CHECK(left.n == all.n);
  CHECK(left.mean == doctest::Approx(all.mean).epsilon(1e-13));
  CHECK(left.variance() == doctest::Approx(all.variance()).epsilon(1e-11));
}

TEST_CASE("reduction does not depend on the thread count") {
  const auto m = models::stable(2, 1.5);
  RunOptions a = opts(64, 9), b = opts(64, 9);
  a.threads = 1;
  b.threads = 3;
  const Estimate x = sup_functional(m, unit_vec(2, 0), 1e-2, 1.0, 5000, a);
  const Estimate y = sup_functional(m, unit_vec(2, 0), 1e-2, 1.0, 5000, b);
  CHECK(x.value == y.value);
  CHECK(x.std_error == y.std_error);
}

TEST_CASE("Brownian sup matches the reflection principle") {
  const auto m = models::brownian(2);
  for (double t : {1e-2, 1e-3}) {
    const Estimate e = sup_functional(m, unit_vec(2, 1), t, 1.0, 20000, opts(1024, 2));
    CHECK(within(e, reference::brownian_sup_mean(t), 3.0));
  }
  Vec nu(2);
  nu << std::sqrt(0.5), std::sqrt(0.5);
  const Estimate e = sup_functional(m, nu, 1e-3, 1.0, 20000, opts(1024, 3));
  CHECK(within(e, reference::brownian_sup_mean(1e-3), 3.0));
}

TEST_CASE("stable sup obeys the scaling property") {
  // E[sup_{s <= t} Y ^ 1] = t^{1/beta} E[sup_{s <= 1} Y ^ t^{-1/beta}].
  const auto m = models::stable(2, 1.5);
  for (double t : {1e-3, 1e-4}) {
    RunOptions o = opts(64, 5);
    o.extrapolate = false;
    const Estimate small = sup_functional(m, unit_vec(2, 0), t, 1.0, 100000, o);
    o.seed = 6;
    Estimate unit = sup_functional(m, unit_vec(2, 0), 1.0, std::pow(t, -1.0 / 1.5), 100000, o);
    const double s = std::pow(t, 1.0 / 1.5);
    CHECK(std::abs(small.value - s * unit.value) <= 3.0 * std::hypot(small.std_error, s * unit.std_error));
  }
}

TEST_CASE("Cauchy sup: constant in E[sup ^ 1] = (t / pi)(ln(1/t) + c) is t-independent") {
  const auto m = models::stable(2, 1.0);
  std::vector<double> c, se;
  for (double t : {1e-2, 1e-3, 1e-4}) {
    const Estimate e = sup_functional(m, unit_vec(2, 0), t, 1.0, 40000, opts(256, 7));
    c.push_back(kPi * e.value / t - std::log(1.0 / t));
    se.push_back(kPi * e.std_error / t);
  }
  for (std::size_t k = 1; k < c.size(); ++k) CHECK(std::abs(c[k] - c[0]) < 3.0 * std::hypot(se[k], se[0]) + 0.15);
  // The ratio to t ln(1/t) / pi falls towards 1 only at the logarithmic rate.
  CHECK(c[2] > 0.0);
}

TEST_CASE("discrete and continuous stable sup references") {
  CHECK(reference::stable_sup_mean(1.5) == doctest::Approx(1.5 / kPi * std::tgamma(1.0 / 3.0)));
  // Spitzer: E[max_{k <= n} S_k] = sum_k E[S_k^+] / k, S_k^+ mean = (k/n)^{1/beta} Gamma(1 - 1/beta) / pi.
  CHECK(reference::stable_discrete_sup_mean(1.5, 1) == doctest::Approx(std::tgamma(1.0 / 3.0) / kPi));
  const double a = reference::stable_discrete_sup_mean(1.5, 1 << 12), b = reference::stable_discrete_sup_mean(1.5, 1 << 16);
  CHECK(a < b);
  CHECK(b < reference::stable_sup_mean(1.5));
  // The grid bias decays like n^{-1/beta}.
  const double ba = reference::stable_sup_mean(1.5) - a, bb = reference::stable_sup_mean(1.5) - b;
  CHECK(ba / bb == doctest::Approx(std::pow(16.0, 1.0 / 1.5)).epsilon(0.05));
  CHECK(reference::projection_constant(2, 1.0) == doctest::Approx(2.0));
  CHECK(reference::projection_constant(1, 0.3) == doctest::Approx(1.0));
}

TEST_CASE("cap identity") {
  const auto m = models::brownian(2);
  const Estimate capped = sup_functional(m, unit_vec(2, 0), 1e-4, 1.0, 5000, opts(256, 8));
  const Estimate wide = sup_functional(m, unit_vec(2, 0), 1e-4, 1e6, 5000, opts(256, 8));
  CHECK(capped.value == wide.value);
  const auto s = models::stable(2, 1.2);
  const Estimate c1 = sup_functional(s, unit_vec(2, 0), 0.5, 1.0, 5000, opts(64, 8));
  const Estimate c2 = sup_functional(s, unit_vec(2, 0), 0.5, 1e6, 5000, opts(64, 8));
  CHECK(c2.value >= c1.value);
}

TEST_CASE("sup functional and deficit are non-decreasing in t") {
  const auto m = models::stable(2, 1.5);
  const Domain disk = Domain::ball(Vec::Zero(2), 1.0);
  Estimate prev_s, prev_d;
  bool first = true;
  for (double t : {1e-4, 1e-3, 1e-2}) {
    const Estimate s = sup_functional(m, unit_vec(2, 0), t, 1.0, 10000, opts(128, 10));
    const Estimate d = heat_content_deficit(m, disk, t, 4000, DeficitStrategy::stratified(), opts(64, 11));
    if (!first) {
      CHECK(s.value >= prev_s.value - 2.0 * std::hypot(s.std_error, prev_s.std_error));
      CHECK(d.value >= prev_d.value - 2.0 * std::hypot(d.std_error, prev_d.std_error));
    }
    prev_s = s;
    prev_d = d;
    first = false;
  }
}

TEST_CASE("half-space layer integral is the capped sup") {
  const auto m = models::stable(2, 1.5);
  const Estimate a = halfspace_layer_integral(m, unit_vec(2, 0), 0.3, 1e-3, 5000, opts(64, 12));
  const Estimate b = sup_functional(m, unit_vec(2, 0), 1e-3, 0.3, 5000, opts(64, 12));
  CHECK(a.value == b.value);

  const auto bm = models::brownian(2);
  const Estimate h = halfspace_layer_integral(bm, unit_vec(2, 0), 0.3, 1e-4, 20000, opts(512, 13));
  const Estimate s = sup_functional(bm, unit_vec(2, 0), 1e-4, 1.0, 20000, opts(512, 14));
  CHECK(h.value / s.value == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("layer width matters less as t shrinks") {
  const auto m = models::stable(2, 1.5);
  auto gap = [&](double t) {
    const Estimate a = halfspace_layer_integral(m, unit_vec(2, 0), 0.2, t, 40000, opts(64, 15));
    const Estimate b = halfspace_layer_integral(m, unit_vec(2, 0), 2.0, t, 40000, opts(64, 15));
    return 1.0 - a.value / b.value;
  };
  const double g2 = gap(1e-2), g4 = gap(1e-4);
  CHECK(g4 < g2);
  CHECK(g4 < 0.05);
}

TEST_CASE("boundary layer integrals are ordered by containment") {
  for (const auto& m : {models::brownian(2), models::stable(2, 1.5)}) {
    const LayerTriple tri = boundary_layer_integrals(m, 0.5, 0.2, 1e-3, 10000, opts(128, 16));
    CHECK(tri.inner_ball.value >= tri.halfspace.value - 2.0 * std::hypot(tri.inner_ball.std_error, tri.halfspace.std_error));
    CHECK(tri.halfspace.value >= tri.outer_ball.value - 2.0 * std::hypot(tri.halfspace.std_error, tri.outer_ball.std_error));
  }
}

TEST_CASE("exit probabilities") {
  const auto bm = models::brownian(2);
  const Estimate big = exit_probability_ball(bm, 0.1, 1.0, 2000, opts(256, 17));
  CHECK(big.value == doctest::Approx(1.0).epsilon(1e-6));

  const Estimate coarse = exit_probability_ball(bm, 1.0, 0.1, 20000, opts(64, 18));
  const Estimate fine = exit_probability_ball(bm, 1.0, 0.1, 20000, opts(640, 19));
  CHECK(std::abs(coarse.value - fine.value) <= 2.0 * std::hypot(coarse.std_error, fine.std_error));
}

TEST_CASE("reflection inequality on an (r, t) grid") {
  for (const auto& m : {models::brownian(2), models::stable(2, 1.0), models::stable(2, 1.5)}) {
    for (double t : {1e-3, 1e-2}) {
      const ExitProfile p = exit_profile(m, {0.02, 0.05, 0.1, 0.2}, t, 5000, opts(128, 20));
      for (std::size_t j = 0; j < p.radii.size(); ++j)
        CHECK(p.line[j].value <= 2.0 * p.sup[j].value + 3.0 * std::hypot(p.line[j].std_error, 2.0 * p.sup[j].std_error));
    }
  }
}

TEST_CASE("expected exit time") {
  // Brownian motion in the plane: E[tau_{B(0, r)}] = r^2 / 2 with Cov = t I.
  const auto bm = models::brownian(2);
  const Estimate e = expected_exit_time(bm, 0.3, 2.0, 10000, opts(2048, 21));
  CHECK(std::abs(e.value - 0.045) <= 3.0 * e.std_error + 2e-3);
  const ScaleFunction sf = ScaleFunction::of(bm);
  CHECK(e.value >= sf.phi(0.3) / 4.0 / 2.0);
}

TEST_CASE("heat content deficit limits") {
  const auto bm = models::brownian(2);
  const Domain disk = Domain::ball(Vec::Zero(2), 1.0);
  const DeficitEstimate all = heat_content_deficit(bm, disk, 100.0, 4000, DeficitStrategy::uniform(), opts(256, 22));
  CHECK(all.value == doctest::Approx(kPi).epsilon(0.01));
  const DeficitEstimate none = heat_content_deficit(bm, disk, 1e-12, 4000, DeficitStrategy::layer(), opts(64, 23));
  // Essentially nothing is lost; what is lost sits in a layer of width sqrt(t) along the boundary.
  CHECK(none.value < 1e-5);
  CHECK(std::abs(none.value - 2.0 * kPi * reference::brownian_sup_mean(1e-12)) <= 4.0 * none.std_error);
}

TEST_CASE("deficit strategies agree") {
  const auto bm = models::brownian(2);
  const Domain disk = Domain::ball(Vec::Zero(2), 1.0);
  const double t = 1e-2;
  const DeficitEstimate u = heat_content_deficit(bm, disk, t, 40000, DeficitStrategy::uniform(), opts(512, 24));
  const DeficitEstimate l = heat_content_deficit(bm, disk, t, 20000, DeficitStrategy::layer(), opts(512, 25));
  const DeficitEstimate s = heat_content_deficit(bm, disk, t, 20000, DeficitStrategy::stratified(), opts(512, 26));
  const double band = 3.0 * std::hypot(u.std_error, l.std_error);
  CHECK(u.value >= l.value + l.bias_lo - band);
  CHECK(u.value <= l.value + l.bias_hi + band);
  CHECK(std::abs(u.value - s.value) <= 3.0 * std::hypot(u.std_error, s.std_error));
  // Against the leading term |dD| sqrt(2t/pi).
  CHECK(s.value / (2.0 * kPi * reference::brownian_sup_mean(t)) == doctest::Approx(0.96).epsilon(0.03));
}

TEST_CASE("escape rate") {
  const auto cauchy = models::stable(2, 1.0);
  const EscapeRate half(cauchy, Domain::halfspace(Vec::Zero(2), unit_vec(2, 0)), 0.0);
  for (double delta : {1e-6, 1e-3, 0.1, 2.0}) CHECK(half.exact(delta) * kPi * delta == doctest::Approx(1.0).epsilon(1e-6));
  const EscapeRate disk(cauchy, Domain::ball(Vec::Zero(2), 1.0), 0.0);
  CHECK(disk.exact(1.0) == doctest::Approx(levy_tail_mass(cauchy, 1.0)).epsilon(1e-7));
  for (double delta : {1e-4, 3e-2, 0.5}) CHECK(disk(delta) == doctest::Approx(disk.exact(delta)).epsilon(1e-4));
  // Curvature raises the rate above the flat value near the boundary.
  CHECK(disk.exact(1e-3) > half.exact(1e-3));
  // With a cutoff the rate at the centre is the tail mass beyond max(eps, 1).
  const EscapeRate cut(cauchy, Domain::ball(Vec::Zero(2), 1.0), 0.05);
  CHECK(cut.exact(1.0) == doctest::Approx(levy_tail_mass(cauchy, 1.0)).epsilon(1e-7));
  CHECK(cut.exact(0.01) <= levy_tail_mass(cauchy, 0.05) * (1.0 + 1e-9));
}

TEST_CASE("flat layer perimeter") {
  // Per unit area: int_0^1 J(x_s, H^c) ds with J(x_s, H^c) = kappa K_{d,beta} s^{-beta} / beta, so
  // kappa K_{d,beta} / (beta (1 - beta)); K = 1 recovers 1 / (beta (1 - beta)) on the line.
  for (int d : {2, 3}) {
    for (double beta : {0.3, 0.5, 0.8}) {
      const auto m = models::stable(d, beta);
      CHECK(flat_layer_perimeter(m, 1.0) ==
            doctest::Approx(m.jumps->kappa * reference::projection_constant(d, beta) / (beta * (1.0 - beta))).epsilon(1e-6));
    }
  }
}

TEST_CASE("perimeter") {
  const auto m = models::stable(2, 0.5);
  const Domain disk = Domain::ball(Vec::Zero(2), 1.0);
  const Estimate q = perimeter(m, disk);
  // Independent oracle: Per = int_0^1 2 pi (1 - s) J(x_s, D^c) ds is checked against tanh-sinh over the
  // escape-rate integrand, and the disk at radius 2 scales by 2^{d - beta}.
  const EscapeRate rate(m, disk, 0.0);
  const double oracle = boost::math::quadrature::tanh_sinh<double>().integrate(
      [&](double s) { return 2.0 * kPi * (1.0 - s) * rate.exact(s); }, 0.0, 1.0);
  CHECK(q.value == doctest::Approx(oracle).epsilon(1e-6));
  const Estimate q2 = perimeter(m, Domain::ball(Vec::Zero(2), 2.0));
  CHECK(q2.value == doctest::Approx(std::pow(2.0, 1.5) * q.value).epsilon(0.01));

  PerimeterOptions po;
  po.method = PerimeterMethod::MonteCarlo;
  po.samples = 400000;
  const Estimate mc = perimeter(m, disk, po);
  CHECK(std::abs(mc.value - q.value) <= 3.0 * std::hypot(mc.std_error, q.std_error));
  const Estimate ell = perimeter(m, catalog::ellipse(1.5, 1.0), po);
  CHECK(ell.value > q.value);

  CHECK_THROWS_AS(perimeter(models::stable(2, 1.5), disk), DivergentPerimeterError);
}

TEST_CASE("bounded variation deficit approaches t times the perimeter") {
  const auto m = models::stable(2, 0.5);
  const Domain disk = Domain::ball(Vec::Zero(2), 1.0);
  const double t = 1e-3;
  const Estimate per = perimeter(m, disk);
  const DeficitEstimate d = heat_content_deficit(m, disk, t, 20000, DeficitStrategy::stratified(), opts(64, 27));
  CHECK(d.killing);
  CHECK(d.value / (t * per.value) == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("survival constant fit") {
  const auto m = models::stable(2, 1.5);
  const double c = fit_survival_constant(m, 0.25, 4000, opts(64, 28));
  CHECK(c > 0.0);
  CHECK(c < 50.0);
}

TEST_CASE("argument checks") {
  const auto m = models::stable(2, 1.5);
  CHECK_THROWS_AS(sup_functional(m, unit_vec(2, 0), -1.0, 1.0, 100), ArgumentError);
  CHECK_THROWS_AS(sup_functional(m, unit_vec(2, 0), 1.0, 0.0, 100), ArgumentError);
  CHECK_THROWS_AS(exit_profile(m, {}, 1.0, 100), ArgumentError);
  CHECK_THROWS_AS(heat_content_deficit(m, Domain::ball(Vec::Zero(3), 1.0), 1e-3, 100), ArgumentError);
}
