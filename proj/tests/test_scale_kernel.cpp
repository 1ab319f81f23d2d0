#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "shc/model.hpp"
#include "shc/profile.hpp"
#include "shc/quadrature.hpp"
#include "shc/scale_kernel.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <random>

using namespace shc;

namespace {

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = lo * std::pow(hi / lo, double(i) / (n - 1));
  return v;
}

}  // namespace

TEST_CASE("gauss-legendre and graded quadrature") {
  CHECK(quad::fixed([](double x) { return x * x * x * x; }, 0.0, 2.0) == doctest::Approx(32.0 / 5.0).epsilon(1e-14));
  auto r = quad::graded_from_zero([](double s) { return 1.0 / std::sqrt(s); }, 1.0);
  CHECK(r.converged);
  CHECK(r.value == doctest::Approx(2.0).epsilon(1e-8));
  auto l = quad::graded_from_zero([](double s) { return std::log(s); }, 1.0);
  CHECK(l.value == doctest::Approx(-1.0).epsilon(1e-8));
  auto a = quad::adaptive([](double x) { return std::abs(x - 0.3); }, 0.0, 1.0);
  CHECK(a.converged);
  CHECK(a.value == doctest::Approx(0.045 + 0.245).epsilon(1e-9));
  auto g = quad::graded_from_left([](double x) { return std::exp(-x); }, 0.0, 40.0);
  CHECK(g.value == doctest::Approx(1.0 - std::exp(-40.0)).epsilon(1e-9));
}

TEST_CASE("adaptive quadrature stops at its panel budget") {
  quad::Options o;
  o.max_panels = 200;
  auto r = quad::adaptive([](double x) { return std::sin(1.0 / x); }, 1e-9, 1.0, o);
  CHECK(r.panels <= 2 * o.max_panels);
  CHECK_THROWS_AS(quad::require(r, "oscillation"), NumericError);
}

TEST_CASE("eval_psi examples") {
  CHECK(eval_psi(stable_profile(1.5), 0.5) == doctest::Approx(0.35355339059327373).epsilon(1e-14));
  CHECK(eval_psi(stable_log_profile(0.0), 0.1) == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(eval_psi(variable_order_profile(1.1, 1.9), 0.25) == doctest::Approx(std::pow(0.25, 1.3)).epsilon(1e-12));
  // Continuous extension beyond R0.
  const auto p = stable_profile(1.5, 0.5);
  CHECK(eval_psi(p, 2.0) == doctest::Approx(std::pow(0.5, 1.5) * std::pow(4.0, 1.5)).epsilon(1e-12));
  CHECK_THROWS_AS(eval_psi(p, 0.0), ArgumentError);
}

TEST_CASE("verify_wlsc") {
  const auto grid = log_spaced_pairs(1.0, 40);
  const auto pow15 = verify_wlsc(stable_profile(1.5), grid);
  CHECK(pow15.pass);
  CHECK(pow15.min_ratio == doctest::Approx(1.0).epsilon(1e-9));

  const auto vo = variable_order_profile(1.1, 1.9);
  CHECK(verify_wlsc(vo, log_spaced_pairs(1.0, 45, 1e-6, 0.999)).pass);

  const auto fail = verify_wlsc(stable_profile(1.5), grid, 1.9);
  CHECK_FALSE(fail.pass);
  CHECK(fail.min_ratio < 1.0);
}

TEST_CASE("WLSC transfers to smaller indices") {
  const auto vo = variable_order_profile(1.2, 1.6);
  const auto grid = log_spaced_pairs(1.0, 30);
  REQUIRE(verify_wlsc(vo, grid).pass);
  for (double beta : {1.1, 0.8, 0.3}) CHECK(verify_wlsc(vo, grid, beta).pass);
}

TEST_CASE("eval_phi closed forms") {
  const ScaleFunction pure(stable_profile(1.5), 0.0);
  CHECK(pure.phi(1.0) == doctest::Approx(0.25).epsilon(1e-9));
  CHECK(pure.phi(0.01) == doctest::Approx(0.25 * std::pow(0.01, 1.5)).epsilon(1e-8));
  // ||A|| = 1: phi(1) = 1 / (1 + 2 int_0^1 s^{-1/2} ds) with the integral by tanh-sinh.
  const double I = boost::math::quadrature::tanh_sinh<double>().integrate([](double s) { return std::pow(s, -0.5); },
                                                                           0.0, 1.0);
  const ScaleFunction mixed(stable_profile(1.5), 1.0);
  CHECK(mixed.phi(1.0) == doctest::Approx(1.0 / (1.0 + 2.0 * I)).epsilon(1e-9));
  CHECK(mixed.phi(1.0) == doctest::Approx(0.2).epsilon(1e-9));
  CHECK_THROWS_AS(pure.phi(1.5), ArgumentError);
}

TEST_CASE("phi is dominated by psi and squeezed by r^2") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-8.0, 0.0);
  for (const auto& prof : {stable_profile(1.5), stable_profile(0.7), variable_order_profile(1.1, 1.9)}) {
    const ScaleFunction sf(prof, 0.0);
    for (int i = 0; i < 100; ++i) {
      const double r = std::pow(10.0, u(rng));
      CHECK(sf.phi(r) <= eval_psi(prof, r) * (1.0 + 1e-12));
    }
  }
  const ScaleFunction sf(stable_profile(1.5), 2.0);
  const double c = sf.square_constant();
  for (double r : log_grid(1e-6, 1.0, 50)) {
    CHECK(sf.phi(r) >= r * r / (c + 2.0) * (1.0 - 1e-12));
    CHECK(sf.phi(r) <= r * r / 2.0 * (1.0 + 1e-12));
  }
}

TEST_CASE("psi and phi are non-decreasing on 1000 log-spaced points") {
  for (const auto& prof : {stable_profile(1.5), stable_log_profile(-0.5), variable_order_profile(1.1, 1.9)}) {
    const ScaleFunction sf(prof, 0.0);
    double last_psi = 0.0, last_phi = 0.0;
    for (double r : log_grid(1e-9, prof.R0, 1000)) {
      const double ps = eval_psi(prof, r), ph = sf.phi(r);
      CHECK(ps >= last_psi);
      CHECK(ph >= last_phi * (1.0 - 1e-13));
      last_psi = ps;
      last_phi = ph;
    }
  }
}

TEST_CASE("invert_monotone") {
  CHECK(invert_monotone([](double r) { return std::pow(r, 1.5); }, 0.125, 1e-6, 1.0) ==
        doctest::Approx(0.25).epsilon(1e-10));
  const ScaleFunction pure(stable_profile(1.5), 0.0);
  CHECK(invert_monotone([&](double r) { return pure.phi(r); }, 0.25, 1e-6, 1.0) == doctest::Approx(1.0).epsilon(1e-10));
  const ScaleFunction mixed(stable_profile(1.5), 1.0);
  CHECK(invert_monotone([&](double r) { return mixed.phi(r); }, mixed.phi(0.3), 1e-6, 1.0) ==
        doctest::Approx(0.3).epsilon(1e-10));
  CHECK_THROWS_AS(invert_monotone([](double r) { return r; }, 5.0, 0.1, 1.0), BracketError);
  CHECK_THROWS_AS(invert_monotone([](double r) { return -r; }, -0.5, 0.1, 1.0), DegenerateScaleError);
}

TEST_CASE("round trip of psi and phi within 1e-9") {
  for (double beta : {0.5, 1.0, 1.5}) {
    const auto prof = stable_profile(beta);
    const ScaleFunction sf(prof, 0.0);
    for (double r : log_grid(1e-5, 0.9, 12)) {
      CHECK(invert_monotone([&](double x) { return eval_psi(prof, x); }, eval_psi(prof, r), 1e-7, 1.0) ==
            doctest::Approx(r).epsilon(1e-9));
      CHECK(invert_monotone([&](double x) { return sf.phi(x); }, sf.phi(r), 1e-7, 1.0) ==
            doctest::Approx(r).epsilon(1e-9));
    }
  }
}

TEST_CASE("levy_tail_mass") {
  const auto unit = models::radial_density(2, stable_profile(1.5), 1.0);
  CHECK(levy_tail_mass(unit, 1.0) == doctest::Approx(2.0 * kPi / 1.5).epsilon(1e-9));
  CHECK(levy_tail_mass(unit, 0.01) == doctest::Approx(2.0 * kPi / 1.5 * std::pow(0.01, -1.5)).epsilon(1e-8));
  CHECK(levy_tail_mass(models::truncated_stable(2, 1.5, 1.0), 2.0) == 0.0);

  // psi(r) = r log(1 + 1/r)^{1/2}: exp-sinh oracle of omega_2 int_r^inf ds / (s psi(s)).
  const auto prof = stable_log_profile(0.5, 1.0, 0.9);
  const auto m = models::radial_density(2, prof, 1.0);
  const double r = 0.1;
  const double oracle =
      2.0 * kPi * boost::math::quadrature::exp_sinh<double>().integrate(
                      [&](double x) { return 1.0 / ((r + x) * eval_psi(prof, r + x)); }, 0.0,
                      std::numeric_limits<double>::infinity());
  const double v = levy_tail_mass(m, r);
  CHECK(v == doctest::Approx(oracle).epsilon(1e-7));
  const TailBounds b = tail_bounds(prof, tail_constants(*m.jumps, 2), 2, r);
  CHECK(b.lower <= v);
  CHECK(v <= b.upper);
}

TEST_CASE("tail_bounds") {
  const auto m = models::radial_density(2, stable_profile(1.5), 1.0);
  const auto tc = tail_constants(*m.jumps, 2);
  // C3 = int (1 ^ |x|^2) |x|^{-2-1.5} dx = 2 pi (1/0.5 + 1/1.5).
  CHECK(tc.C3 == doctest::Approx(2.0 * kPi * (2.0 + 1.0 / 1.5)).epsilon(1e-8));
  const auto b = tail_bounds(m.jumps->profile, tc, 2, 0.25);
  const double v = levy_tail_mass(m, 0.25);
  CHECK(b.lower <= v);
  CHECK(v <= b.upper);
  for (double r : log_grid(1e-6, 0.5, 40)) {
    const auto x = tail_bounds(m.jumps->profile, tc, 2, r);
    CHECK(x.lower <= x.upper);
  }
  CHECK_NOTHROW(tail_bounds(m.jumps->profile, tc, 2, 0.5));
  CHECK_THROWS_AS(tail_bounds(m.jumps->profile, tc, 2, 0.5 + 1e-9), OutOfRangeError);
}

TEST_CASE("tail sandwich holds for stable and variable-order models") {
  for (const auto& m : {models::stable(2, 1.5), models::stable(3, 0.8), models::truncated_stable(2, 1.2, 0.5),
                        models::radial_density(2, variable_order_profile(1.1, 1.9), 1.0)}) {
    const auto tc = tail_constants(*m.jumps, m.dim);
    for (double r : log_grid(1e-5 * m.jumps->profile.R0, 0.5 * m.jumps->profile.R0, 20)) {
      const auto b = tail_bounds(m.jumps->profile, tc, m.dim, r);
      const double v = levy_tail_mass(m, r);
      CHECK(b.lower <= v);
      CHECK(v <= b.upper);
    }
  }
}

TEST_CASE("classify_variation") {
  CHECK(classify_variation(models::radial_density(2, stable_profile(1.5), 1.0)).kind == Variation::Unbounded);
  CHECK(classify_variation(models::radial_density(2, stable_profile(0.5), 1.0)).kind == Variation::Bounded);
  CHECK(classify_variation(models::radial_density(2, stable_log_profile(-0.5), 1.0)).kind == Variation::Unbounded);
  const auto bm = classify_variation(models::brownian(2));
  CHECK(bm.kind == Variation::Unbounded);
  CHECK(bm.diffusion);
  CHECK_THROWS_AS(classify_variation(models::brownian(2), Variation::Bounded), ClassificationConflictError);
}
