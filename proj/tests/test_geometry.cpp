#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "shc/estimators.hpp"
#include "shc/geometry.hpp"

#include <cmath>

using namespace shc;

namespace {

Vec v2(double x, double y) {
  Vec v(2);
  v << x, y;
  return v;
}

}  // namespace

TEST_CASE("signed distance") {
  const Domain ball3 = Domain::ball(Vec::Zero(3), 1.0);
  CHECK(signed_distance(ball3, Vec::Zero(3)) == doctest::Approx(-1.0));
  Vec x = Vec::Zero(3);
  x[0] = 2.0;
  CHECK(signed_distance(ball3, x) == doctest::Approx(1.0));
  const Domain upper = Domain::halfspace(Vec::Zero(2), v2(0.0, -1.0));
  CHECK(signed_distance(upper, v2(0.7, 0.3)) == doctest::Approx(-0.3));
  CHECK(ball3.R() == 1.0);
}

TEST_CASE("boundary projection") {
  const Domain disk = catalog::disk();
  auto bp = boundary_projection(disk, v2(0.5, 0.0));
  CHECK((bp.y - v2(1.0, 0.0)).norm() < 1e-14);
  CHECK((bp.nu - v2(1.0, 0.0)).norm() < 1e-14);
  CHECK(bp.delta == doctest::Approx(0.5));

  const Domain upper = Domain::halfspace(Vec::Zero(2), v2(0.0, -1.0));
  bp = boundary_projection(upper, v2(0.4, 0.25));
  CHECK((bp.y - v2(0.4, 0.0)).norm() < 1e-14);
  CHECK((bp.nu - v2(0.0, -1.0)).norm() < 1e-14);
  CHECK(bp.delta == doctest::Approx(0.25));

  const Domain ell = catalog::ellipse(1.5, 1.0);
  Rng rng(3, 0);
  for (int i = 0; i < 200; ++i) {
    const double th = 2.0 * kPi * rng.uniform();
    const double s = 0.3 * ell.R() * rng.uniform();
    const Vec on = v2(1.5 * std::cos(th), std::sin(th));
    const Vec n = distance_gradient(ell, on);
    const Vec x = on - s * n;
    const auto p = boundary_projection(ell, x);
    CHECK(std::abs(signed_distance(ell, p.y)) <= 1e-8);
    const Vec g = distance_gradient(ell, p.y);
    const Vec diff = p.y - x;
    if (diff.norm() > 1e-9) CHECK(std::abs(diff.x() * g.y() - diff.y() * g.x()) / diff.norm() < 1e-6);
    CHECK((x - (p.y - p.delta * p.nu)).norm() <= 1e-8);
  }
}

TEST_CASE("normals are constant along inner normal segments") {
  for (const Domain& d : {catalog::disk(), catalog::ellipse(1.5, 1.0), catalog::capsule(0.5, 1.0)}) {
    const auto q = surface_quadrature(d, 64);
    const double a = 0.9 * d.R();
    for (std::size_t k = 0; k < q.nodes.size(); ++k) {
      const auto p1 = boundary_projection(d, q.nodes[k] - 0.1 * a * q.normals[k]);
      const auto p2 = boundary_projection(d, q.nodes[k] - a * q.normals[k]);
      CHECK((p1.nu - p2.nu).norm() < 1e-6);
    }
  }
}

TEST_CASE("volume") {
  CHECK(volume(catalog::disk()).value == doctest::Approx(kPi).epsilon(1e-14));
  CHECK(volume(Domain::ball(Vec::Zero(3), 1.0)).value == doctest::Approx(4.0 * kPi / 3.0).epsilon(1e-14));
  const auto v = volume(catalog::implicit_ball(2, 1.0), QmcOptions{1 << 20, 16, 1});
  CHECK(std::abs(v.value - kPi) < 1e-3);
  const auto e = volume(catalog::ellipse(1.5, 1.0), QmcOptions{1 << 18, 16, 2});
  CHECK(std::abs(e.value - kPi * 1.5) < 5.0 * e.std_error + 1e-3);
}

TEST_CASE("surface quadrature") {
  CHECK(surface_quadrature(catalog::disk(), 1000).total() == doctest::Approx(2.0 * kPi).epsilon(1e-10));
  CHECK(surface_quadrature(Domain::ball(Vec::Zero(3), 1.0), 4000).total() == doctest::Approx(4.0 * kPi).epsilon(1e-6));
  const auto q = surface_quadrature(catalog::disk(2.0), 333);
  double s = 0.0;
  for (std::size_t k = 0; k < q.nodes.size(); ++k) s += q.weights[k] * 3.5;
  CHECK(s == doctest::Approx(3.5 * 4.0 * kPi).epsilon(1e-8));
  CHECK(surface_area(catalog::ellipse(1.5, 1.0)) == doctest::Approx(7.932719794645).epsilon(1e-6));
  CHECK_THROWS_AS(surface_quadrature(Domain::halfspace(Vec::Zero(2), v2(1.0, 0.0)), 10), ArgumentError);
}

TEST_CASE("ball and implicit ball agree") {
  const Domain b = catalog::disk(), ib = catalog::implicit_ball(2, 1.0);
  Rng rng(5, 0);
  for (int i = 0; i < 200; ++i) {
    const Vec x = v2(2.4 * rng.uniform() - 1.2, 2.4 * rng.uniform() - 1.2);
    CHECK(std::abs(signed_distance(b, x) - signed_distance(ib, x)) < 1e-6);
    if (std::abs(signed_distance(b, x)) < 0.5 && x.norm() > 1e-3) {
      const auto p = boundary_projection(b, x), q = boundary_projection(ib, x);
      CHECK((p.y - q.y).norm() < 1e-6);
      CHECK(std::abs(p.delta - q.delta) < 1e-6);
    }
  }
  CHECK(std::abs(surface_area(ib) - 2.0 * kPi) < 1e-2);
}

TEST_CASE("implicit shape diagnostics") {
  const auto chk = check_implicit_shape(catalog::ellipse(1.5, 1.0), 1000, 64);
  CHECK(chk.eikonal_ok);
  CHECK(chk.max_gradient_defect <= 1e-4);
  CHECK(chk.radius_consistent);
  CHECK(chk.min_curvature_radius == doctest::Approx(1.0 / 1.5).epsilon(0.02));
}

TEST_CASE("coarea sandwich") {
  const Domain disk = catalog::disk();
  const auto one = coarea_sandwich_check(disk, [](const Vec&) { return 1.0; }, 0.1);
  CHECK(one.ratio == doctest::Approx(0.9499).epsilon(1e-3));
  CHECK(one.status == CheckStatus::Pass);
  CHECK(one.lower == doctest::Approx(0.9));
  CHECK(one.upper == doctest::Approx(1.0 / 0.9));

  const auto half = coarea_sandwich_check(disk, [](const Vec& x) { return x[0] > 0.0 ? 1.0 : 0.0; }, 0.1);
  CHECK(half.status == CheckStatus::Pass);
  CHECK(half.layer_integral == doctest::Approx(0.5 * 2.0 * kPi * 0.1).epsilon(1e-3));

  const auto ell = coarea_sandwich_check(catalog::ellipse(1.5, 1.0), [](const Vec&) { return 1.0; }, 0.2);
  CHECK(ell.status == CheckStatus::Pass);

  // Shell of the unit ball in d = 3 with f = distance to the boundary.
  const Domain b3 = Domain::ball(Vec::Zero(3), 1.0);
  const auto shell = coarea_sandwich_check(b3, [](const Vec& x) { return 1.0 - x.norm(); }, 0.2);
  CHECK(shell.ratio >= 0.8 * 0.8);
  CHECK(shell.ratio <= 1.0 / (0.8 * 0.8));
}

TEST_CASE("coarea sandwich with a survival profile") {
  const LevyModel m = models::stable(2, 1.5);
  const Domain disk = catalog::disk();
  const double t = 1e-3;
  // Exit probabilities from B(0, r) on a small radius grid, linear in between.
  RunOptions o;
  o.steps = 64;
  o.seed = 4;
  const std::vector<double> radii = {0.02, 0.05, 0.1, 0.2};
  const ExitProfile prof = exit_profile(m, radii, t, 4000, o);
  auto f = [&](const Vec& x) {
    const double delta = 1.0 - x.norm();
    if (delta <= radii.front()) return prof.ball.front().value;
    for (std::size_t k = 1; k < radii.size(); ++k)
      if (delta <= radii[k]) {
        const double w = (delta - radii[k - 1]) / (radii[k] - radii[k - 1]);
        return (1 - w) * prof.ball[k - 1].value + w * prof.ball[k].value;
      }
    return prof.ball.back().value;
  };
  const auto rep = coarea_sandwich_check(disk, f, 0.2);
  CHECK(rep.status == CheckStatus::Pass);
}

TEST_CASE("layer sampler") {
  const Domain disk = catalog::disk();
  const LayerSampler ls(disk, 0.1);
  Rng rng(7, 0);
  double sum = 0.0, sum_j = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const LayerSample s = ls.sample(rng);
    CHECK(s.s >= 0.0);
    CHECK(s.s < 0.1);
    sum += s.weight;
    sum_j += s.weight * s.jacobian;
  }
  CHECK(sum / n == doctest::Approx(2.0 * kPi * 0.1).epsilon(1e-9));
  CHECK(sum_j / n == doctest::Approx(kPi * (1.0 - 0.81)).epsilon(5e-3));

  // Slab under a flat patch: jacobian 1, weighted mean is exactly area * a.
  const Domain half = Domain::halfspace(Vec::Zero(2), v2(1.0, 0.0), 1.0);
  const LayerSampler hs(half, 0.3);
  double acc = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const LayerSample s = hs.sample(rng);
    CHECK(s.jacobian == 1.0);
    acc += s.weight * s.jacobian;
  }
  CHECK(acc / 1000 == doctest::Approx(2.0 * 0.3).epsilon(1e-12));
}
