// Acceptance run: one line per criterion, "PASS" or "FAIL" followed by the measured numbers.
// Usage: acceptance [--known-failure k ...] [--report file] [criterion ...]   (default: all)
// Exit status is 0 when the failing criteria are exactly the declared known failures.

#include "shc/estimators.hpp"
#include "shc/geometry.hpp"
#include "shc/harness.hpp"
#include "shc/profile.hpp"
#include "shc/scale_kernel.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <set>
#include <string>
#include <vector>

using namespace shc;

namespace {

// Frozen E[sup_{s <= 1} Y_s ^ 1e4] for the planar 1.5-stable process, first coordinate:
// 1e7 paths, 64 steps, seed 20240601, plus the exact 64-step grid bias (tools/sup_constant).
constexpr double kM1 = 1.2770155336600366;
constexpr double kM1StdError = 0.002030219356058503;

struct Line {
  bool pass = false;
  std::string text;
};

std::string fmt(const char* f, auto... args) {
  char buf[2048];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

RunOptions opts(int steps, std::uint64_t seed, bool extrapolate = true) {
  RunOptions o;
  o.steps = steps;
  o.seed = seed;
  o.extrapolate = extrapolate;
  return o;
}

Json disk_config(const Json& model, const std::vector<double>& t, std::uint64_t n, int steps, std::uint64_t seed) {
  return Json{{"model", model},
              {"domain", {{"preset", "disk"}, {"radius", 1.0}}},
              {"t_grid", t},
              {"n_paths", {n}},
              {"steps", {steps}},
              {"seed", seed}};
}

Line brownian_dichotomy() {
  const double t = 1e-4, lo = 0.90, hi = 1.10;
  const DeficitEstimate d = heat_content_deficit(models::brownian(2), catalog::disk(), t, 200000,
                                                 DeficitStrategy::stratified(), opts(4096, 101));
  const double ref = 2.0 * kPi * reference::brownian_sup_mean(t);
  const double r = d.value / ref;
  return {r >= lo && r <= hi, fmt("brownian disk t=1e-4: deficit/(2 pi sqrt(2t/pi)) = %.4f +- %.4f, range [%.2f, %.2f]", r,
                                  d.std_error / ref, lo, hi)};
}

Line cauchy_critical() {
  const double t = 1e-4, lo = 0.85, hi = 1.15;
  const auto m = models::stable(2, 1.0);
  const DeficitEstimate d =
      heat_content_deficit(m, catalog::disk(), t, 100000, DeficitStrategy::stratified(), opts(1024, 102));
  const double ref = 2.0 * kPi * reference::cauchy_sup_asymptotic(t);
  const double r = d.value / ref;
  // Same deficit against the simulated |dD| E[sup ^ 1], which carries the O(t) correction to t ln(1/t) / pi.
  const Estimate s = sup_functional(m, unit_vec(2, 0), t, 1.0, 100000, opts(1024, 103));
  const double c = kPi * s.value / t - std::log(1.0 / t);
  return {r >= lo && r <= hi,
          fmt("cauchy disk t=1e-4: deficit/(2 t ln(1/t)) = %.4f +- %.4f, range [%.2f, %.2f]; "
              "deficit/(2 pi E[sup^1]) = %.4f, E[sup^1] = (t/pi)(ln(1/t) + %.3f)",
              r, d.std_error / ref, lo, hi, d.value / (2.0 * kPi * s.value), c)};
}

Line stable_scaling() {
  const double lo = 0.95, hi = 1.05;
  const int steps = 64;
  const double grid_bias = reference::stable_sup_mean(1.5) - reference::stable_discrete_sup_mean(1.5, steps);
  bool ok = true;
  std::string text = "stable 1.5: E[sup^1](t)/(t^{2/3} m1)";
  std::uint64_t seed = 104;
  for (double t : {1e-3, 1e-4}) {
    const Estimate e = sup_functional(models::stable(2, 1.5), unit_vec(2, 0), t, 1.0, 200000, opts(steps, seed++, false));
    const double s = std::pow(t, 2.0 / 3.0);
    const double r = (e.value + s * grid_bias) / (s * kM1);
    const double se = ratio_band(e.value + s * grid_bias, e.std_error, s * kM1, s * kM1StdError);
    ok = ok && r >= lo && r <= hi;
    text += fmt(" t=%g: %.4f +- %.4f;", t, r, se);
  }
  text += fmt(" m1 = %.5f +- %.5f, range [%.2f, %.2f]", kM1, kM1StdError, lo, hi);
  return {ok, text};
}

Line bounded_variation() {
  const double t = 1e-3, tol = 0.10;
  const DichotomyReport rep =
      run_dichotomy(parse_config(disk_config({{"preset", "stable"}, {"beta", 0.5}}, {t}, 20000, 64, 105)));
  const Estimate& q = *rep.perimeter;
  PerimeterOptions po;
  po.method = PerimeterMethod::MonteCarlo;
  po.samples = 1000000;
  po.seed = 106;
  const Estimate mc = perimeter(models::stable(2, 0.5), catalog::disk(), po);
  const double z = std::abs(mc.value - q.value) / std::hypot(mc.std_error, q.std_error);
  const DichotomyRow& row = rep.rows.front();
  const double r = row.deficit / (t * q.value);
  const bool ok = rep.branch == "perimeter" && std::abs(r - 1.0) <= tol && z <= 3.0;
  return {ok, fmt("beta=0.5 disk t=1e-3: deficit/(t Per) = %.4f +- %.4f (within %.2f), Per quadrature %.6f, "
                  "Monte Carlo %.4f +- %.4f (%.2f combined se, limit 3)",
                  r, row.deficit_se / (t * q.value), tol, q.value, mc.value, mc.std_error, z)};
}

Line coarea() {
  const auto one = [](const Vec&) { return 1.0; };
  const CoareaReport a = coarea_sandwich_check(catalog::disk(), one, 0.1);
  const CoareaReport b = coarea_sandwich_check(catalog::implicit_ball(2, 1.0), one, 0.1);
  const bool ok = a.status == CheckStatus::Pass && b.status == CheckStatus::Pass &&
                  std::abs(a.ratio - 0.9499) <= 5e-4;
  return {ok, fmt("coarea a=0.1 f=1: disk ratio %.4f in [%.3f, %.3f]; implicit disk ratio %.4f +- %.4f", a.ratio, a.lower,
                  a.upper, b.ratio, b.ratio_stderr)};
}

Line tail_sandwich() {
  int cells = 0, bad = 0;
  for (const auto& m : {models::stable(2, 1.5), models::stable(2, 0.5), models::stable(3, 1.0),
                        models::radial_density(2, variable_order_profile(1.1, 1.9), 1.0),
                        models::radial_density(2, variable_order_profile(0.3, 0.9), 1.0)}) {
    const auto tc = tail_constants(*m.jumps, m.dim);
    const double R0 = m.jumps->profile.R0;
    for (int k = 0; k < 20; ++k) {
      const double r = 0.5 * R0 * std::pow(1e-4, 1.0 - k / 19.0);
      const auto b = tail_bounds(m.jumps->profile, tc, m.dim, r);
      const double v = levy_tail_mass(m, r);
      ++cells;
      bad += !(b.lower <= v && v <= b.upper);
    }
  }
  return {bad == 0, fmt("tail sandwich: %d violations in %d cells (5 fixtures x 20 radii)", bad, cells)};
}

const std::vector<double> kAuditT = {1e-2, 3e-3, 1e-3, 3e-4, 1e-4};
const std::vector<double> kAuditR = {0.02, 0.0356, 0.0632, 0.1125, 0.2};

std::vector<std::pair<std::string, AuditReport>>& audits() {
  static std::vector<std::pair<std::string, AuditReport>> cache;
  if (cache.empty()) {
    std::uint64_t seed = 107;
    for (const auto& [name, model] : std::vector<std::pair<std::string, Json>>{
             {"brownian", {{"preset", "brownian"}}},
             {"cauchy", {{"preset", "stable"}, {"beta", 1.0}}},
             {"stable1.5", {{"preset", "stable"}, {"beta", 1.5}}}}) {
      Json j = disk_config(model, kAuditT, 20000, 128, seed++);
      j["r_grid"] = kAuditR;
      cache.emplace_back(name, run_bound_audit(parse_config(j)));
    }
  }
  return cache;
}

Line exit_shapes() {
  bool ok = true;
  std::string text = "exit-bound shapes (holdout violations/cells):";
  for (const auto& [name, rep] : audits()) {
    text += " " + name + "{";
    for (const auto& c : rep.checks) {
      if (c.name.rfind("exit_", 0) != 0 && c.name.rfind("gaussian_", 0) != 0) continue;
      const bool pass = c.verdict == Verdict::Pass && c.violations <= 0.05 * c.cells;
      ok = ok && pass;
      text += fmt(" %s %d/%d%s", c.name.c_str(), c.violations, c.cells, pass ? "" : "(!)");
    }
    text += " }";
  }
  return {ok, text + " ; need <= 5% per check"};
}

Line reflection() {
  bool ok = true;
  std::string text = "reflection on 5x5 (r, t):";
  for (const auto& [name, rep] : audits()) {
    const AuditCheck* c = rep.find("reflection");
    ok = ok && c && c->violations == 0 && c->cells == 25;
    text += fmt(" %s %d/%d", name.c_str(), c ? c->violations : -1, c ? c->cells : 0);
  }
  return {ok, text + " violations, need 0"};
}

Line negligibility() {
  bool ok = true;
  std::string text = "t/E[sup^1] over t = 1e-2, 1e-3, 1e-4:";
  std::uint64_t seed = 110;
  for (const auto& [name, model] : std::vector<std::pair<std::string, Json>>{
           {"brownian", {{"preset", "brownian"}}},
           {"cauchy", {{"preset", "stable"}, {"beta", 1.0}}},
           {"stable1.5", {{"preset", "stable"}, {"beta", 1.5}}}}) {
    const NegligibilityReport r = run_t_negligibility(parse_config(disk_config(model, {1e-2, 1e-3, 1e-4}, 20000, 256, seed++)));
    ok = ok && r.decreasing;
    text += " " + name + fmt(" %.4g > %.4g > %.4g;", r.rows[0].ratio, r.rows[1].ratio, r.rows[2].ratio);
  }
  return {ok, text + " strictly decreasing up to 2 se"};
}

Line determinism() {
  const Json bv = disk_config({{"preset", "stable"}, {"beta", 0.5}}, {1e-3}, 20000, 64, 105);
  const Json bm = disk_config({{"preset", "brownian"}}, {1e-2, 1e-3, 1e-4}, 20000, 256, 113);
  bool ok = true;
  for (const Json& j : {bv, bm}) {
    const ExperimentConfig c = parse_config(j);
    ok = ok && run_dichotomy(c).to_json().dump(2) == run_dichotomy(c).to_json().dump(2);
  }
  Json a = disk_config({{"preset", "stable"}, {"beta", 1.5}}, {1e-2, 1e-3}, 4000, 64, 114);
  a["r_grid"] = {0.05, 0.1, 0.2};
  ok = ok && run_bound_audit(parse_config(a)).to_json().dump(2) == run_bound_audit(parse_config(a)).to_json().dump(2);
  return {ok, "re-run with the same seed: dichotomy (bounded and unbounded) and audit reports byte-identical"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Line()>>> criteria = {
      {"brownian_dichotomy", brownian_dichotomy}, {"cauchy_critical", cauchy_critical},
      {"stable_scaling", stable_scaling},         {"bounded_variation", bounded_variation},
      {"coarea_sandwich", coarea},                {"tail_sandwich", tail_sandwich},
      {"exit_bound_shapes", exit_shapes},         {"reflection", reflection},
      {"t_negligibility", negligibility},         {"determinism", determinism}};
  std::set<int> which, known, failed_set;
  std::string report_path;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--known-failure" && i + 1 < argc)
      known.insert(std::atoi(argv[++i]));
    else if (a == "--report" && i + 1 < argc)
      report_path = argv[++i];
    else
      which.insert(std::atoi(argv[i]));
  }
  std::FILE* report = report_path.empty() ? nullptr : std::fopen(report_path.c_str(), "w");
  auto emit = [&](const std::string& text) {
    std::fputs(text.c_str(), stdout);
    std::fflush(stdout);
    if (report) std::fputs(text.c_str(), report), std::fflush(report);
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    if (!which.empty() && !which.count(static_cast<int>(k + 1))) continue;
    const auto start = std::chrono::steady_clock::now();
    Line line;
    try {
      line = criteria[k].second();
    } catch (const std::exception& e) {
      line = {false, std::string("error: ") + e.what()};
    }
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failed += !line.pass;
    if (!line.pass) failed_set.insert(static_cast<int>(k + 1));
    emit(fmt("%s %2zu %-18s %s [%.0fs]\n", line.pass ? "PASS" : "FAIL", k + 1, criteria[k].first, line.text.c_str(), sec));
  }
  std::set<int> expected;
  for (int k : known)
    if (which.empty() || which.count(k)) expected.insert(k);
  std::string summary = fmt("%d criteria failed", failed);
  if (!expected.empty()) {
    summary += "; known failures:";
    for (int k : expected) summary += fmt(" %d", k);
  }
  emit(summary + "\n");
  if (report) std::fclose(report);
  return failed_set == expected ? 0 : 1;
}
