#include "shc/harness.hpp"

#include "shc/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace shc {

namespace {

std::vector<double> log_space(double lo, double hi, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = lo * std::pow(hi / lo, n > 1 ? double(i) / (n - 1) : 0.0);
  return v;
}

// Exit probabilities on the (r, t) grid: ball (full space) and line (first coordinate).
struct Grid {
  std::vector<double> r, t;
  std::vector<std::vector<Estimate>> ball, line, sup;  // [t index][r index]
  std::vector<std::vector<char>> train;
  std::uint64_t min_n = 0;

  bool is_train(std::size_t i, std::size_t j) const { return train[i][j] != 0; }
};

// Cells sorted by t / phi(r) alternate between train and holdout, with both ends in
// train. A checkerboard in (i, j) would alias with self-similar models on grids
// where t and phi(r) step by the same factor.
void split_cells(Grid& g, const std::function<double(double)>& phi) {
  std::vector<std::pair<double, std::pair<std::size_t, std::size_t>>> cells;
  for (std::size_t i = 0; i < g.t.size(); ++i)
    for (std::size_t j = 0; j < g.r.size(); ++j) cells.push_back({g.t[i] / phi(g.r[j]), {i, j}});
  std::stable_sort(cells.begin(), cells.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  g.train.assign(g.t.size(), std::vector<char>(g.r.size(), 0));
  for (std::size_t k = 0; k < cells.size(); ++k)
    g.train[cells[k].second.first][cells[k].second.second] = k % 2 == 0 || k + 1 == cells.size();
}

enum class Side { Upper, Lower };

// Fits c on the training cells so that c * shape bounds P from the given side, then
// counts held-out cells where the bound fails by more than 3 stderr.
AuditCheck shape_check(const std::string& name, const Grid& g, const std::vector<std::vector<Estimate>>& p,
                       Side side, const std::function<double(double, double)>& shape,
                       const std::function<bool(double, double)>& admissible) {
  AuditCheck chk;
  chk.name = name;
  const double floor = 1.0 / static_cast<double>(g.min_n);
  double c = side == Side::Upper ? 0.0 : std::numeric_limits<double>::infinity();
  int train = 0;
  for (std::size_t i = 0; i < g.t.size(); ++i)
    for (std::size_t j = 0; j < g.r.size(); ++j) {
      if (!g.is_train(i, j) || !admissible(g.r[j], g.t[i])) continue;
      const double s = shape(g.r[j], g.t[i]);
      const double v = p[i][j].value;
      if (side == Side::Upper) {
        c = std::max(c, v / s);
      } else if (v > 3.0 * std::max(p[i][j].std_error, floor)) {
        c = std::min(c, v / s);
      }
      ++train;
    }
  int informative = 0;
  for (std::size_t i = 0; i < g.t.size(); ++i)
    for (std::size_t j = 0; j < g.r.size(); ++j) {
      if (g.is_train(i, j) || !admissible(g.r[j], g.t[i])) continue;
      const double s = shape(g.r[j], g.t[i]);
      const double v = p[i][j].value;
      const double band = 3.0 * std::max(p[i][j].std_error, floor);
      ++chk.cells;
      if (v > band) ++informative;
      const bool ok = side == Side::Upper ? v - band <= c * s : v + band >= c * s;
      if (!ok) ++chk.violations;
    }
  chk.constants["c"] = std::isfinite(c) ? c : 0.0;
  chk.constants["train_cells"] = train;
  chk.constants["informative_holdout"] = informative;
  if (train == 0 || chk.cells == 0 || !std::isfinite(c) || informative < 3) {
    chk.verdict = Verdict::Inconclusive;
    chk.note = "too few informative cells";
  } else {
    chk.verdict = chk.violations <= 0.05 * chk.cells ? Verdict::Pass : Verdict::Fail;
  }
  return chk;
}

// Lower bound c6 exp(-c5 r^2 / t) for t <= r^2: c5 from a log-linear fit on the
// training cells, c6 the largest constant that keeps the bound below them.
AuditCheck gaussian_check(const std::string& name, const Grid& g, const std::vector<std::vector<Estimate>>& p) {
  AuditCheck chk;
  chk.name = name;
  const double floor = 1.0 / static_cast<double>(g.min_n);
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < g.t.size(); ++i)
    for (std::size_t j = 0; j < g.r.size(); ++j) {
      if (!g.is_train(i, j) || g.t[i] > g.r[j] * g.r[j]) continue;
      const double v = p[i][j].value;
      if (v > 3.0 * std::max(p[i][j].std_error, floor)) {
        xs.push_back(g.r[j] * g.r[j] / g.t[i]);
        ys.push_back(std::log(v));
      }
    }
  if (xs.size() < 2) {
    chk.verdict = Verdict::Inconclusive;
    chk.note = "too few informative training cells";
    return chk;
  }
  double mx = 0, my = 0;
  for (std::size_t k = 0; k < xs.size(); ++k) mx += xs[k], my += ys[k];
  mx /= xs.size();
  my /= xs.size();
  double sxy = 0, sxx = 0;
  for (std::size_t k = 0; k < xs.size(); ++k) sxy += (xs[k] - mx) * (ys[k] - my), sxx += (xs[k] - mx) * (xs[k] - mx);
  const double c5 = sxx > 0.0 ? std::max(0.0, -sxy / sxx) : 0.0;
  double c6 = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < xs.size(); ++k) c6 = std::min(c6, std::exp(ys[k] + c5 * xs[k]));
  chk.constants["c5"] = c5;
  chk.constants["c6"] = c6;
  int informative = 0;
  for (std::size_t i = 0; i < g.t.size(); ++i)
    for (std::size_t j = 0; j < g.r.size(); ++j) {
      if (g.is_train(i, j) || g.t[i] > g.r[j] * g.r[j]) continue;
      const double v = p[i][j].value;
      const double band = 3.0 * std::max(p[i][j].std_error, floor);
      ++chk.cells;
      if (v > band) ++informative;
      if (v + band < c6 * std::exp(-c5 * g.r[j] * g.r[j] / g.t[i])) ++chk.violations;
    }
  chk.constants["informative_holdout"] = informative;
  if (chk.cells == 0 || informative < 3) {
    chk.verdict = Verdict::Inconclusive;
    chk.note = "too few informative cells";
  } else {
    chk.verdict = chk.violations <= 0.05 * chk.cells ? Verdict::Pass : Verdict::Fail;
  }
  return chk;
}

}  // namespace

Json AuditCheck::to_json() const {
  Json j{{"name", name}, {"verdict", shc::to_string(verdict)}, {"cells", cells}, {"violations", violations}};
  Json c = Json::object();
  for (const auto& [k, v] : constants) c[k] = v;
  j["constants"] = c;
  if (!note.empty()) j["note"] = note;
  return j;
}

const AuditCheck* AuditReport::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

Json AuditReport::to_json() const {
  Json j;
  j["kind"] = "bound_audit";
  j["config"] = config;
  j["config_hash"] = config_hash;
  Json cs = Json::array();
  for (const auto& c : checks) cs.push_back(c.to_json());
  j["checks"] = cs;
  j["verdict"] = to_string(verdict);
  return j;
}

AuditReport run_bound_audit(const ExperimentConfig& config) {
  config.validate();
  const LevyModel model = build_model(config.model);
  const int d = model.dim;
  AuditReport rep;
  rep.config = to_json(config);
  rep.config_hash = config_hash(config);
  const ScaleFunction sf = ScaleFunction::of(model);

  // Tail sandwich at 20 log-spaced radii below R0 / 2.
  if (model.jumps) {
    const RadialJumpLaw& law = *model.jumps;
    const double R0 = law.profile.R0;
    const TailConstants tc = tail_constants(law, d);
    AuditCheck chk;
    chk.name = "tail_sandwich";
    for (double r : log_space(1e-4 * R0, 0.5 * R0, 20)) {
      const double mass = levy_tail_mass(model, r);
      const TailBounds b = tail_bounds(law.profile, tc, d, r);
      ++chk.cells;
      if (!(b.lower <= mass && mass <= b.upper)) ++chk.violations;
    }
    if (law.tail == TailMode::Truncated) {
      ++chk.cells;
      if (levy_tail_mass(model, 1.5 * R0) != 0.0) ++chk.violations;
    }
    chk.constants["C1"] = tc.C1;
    chk.constants["C2"] = tc.C2;
    chk.constants["C3"] = tc.C3;
    chk.verdict = chk.violations == 0 ? Verdict::Pass : Verdict::Fail;
    rep.checks.push_back(chk);
  }

  // Exit probabilities on the (r, t) grid.
  Grid g;
  const double scale = model.jumps ? std::min(1.0, model.jumps->profile.R0) : 1.0;
  g.r = config.r_grid.empty() ? log_space(0.02 * scale, 0.2 * scale, 7) : config.r_grid;
  std::sort(g.r.begin(), g.r.end());
  g.t = config.t_grid;
  g.min_n = std::numeric_limits<std::uint64_t>::max();
  for (std::size_t i = 0; i < g.t.size(); ++i) {
    RunOptions o;
    o.steps = config.steps_at(i);
    std::uint64_t s = config.seed ^ (0x9E3779B97F4A7C15ull * (i + 1)) ^ 0xA5A5A5A5ull;
    o.seed = splitmix64(s);
    o.threads = config.threads;
    const ExitProfile prof = exit_profile(model, g.r, g.t[i], config.paths_at(i), o);
    g.ball.push_back(prof.ball);
    g.line.push_back(prof.line);
    g.sup.push_back(prof.sup);
    g.min_n = std::min(g.min_n, prof.n);
  }

  auto phi = [&](double r) { return model.jumps ? sf.phi_extended(r) : sf.phi(r); };
  split_cells(g, phi);
  auto all = [](double, double) { return true; };
  auto upper = [&](double r, double t) { return t / phi(r); };
  rep.checks.push_back(shape_check("exit_upper_ball", g, g.ball, Side::Upper, upper, all));
  rep.checks.push_back(shape_check("exit_upper_line", g, g.line, Side::Upper, upper, all));

  if (model.jumps) {
    const double k = 4.0 * std::sqrt(static_cast<double>(d));
    auto psi4 = [&](double r) { return eval_psi(model.jumps->profile, k * r); };
    auto lower = [&](double r, double t) { return t / psi4(r); };
    auto adm = [&](double r, double t) { return t <= psi4(r); };
    rep.checks.push_back(shape_check("exit_lower_ball", g, g.ball, Side::Lower, lower, adm));
    rep.checks.push_back(shape_check("exit_lower_line", g, g.line, Side::Lower, lower, adm));
  }
  if (model.has_diffusion()) {
    rep.checks.push_back(gaussian_check("gaussian_lower_ball", g, g.ball));
    rep.checks.push_back(gaussian_check("gaussian_lower_line", g, g.line));
  }

  // Reflection: P(|Y| exits (-r, r) by t) <= 2 P(sup Y >= r).
  {
    AuditCheck chk;
    chk.name = "reflection";
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < g.t.size(); ++i)
      for (std::size_t j = 0; j < g.r.size(); ++j) {
        const Estimate& l = g.line[i][j];
        const Estimate& s = g.sup[i][j];
        const double band = 3.0 * std::hypot(l.std_error, 2.0 * s.std_error);
        const double excess = l.value - 2.0 * s.value;
        worst = std::max(worst, excess - band);
        ++chk.cells;
        if (excess > band) ++chk.violations;
      }
    chk.constants["worst_excess_over_band"] = worst;
    chk.verdict = chk.violations == 0 ? Verdict::Pass : Verdict::Fail;
    rep.checks.push_back(chk);
  }

  // Mean exit time: E[tau_{B(0, r)}] >= phi(r) / (4 c) with c the fitted ball constant.
  if (const AuditCheck* up = rep.find("exit_upper_ball"); up && up->verdict != Verdict::Inconclusive) {
    const double c = up->constants.at("c");
    AuditCheck chk;
    chk.name = "mean_exit_time";
    chk.constants["c"] = c;
    const std::vector<double> radii = {g.r.front(), g.r[g.r.size() / 2], g.r.back()};
    for (std::size_t k = 0; k < radii.size(); ++k) {
      const double r = radii[k];
      const double bound = phi(r) / (4.0 * c);
      const double horizon = std::max(phi(r), phi(r) / (2.0 * c));
      RunOptions o;
      o.steps = config.steps_at(0);
      std::uint64_t s = config.seed ^ (0xD6E8FEB86659FD93ull * (k + 1));
      o.seed = splitmix64(s);
      o.threads = config.threads;
      const Estimate e = expected_exit_time(model, r, horizon, config.paths_at(0), o);
      ++chk.cells;
      if (e.value + 3.0 * e.std_error < bound) ++chk.violations;
      chk.constants["ratio_r" + std::to_string(k)] = e.value / bound;
    }
    chk.verdict = chk.violations == 0 ? Verdict::Pass : Verdict::Fail;
    rep.checks.push_back(chk);
  }

  bool any_fail = false, any_inconclusive = false;
  for (const auto& c : rep.checks) {
    any_fail = any_fail || c.verdict == Verdict::Fail;
    any_inconclusive = any_inconclusive || c.verdict == Verdict::Inconclusive;
  }
  rep.verdict = any_fail ? Verdict::Fail : any_inconclusive ? Verdict::Inconclusive : Verdict::Pass;
  return rep;
}

}  // namespace shc
