#include "shc/harness.hpp"

#include "shc/rng.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

namespace shc {

namespace {

// Independent stream seed for task k at grid index i.
std::uint64_t task_seed(std::uint64_t seed, std::size_t i, std::uint64_t k) {
  std::uint64_t s = seed ^ (0x9E3779B97F4A7C15ull * (i + 1)) ^ (0xC2B2AE3D27D4EB4Full * (k + 1));
  return splitmix64(s);
}

RunOptions run_options(const ExperimentConfig& c, std::size_t i, std::uint64_t k) {
  RunOptions o;
  o.steps = c.steps_at(i);
  o.seed = task_seed(c.seed, i, k);
  o.threads = c.threads;
  return o;
}

DeficitStrategy strategy_of(const ExperimentConfig& c) {
  DeficitStrategy s;
  if (c.strategy == "uniform") s = DeficitStrategy::uniform();
  else if (c.strategy == "layer") s = DeficitStrategy::layer(c.layer_width);
  else s = DeficitStrategy::stratified(c.layer_width);
  return s;
}

Json estimate_json(const Estimate& e) {
  Json j{{"value", e.value}, {"std_error", e.std_error}, {"n", e.n}, {"seed", e.seed}};
  if (!e.details.empty()) {
    Json d = Json::object();
    for (const auto& [k, v] : e.details) d[k] = v;
    j["details"] = d;
  }
  return j;
}

// Closed form of |dD| E[sup <X_t, nu>] for the isotropic presets that have one.
std::optional<double> reference_denominator(const LevyModel& m, double area, double t) {
  if (!m.isotropic) return std::nullopt;
  if (!m.jumps && m.diffusion) return area * reference::brownian_sup_mean(t, m.a_quadratic(unit_vec(m.dim, 0)));
  if (m.jumps && !m.diffusion && m.exact_stable) {
    const double beta = *m.exact_stable;
    if (beta == 1.0) return area * reference::cauchy_sup_asymptotic(t);
    if (beta > 1.0) return area * std::pow(t, 1.0 / beta) * reference::stable_sup_mean(beta);
  }
  return std::nullopt;
}

Estimate surface_sup(const LevyModel& m, const Domain& domain, double t, double b, std::uint64_t n,
                     const RunOptions& opt, std::vector<std::string>& notes) {
  if (m.isotropic) {
    Estimate e = sup_functional(m, unit_vec(m.dim, 0), t, b, n, opt);
    const double area = surface_area(domain);
    e.value *= area;
    e.std_error *= area;
    return e;
  }
  // Anisotropic: E[sup <X, nu(y)> ^ b] at quadrature nodes of the boundary.
  if (!domain.bounded()) throw ArgumentError("anisotropic denominator needs a bounded domain");
  const int nodes = 16;
  const SurfaceQuadrature q = surface_quadrature(domain, nodes);
  const std::uint64_t per = std::max<std::uint64_t>(100, n / q.nodes.size());
  Estimate total;
  double var = 0.0;
  for (std::size_t k = 0; k < q.nodes.size(); ++k) {
    RunOptions o = opt;
    o.seed = task_seed(opt.seed, k, 99);
    const Estimate e = sup_functional(m, q.normals[k], t, b, per, o);
    total.value += q.weights[k] * e.value;
    var += q.weights[k] * q.weights[k] * e.std_error * e.std_error;
    total.n += e.n;
  }
  total.std_error = std::sqrt(var);
  total.seed = opt.seed;
  notes.push_back("anisotropic model: denominator from " + std::to_string(q.nodes.size()) +
                  " boundary quadrature nodes");
  return total;
}

}  // namespace

double ratio_band(double num, double num_se, double den, double den_se) {
  if (num == 0.0 || den == 0.0) return std::numeric_limits<double>::infinity();
  const double r = num / den;
  return std::abs(r) * std::sqrt(std::pow(num_se / num, 2) + std::pow(den_se / den, 2));
}

Extrapolation extrapolate_to_zero(const std::vector<double>& t, const std::vector<double>& y,
                                  const std::vector<double>& se) {
  if (t.size() != y.size() || t.size() != se.size() || t.empty())
    throw ArgumentError("extrapolation needs matching non-empty inputs");
  Extrapolation out;
  const std::size_t n = t.size();
  if (n < 3) {
    out.method = "final_row";
    out.value = y.back();
    out.std_error = se.back();
    return out;
  }
  out.method = "power_fit";
  const std::size_t first = n - 3;
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= 90; ++k) {
    const double theta = 0.1 + 0.01 * k;
    // Weighted least squares for (L, c) with design [1, t^theta].
    double s00 = 0, s01 = 0, s11 = 0, b0 = 0, b1 = 0;
    for (std::size_t i = first; i < n; ++i) {
      const double w = se[i] > 0.0 ? 1.0 / (se[i] * se[i]) : 1.0;
      const double x = std::pow(t[i], theta);
      s00 += w;
      s01 += w * x;
      s11 += w * x * x;
      b0 += w * y[i];
      b1 += w * x * y[i];
    }
    const double det = s00 * s11 - s01 * s01;
    if (!(std::abs(det) > 0.0)) continue;
    const double L = (s11 * b0 - s01 * b1) / det;
    const double c = (s00 * b1 - s01 * b0) / det;
    double rss = 0.0;
    for (std::size_t i = first; i < n; ++i) {
      const double w = se[i] > 0.0 ? 1.0 / (se[i] * se[i]) : 1.0;
      rss += w * std::pow(y[i] - L - c * std::pow(t[i], theta), 2);
    }
    if (rss < best - 1e-12) {
      best = rss;
      out.value = L;
      out.c = c;
      out.theta = theta;
      out.std_error = std::sqrt(s11 / det);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

DichotomyReport run_dichotomy(const ExperimentConfig& config) {
  config.validate();
  const LevyModel model = build_model(config.model);
  const Domain domain = build_domain(config.domain, model.dim);
  if (!domain.bounded()) throw ConfigError("the dichotomy needs a bounded domain");

  DichotomyReport rep;
  rep.config = to_json(config);
  rep.config_hash = config_hash(config);
  const VariationClass vc = classify_variation(model, config.variation);
  rep.variation = to_string(vc.kind);
  if (!vc.diagnosed) rep.notes.push_back("variation class taken from the declaration");
  rep.tolerance = config.tolerance.value_or(default_tolerance(model));
  const double area = surface_area(domain);
  const bool bounded_branch = vc.kind == Variation::Bounded;
  rep.branch = bounded_branch ? "perimeter" : "sup_functional";

  if (bounded_branch) {
    PerimeterOptions po;
    po.method = domain.as_ball() ? PerimeterMethod::Quadrature : PerimeterMethod::MonteCarlo;
    po.seed = task_seed(config.seed, 0, 7);
    po.threads = config.threads;
    rep.perimeter = perimeter(model, domain, po);
  }

  const DeficitStrategy strategy = strategy_of(config);
  for (std::size_t i = 0; i < config.t_grid.size(); ++i) {
    const double t = config.t_grid[i];
    DichotomyRow row;
    row.t = t;
    row.steps = config.steps_at(i);
    std::uint64_t n = config.paths_at(i);
    if (bounded_branch) {
      row.denom = t * rep.perimeter->value;
      row.denom_se = t * rep.perimeter->std_error;
    } else {
      const Estimate den = surface_sup(model, domain, t, config.b_cap, n, run_options(config, i, 1), rep.notes);
      row.denom = den.value;
      row.denom_se = den.std_error;
      row.reference = reference_denominator(model, area, t);
    }
    // Budget: keep roughly 4 / deficit samples, the denominator standing in for the deficit.
    if (row.denom > 0.0) {
      const double want = std::ceil(4.0 / row.denom);
      n = std::max<std::uint64_t>(n, static_cast<std::uint64_t>(std::min(want, 64.0 * static_cast<double>(n))));
    }
    row.n_paths = n;
    const DeficitEstimate def = heat_content_deficit(model, domain, t, n, strategy, run_options(config, i, 2));
    row.deficit = def.value;
    row.deficit_se = def.std_error;
    row.ratio = row.denom != 0.0 ? row.deficit / row.denom : std::numeric_limits<double>::quiet_NaN();
    row.ratio_se = ratio_band(row.deficit, row.deficit_se, row.denom, row.denom_se);
    rep.rows.push_back(row);
  }

  std::vector<double> ts, ys, ss;
  for (const auto& r : rep.rows) {
    ts.push_back(r.t);
    ys.push_back(r.ratio);
    ss.push_back(r.ratio_se);
  }
  rep.extrapolated = extrapolate_to_zero(ts, ys, ss);
  if (!std::isfinite(rep.extrapolated.value) || rep.extrapolated.std_error > rep.tolerance)
    rep.verdict = Verdict::Inconclusive;
  else
    rep.verdict = std::abs(rep.extrapolated.value - 1.0) <= rep.tolerance ? Verdict::Pass : Verdict::Fail;
  if (!model.isotropic && !bounded_branch) rep.notes.push_back("model declares anisotropy");
  return rep;
}

Json DichotomyReport::to_json() const {
  Json j;
  j["kind"] = "dichotomy";
  j["config"] = config;
  j["config_hash"] = config_hash;
  j["variation"] = variation;
  j["branch"] = branch;
  if (perimeter) j["perimeter"] = estimate_json(*perimeter);
  Json rs = Json::array();
  for (const auto& r : rows) {
    Json x{{"t", r.t},           {"n_paths", r.n_paths}, {"steps", r.steps},      {"deficit", r.deficit},
           {"deficit_se", r.deficit_se}, {"denom", r.denom},     {"denom_se", r.denom_se}, {"ratio", r.ratio},
           {"ratio_se", r.ratio_se}};
    x["reference"] = r.reference ? Json(*r.reference) : Json(nullptr);
    rs.push_back(x);
  }
  j["rows"] = rs;
  j["extrapolated"] = {{"method", extrapolated.method},
                       {"value", extrapolated.value},
                       {"std_error", extrapolated.std_error},
                       {"c", extrapolated.c},
                       {"theta", extrapolated.theta}};
  j["tolerance"] = tolerance;
  j["verdict"] = to_string(verdict);
  j["notes"] = notes;
  return j;
}

std::string DichotomyReport::to_csv() const {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "t,deficit,deficit_se,denom,denom_se,ratio,ratio_lo,ratio_hi\n";
  for (const auto& r : rows)
    out << r.t << ',' << r.deficit << ',' << r.deficit_se << ',' << r.denom << ',' << r.denom_se << ',' << r.ratio
        << ',' << r.ratio - r.ratio_se << ',' << r.ratio + r.ratio_se << '\n';
  return out.str();
}

// ---------------------------------------------------------------------------

NegligibilityReport run_t_negligibility(const ExperimentConfig& config) {
  config.validate();
  const LevyModel model = build_model(config.model);
  const VariationClass vc = classify_variation(model, config.variation);
  if (vc.kind != Variation::Unbounded)
    throw PreconditionError("t-negligibility applies to unbounded-variation models only");
  NegligibilityReport rep;
  rep.config = to_json(config);
  rep.config_hash = config_hash(config);
  for (std::size_t i = 0; i < config.t_grid.size(); ++i) {
    const double t = config.t_grid[i];
    const Estimate e = sup_functional(model, unit_vec(model.dim, 0), t, config.b_cap, config.paths_at(i),
                                      run_options(config, i, 3));
    NegligibilityRow row;
    row.t = t;
    row.sup_mean = e.value;
    row.sup_se = e.std_error;
    row.ratio = t / e.value;
    row.ratio_se = row.ratio * e.std_error / e.value;
    rep.rows.push_back(row);
  }
  rep.decreasing = true;
  for (std::size_t i = 1; i < rep.rows.size(); ++i) {
    const auto& a = rep.rows[i - 1];
    const auto& b = rep.rows[i];
    if (!(b.ratio < a.ratio + 2.0 * std::hypot(a.ratio_se, b.ratio_se))) rep.decreasing = false;
  }
  rep.shrinks = rep.rows.size() >= 2 && rep.rows.back().ratio < rep.rows.front().ratio / 3.0;
  rep.verdict = rep.decreasing && rep.shrinks ? Verdict::Pass : Verdict::Fail;
  return rep;
}

Json NegligibilityReport::to_json() const {
  Json j;
  j["kind"] = "t_negligibility";
  j["config"] = config;
  j["config_hash"] = config_hash;
  Json rs = Json::array();
  for (const auto& r : rows)
    rs.push_back({{"t", r.t}, {"sup_mean", r.sup_mean}, {"sup_se", r.sup_se}, {"ratio", r.ratio},
                  {"ratio_se", r.ratio_se}});
  j["rows"] = rs;
  j["decreasing"] = decreasing;
  j["shrinks"] = shrinks;
  j["verdict"] = to_string(verdict);
  return j;
}

// ---------------------------------------------------------------------------

HalfspaceReport run_halfspace_suite(const ExperimentConfig& config) {
  config.validate();
  const LevyModel model = build_model(config.model);
  const Domain domain = build_domain(config.domain, model.dim);
  const Ball* ball = domain.as_ball();
  if (!ball) throw PreconditionError("the half-space suite needs a ball domain");
  if (classify_variation(model, config.variation).kind != Variation::Unbounded)
    throw PreconditionError("the half-space suite applies to unbounded-variation models only");
  HalfspaceReport rep;
  rep.config = to_json(config);
  rep.config_hash = config_hash(config);
  rep.R = ball->radius;
  rep.a = config.layer_width.value_or(0.3 * rep.R);
  if (!(rep.a < rep.R)) throw ConfigError("layer_width must be below the radius");
  rep.tolerance = config.tolerance.value_or(default_tolerance(model));
  bool ordered = true;
  for (std::size_t i = 0; i < config.t_grid.size(); ++i) {
    const double t = config.t_grid[i];
    const std::uint64_t n = config.paths_at(i);
    HalfspaceRow row;
    row.t = t;
    row.sup = sup_functional(model, unit_vec(model.dim, 0), t, config.b_cap, n, run_options(config, i, 4));
    const LayerTriple tri = boundary_layer_integrals(model, rep.R, rep.a, t, n, run_options(config, i, 5));
    row.halfspace = tri.halfspace;
    row.inner_ball = tri.inner_ball;
    row.outer_ball = tri.outer_ball;
    auto ratio = [&](const Estimate& e, double& r, double& se) {
      r = e.value / row.sup.value;
      se = ratio_band(e.value, e.std_error, row.sup.value, row.sup.std_error);
    };
    ratio(row.halfspace, row.r_half, row.r_half_se);
    ratio(row.inner_ball, row.r_inner, row.r_inner_se);
    ratio(row.outer_ball, row.r_outer, row.r_outer_se);
    const double s1 = std::hypot(row.inner_ball.std_error, row.halfspace.std_error);
    const double s2 = std::hypot(row.halfspace.std_error, row.outer_ball.std_error);
    row.ordered = row.inner_ball.value >= row.halfspace.value - 2.0 * s1 &&
                  row.halfspace.value >= row.outer_ball.value - 2.0 * s2;
    ordered = ordered && row.ordered;
    rep.rows.push_back(row);
  }
  const auto& last = rep.rows.back();
  const double worst = std::max({std::abs(last.r_half - 1.0), std::abs(last.r_inner - 1.0),
                                 std::abs(last.r_outer - 1.0)});
  const double band = std::max({last.r_half_se, last.r_inner_se, last.r_outer_se});
  if (!ordered || worst > rep.tolerance + 2.0 * band)
    rep.verdict = Verdict::Fail;
  else if (band > 0.5 * rep.tolerance)
    rep.verdict = Verdict::Inconclusive;
  else
    rep.verdict = worst <= rep.tolerance ? Verdict::Pass : Verdict::Inconclusive;
  return rep;
}

Json HalfspaceReport::to_json() const {
  Json j;
  j["kind"] = "halfspace_suite";
  j["config"] = config;
  j["config_hash"] = config_hash;
  j["R"] = R;
  j["a"] = a;
  Json rs = Json::array();
  for (const auto& r : rows)
    rs.push_back({{"t", r.t},
                  {"sup", estimate_json(r.sup)},
                  {"halfspace", estimate_json(r.halfspace)},
                  {"inner_ball", estimate_json(r.inner_ball)},
                  {"outer_ball", estimate_json(r.outer_ball)},
                  {"ratio_halfspace", r.r_half},
                  {"ratio_halfspace_se", r.r_half_se},
                  {"ratio_inner", r.r_inner},
                  {"ratio_inner_se", r.r_inner_se},
                  {"ratio_outer", r.r_outer},
                  {"ratio_outer_se", r.r_outer_se},
                  {"ordered", r.ordered}});
  j["rows"] = rs;
  j["tolerance"] = tolerance;
  j["verdict"] = to_string(verdict);
  return j;
}

}  // namespace shc
