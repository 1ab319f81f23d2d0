#pragma once

#include "shc/estimators.hpp"
#include "shc/geometry.hpp"
#include "shc/model.hpp"
#include "shc/scale_kernel.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace shc {

using Json = nlohmann::json;

enum class Verdict { Pass, Fail, Inconclusive };
const char* to_string(Verdict v);
/// 0 pass, 2 fail, 3 inconclusive.
int exit_code(Verdict v);

/// Declarative experiment description. `model` and `domain` are preset objects, e.g.
/// {"preset": "stable", "beta": 1.5} and {"preset": "ball", "radius": 1}.
struct ExperimentConfig {
  Json model = Json::object();
  Json domain = Json::object();
  std::vector<double> t_grid;          // strictly decreasing
  std::vector<std::uint64_t> n_paths;  // one per t, or one for all
  std::vector<int> steps;              // one per t, or one for all
  std::string strategy = "stratified";
  double b_cap = 1.0;
  std::string output;  // file prefix for <output>.json and <output>.csv; empty: none
  std::uint64_t seed = 1;

  std::optional<Variation> variation;  // declared class
  std::optional<double> tolerance;     // default_tolerance(model) when absent
  std::optional<double> layer_width;   // deficit layer width, or the half-space suite's a
  std::vector<double> r_grid;          // audit radii; empty: derived from the model
  int threads = 0;

  void validate() const;
  std::uint64_t paths_at(std::size_t i) const;
  int steps_at(std::size_t i) const;
};

ExperimentConfig parse_config(const Json& j);
ExperimentConfig load_config(const std::string& path);
Json to_json(const ExperimentConfig& c);
/// FNV-1a of the canonical JSON dump.
std::uint64_t config_hash(const ExperimentConfig& c);
/// SHC_SEED overrides the seed when set.
void apply_environment(ExperimentConfig& c);

LevyModel build_model(const Json& spec);
Domain build_domain(const Json& spec, int dim);
/// 0.15 for index within 0.25 of 1 without a diffusion, 0.10 otherwise.
double default_tolerance(const LevyModel& model);

struct Extrapolation {
  std::string method;  // "power_fit" or "final_row"
  double value = 0.0;
  double std_error = 0.0;
  double c = 0.0;
  double theta = 0.0;
};

/// Weighted fit of y = L + c t^theta, theta scanned over [0.1, 1]; uses the last three points.
Extrapolation extrapolate_to_zero(const std::vector<double>& t, const std::vector<double>& y,
                                  const std::vector<double>& se);

/// |r| sqrt((s_n / n)^2 + (s_d / d)^2).
double ratio_band(double num, double num_se, double den, double den_se);

struct DichotomyRow {
  double t = 0.0;
  std::uint64_t n_paths = 0;
  int steps = 0;
  double deficit = 0.0, deficit_se = 0.0;
  double denom = 0.0, denom_se = 0.0;
  double ratio = 0.0, ratio_se = 0.0;
  std::optional<double> reference;  // closed-form denominator where known
};

struct DichotomyReport {
  Json config;
  std::uint64_t config_hash = 0;
  std::string variation;
  std::string branch;  // "sup_functional" or "perimeter"
  std::optional<Estimate> perimeter;
  std::vector<DichotomyRow> rows;  // t descending
  Extrapolation extrapolated;
  double tolerance = 0.0;
  Verdict verdict = Verdict::Inconclusive;
  std::vector<std::string> notes;

  Json to_json() const;
  std::string to_csv() const;
};

/// Denominator |dD| E[sup <X_t, nu> ^ b] (unbounded variation) or t Per(D) (bounded).
DichotomyReport run_dichotomy(const ExperimentConfig& config);

struct NegligibilityRow {
  double t = 0.0;
  double sup_mean = 0.0, sup_se = 0.0;
  double ratio = 0.0, ratio_se = 0.0;  // t / E[sup ^ b]
};

struct NegligibilityReport {
  Json config;
  std::uint64_t config_hash = 0;
  std::vector<NegligibilityRow> rows;
  bool decreasing = false;  // up to 2 combined stderr
  bool shrinks = false;     // last < first / 3
  Verdict verdict = Verdict::Inconclusive;

  Json to_json() const;
};

/// Refuses (PreconditionError) bounded-variation models.
NegligibilityReport run_t_negligibility(const ExperimentConfig& config);

struct HalfspaceRow {
  double t = 0.0;
  Estimate sup;  // E[sup ^ 1]
  Estimate halfspace, inner_ball, outer_ball;
  double r_half = 0.0, r_half_se = 0.0;
  double r_inner = 0.0, r_inner_se = 0.0;
  double r_outer = 0.0, r_outer_se = 0.0;
  bool ordered = false;
};

struct HalfspaceReport {
  Json config;
  std::uint64_t config_hash = 0;
  double R = 0.0, a = 0.0;
  std::vector<HalfspaceRow> rows;
  double tolerance = 0.0;
  Verdict verdict = Verdict::Inconclusive;

  Json to_json() const;
};

/// Ball domain, unbounded-variation model; a = layer_width (default 0.3 R).
HalfspaceReport run_halfspace_suite(const ExperimentConfig& config);

struct AuditCheck {
  std::string name;
  Verdict verdict = Verdict::Inconclusive;
  int cells = 0;     // assessed cells (holdout cells for fitted checks)
  int violations = 0;
  std::map<std::string, double> constants;
  std::string note;

  Json to_json() const;
};

struct AuditReport {
  Json config;
  std::uint64_t config_hash = 0;
  std::vector<AuditCheck> checks;
  Verdict verdict = Verdict::Inconclusive;

  const AuditCheck* find(const std::string& name) const;
  Json to_json() const;
};

/// Tail sandwich, exit-bound shapes (fit on a checkerboard half of the (r, t) grid,
/// asserted on the other half), reflection inequality and the mean exit time bound.
AuditReport run_bound_audit(const ExperimentConfig& config);

/// Writes <output>.json (and <output>.csv when given) if the prefix is non-empty.
void write_outputs(const std::string& prefix, const Json& report, const std::string& csv = {});

}  // namespace shc
