// shc: command-line front end for the heat content experiments.

#include "shc/harness.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

using namespace shc;

namespace {

Json parse_inline(const std::string& text, const char* what) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("bad ") + what + " JSON: " + e.what());
  }
}

std::uint64_t seed_or_env(std::uint64_t seed) {
  ExperimentConfig c;
  c.seed = seed;
  apply_environment(c);
  return c.seed;
}

Json estimate_to_json(const Estimate& e) {
  Json j{{"value", e.value}, {"std_error", e.std_error}, {"n", e.n}, {"seed", e.seed}};
  for (const auto& [k, v] : e.details) j["details"][k] = v;
  return j;
}

ExperimentConfig config_from(const std::string& path, const std::string& out) {
  ExperimentConfig c = load_config(path);
  apply_environment(c);
  if (!out.empty()) c.output = out;
  return c;
}

int finish(const Json& report, Verdict v, const std::string& prefix, const std::string& csv = {}) {
  write_outputs(prefix, report, csv);
  std::cout << report.dump(2) << '\n';
  return exit_code(v);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Small-time heat content experiments for Levy processes"};
  app.require_subcommand(1);

  std::string config_path, out;
  auto* dich = app.add_subcommand("dichotomy", "deficit over a t-grid against the sup-functional or perimeter denominator");
  dich->add_option("--config", config_path, "JSON experiment config")->required()->check(CLI::ExistingFile);
  dich->add_option("--out", out, "output prefix (overrides the config)");

  auto* negl = app.add_subcommand("negligibility", "t / E[sup ^ b] over the t-grid");
  negl->add_option("--config", config_path)->required()->check(CLI::ExistingFile);
  negl->add_option("--out", out);

  auto* audit = app.add_subcommand("audit", "bound-shape audit on an (r, t) grid");
  audit->add_option("--config", config_path)->required()->check(CLI::ExistingFile);
  audit->add_option("--out", out);

  auto* half = app.add_subcommand("halfspace", "half-space, inner and outer ball layer integrals");
  half->add_option("--config", config_path)->required()->check(CLI::ExistingFile);
  half->add_option("--out", out);

  std::string model_text = R"({"preset": "stable", "beta": 1.5})";
  std::string domain_text = R"({"preset": "ball", "radius": 1})";
  double t = 1e-3, b = 1.0, r = 0.1;
  std::uint64_t paths = 100000, seed = 1, samples = 2000000;
  int steps = 1024, threads = 0;
  std::string method = "quadrature";

  auto* supfun = app.add_subcommand("supfun", "E[min(b, sup <X_s, e_1>)] up to time t");
  supfun->add_option("--model", model_text, "model preset JSON");
  supfun->add_option("--t", t)->check(CLI::PositiveNumber);
  supfun->add_option("--b", b)->check(CLI::PositiveNumber);
  supfun->add_option("--paths", paths);
  supfun->add_option("--steps", steps);
  supfun->add_option("--seed", seed);
  supfun->add_option("--threads", threads);

  auto* per = app.add_subcommand("perimeter", "perimeter of a domain with respect to the jump kernel");
  per->add_option("--model", model_text);
  per->add_option("--domain", domain_text, "domain preset JSON");
  per->add_option("--method", method)->check(CLI::IsMember({"quadrature", "mc"}));
  per->add_option("--samples", samples);
  per->add_option("--seed", seed);
  per->add_option("--threads", threads);

  auto* exitp = app.add_subcommand("exitprob", "P(tau_{B(0, r)} <= t) from the origin");
  exitp->add_option("--model", model_text);
  exitp->add_option("--r", r)->check(CLI::PositiveNumber);
  exitp->add_option("--t", t)->check(CLI::PositiveNumber);
  exitp->add_option("--paths", paths);
  exitp->add_option("--steps", steps);
  exitp->add_option("--seed", seed);
  exitp->add_option("--threads", threads);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*dich) {
      const ExperimentConfig c = config_from(config_path, out);
      const DichotomyReport rep = run_dichotomy(c);
      return finish(rep.to_json(), rep.verdict, c.output, rep.to_csv());
    }
    if (*negl) {
      const ExperimentConfig c = config_from(config_path, out);
      const NegligibilityReport rep = run_t_negligibility(c);
      return finish(rep.to_json(), rep.verdict, c.output);
    }
    if (*audit) {
      const ExperimentConfig c = config_from(config_path, out);
      const AuditReport rep = run_bound_audit(c);
      return finish(rep.to_json(), rep.verdict, c.output);
    }
    if (*half) {
      const ExperimentConfig c = config_from(config_path, out);
      const HalfspaceReport rep = run_halfspace_suite(c);
      return finish(rep.to_json(), rep.verdict, c.output);
    }
    const LevyModel model = build_model(parse_inline(model_text, "model"));
    RunOptions o;
    o.steps = steps;
    o.seed = seed_or_env(seed);
    o.threads = threads;
    if (*supfun) {
      const Estimate e = sup_functional(model, unit_vec(model.dim, 0), t, b, paths, o);
      std::cout << estimate_to_json(e).dump(2) << '\n';
      return 0;
    }
    if (*per) {
      const Domain domain = build_domain(parse_inline(domain_text, "domain"), model.dim);
      PerimeterOptions po;
      po.method = method == "mc" ? PerimeterMethod::MonteCarlo : PerimeterMethod::Quadrature;
      po.samples = samples;
      po.seed = o.seed;
      po.threads = threads;
      std::cout << estimate_to_json(perimeter(model, domain, po)).dump(2) << '\n';
      return 0;
    }
    if (*exitp) {
      std::cout << estimate_to_json(exit_probability_ball(model, r, t, paths, o)).dump(2) << '\n';
      return 0;
    }
  } catch (const shc::Error& e) {
    std::cerr << "shc: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
