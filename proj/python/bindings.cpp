#include "shc/estimators.hpp"
#include "shc/harness.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace shc;

namespace {

// Models, domains and configs cross the boundary as JSON text.
LevyModel model_of(const std::string& spec) { return build_model(Json::parse(spec)); }

Domain domain_of(const std::string& spec, int dim) { return build_domain(Json::parse(spec), dim); }

RunOptions run_options(int steps, std::uint64_t seed, int threads) {
  RunOptions o;
  o.steps = steps;
  o.seed = seed;
  o.threads = threads;
  return o;
}

py::dict to_dict(const Estimate& e) {
  py::dict d;
  d["value"] = e.value;
  d["std_error"] = e.std_error;
  d["n"] = e.n;
  d["seed"] = e.seed;
  py::dict details;
  for (const auto& [k, v] : e.details) details[py::str(k)] = v;
  d["details"] = details;
  return d;
}

DeficitStrategy strategy_of(const std::string& s, std::optional<double> a) {
  if (s == "uniform") return DeficitStrategy::uniform();
  if (s == "layer") return DeficitStrategy::layer(a);
  if (s == "stratified") return DeficitStrategy::stratified(a);
  throw ArgumentError("unknown strategy: " + s);
}

}  // namespace

PYBIND11_MODULE(_shc, m) {
  auto base = py::register_exception<Error>(m, "ShcError", PyExc_RuntimeError);
  py::register_exception<ArgumentError>(m, "ArgumentError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<PreconditionError>(m, "PreconditionError", base.ptr());
  py::register_exception<DivergentPerimeterError>(m, "DivergentPerimeterError", base.ptr());
  py::register_exception<ClassificationConflictError>(m, "ClassificationConflictError", base.ptr());

  m.def("levy_tail_mass", [](const std::string& model, double r) { return levy_tail_mass(model_of(model), r); });
  m.def("phi", [](const std::string& model, double r) { return ScaleFunction::of(model_of(model)).phi(r); });
  m.def("variation", [](const std::string& model) { return std::string(to_string(classify_variation(model_of(model)).kind)); });

  m.def(
      "sup_functional",
      [](const std::string& model, double t, double b, std::uint64_t n_paths, int steps, std::uint64_t seed, int threads) {
        const LevyModel lm = model_of(model);
        return to_dict(sup_functional(lm, unit_vec(lm.dim, 0), t, b, n_paths, run_options(steps, seed, threads)));
      },
      py::arg("model"), py::arg("t"), py::arg("b") = 1.0, py::arg("n_paths") = 10000, py::arg("steps") = 256,
      py::arg("seed") = 1, py::arg("threads") = 0);

  m.def(
      "exit_probability_ball",
      [](const std::string& model, double r, double t, std::uint64_t n_paths, int steps, std::uint64_t seed, int threads) {
        return to_dict(exit_probability_ball(model_of(model), r, t, n_paths, run_options(steps, seed, threads)));
      },
      py::arg("model"), py::arg("r"), py::arg("t"), py::arg("n_paths") = 10000, py::arg("steps") = 256,
      py::arg("seed") = 1, py::arg("threads") = 0);

  m.def(
      "heat_content_deficit",
      [](const std::string& model, const std::string& domain, double t, std::uint64_t n_paths, const std::string& strategy,
         std::optional<double> layer_width, int steps, std::uint64_t seed, int threads) {
        const LevyModel lm = model_of(model);
        const DeficitEstimate e = heat_content_deficit(lm, domain_of(domain, lm.dim), t, n_paths,
                                                       strategy_of(strategy, layer_width), run_options(steps, seed, threads));
        py::dict d = to_dict(e);
        d["strategy"] = e.strategy;
        d["layer_width"] = e.layer_width;
        d["killing"] = e.killing;
        return d;
      },
      py::arg("model"), py::arg("domain"), py::arg("t"), py::arg("n_paths") = 10000, py::arg("strategy") = "stratified",
      py::arg("layer_width") = py::none(), py::arg("steps") = 256, py::arg("seed") = 1, py::arg("threads") = 0);

  m.def(
      "perimeter",
      [](const std::string& model, const std::string& domain, const std::string& method, std::uint64_t samples,
         std::uint64_t seed) {
        const LevyModel lm = model_of(model);
        PerimeterOptions po;
        if (method == "mc" || method == "monte_carlo")
          po.method = PerimeterMethod::MonteCarlo;
        else if (method != "quadrature")
          throw ArgumentError("unknown perimeter method: " + method);
        po.samples = samples;
        po.seed = seed;
        return to_dict(perimeter(lm, domain_of(domain, lm.dim), po));
      },
      py::arg("model"), py::arg("domain"), py::arg("method") = "quadrature", py::arg("samples") = 1000000,
      py::arg("seed") = 1);

  m.def("run_dichotomy", [](const std::string& cfg) { return run_dichotomy(parse_config(Json::parse(cfg))).to_json().dump(); });
  m.def("run_t_negligibility",
        [](const std::string& cfg) { return run_t_negligibility(parse_config(Json::parse(cfg))).to_json().dump(); });
  m.def("run_halfspace_suite",
        [](const std::string& cfg) { return run_halfspace_suite(parse_config(Json::parse(cfg))).to_json().dump(); });
  m.def("run_bound_audit", [](const std::string& cfg) { return run_bound_audit(parse_config(Json::parse(cfg))).to_json().dump(); });

  m.def("brownian_sup_mean", &reference::brownian_sup_mean, py::arg("t"), py::arg("sigma2") = 1.0);
  m.def("cauchy_sup_asymptotic", &reference::cauchy_sup_asymptotic);
  m.def("stable_sup_mean", &reference::stable_sup_mean);
}
