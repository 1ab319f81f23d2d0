#include "shc/harness.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace shc {

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "?";
}

int exit_code(Verdict v) {
  switch (v) {
    case Verdict::Pass: return 0;
    case Verdict::Fail: return 2;
    case Verdict::Inconclusive: return 3;
  }
  return 1;
}

namespace {

template <class T>
T get_or(const Json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

Vec vec_of(const Json& j, int dim, const char* what) {
  if (!j.is_array() || static_cast<int>(j.size()) != dim)
    throw ConfigError(std::string(what) + " must be an array of length " + std::to_string(dim));
  Vec v(dim);
  for (int i = 0; i < dim; ++i) v[i] = j[i].get<double>();
  return v;
}

Mat matrix_of(const Json& j, int dim) {
  Mat A(dim, dim);
  if (j.is_number()) {
    A = j.get<double>() * Mat::Identity(dim, dim);
    return A;
  }
  if (!j.is_array() || static_cast<int>(j.size()) != dim) throw ConfigError("A must be a number or a d x d array");
  for (int r = 0; r < dim; ++r) {
    if (!j[r].is_array() || static_cast<int>(j[r].size()) != dim) throw ConfigError("A must be a d x d array");
    for (int c = 0; c < dim; ++c) A(r, c) = j[r][c].get<double>();
  }
  return A;
}

ScalingProfile profile_of(const Json& spec) {
  const std::string kind = get_or<std::string>(spec, "profile", "stable");
  const double R0 = get_or(spec, "R0", 1.0);
  if (kind == "stable") return stable_profile(get_or(spec, "beta", 1.0), R0);
  if (kind == "stable_log") return stable_log_profile(get_or(spec, "b", 0.0), R0, get_or(spec, "alpha", 0.0));
  if (kind == "variable_order") return variable_order_profile(get_or(spec, "a1", 0.8), get_or(spec, "a2", 1.2));
  if (kind == "table") {
    auto r = get_or<std::vector<double>>(spec, "r", {});
    auto psi = get_or<std::vector<double>>(spec, "psi", {});
    return tabulated_profile(std::move(r), std::move(psi), get_or(spec, "alpha", 1.0), get_or(spec, "C_psi", 1.0));
  }
  throw ConfigError("unknown profile '" + kind + "'");
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace

LevyModel build_model(const Json& spec) {
  if (!spec.is_object()) throw ConfigError("model must be an object");
  const std::string preset = get_or<std::string>(spec, "preset", "");
  const int d = get_or(spec, "dim", 2);
  if (d < 1 || d > kMaxDim) throw ConfigError("model dimension out of range");
  LevyModel m;
  if (preset == "brownian") {
    m = spec.contains("A") ? models::brownian(d, matrix_of(spec.at("A"), d)) : models::brownian(d, 1.0);
  } else if (preset == "stable") {
    m = models::stable(d, get_or(spec, "beta", 1.0));
  } else if (preset == "jump_diffusion") {
    m = models::jump_diffusion(d, spec.contains("A") ? matrix_of(spec.at("A"), d) : Mat(Mat::Identity(d, d)),
                               get_or(spec, "beta", 1.0));
  } else if (preset == "truncated_stable") {
    m = models::truncated_stable(d, get_or(spec, "beta", 1.0), get_or(spec, "R0", 1.0));
  } else if (preset == "radial_density") {
    const std::string tail = get_or<std::string>(spec, "tail", "extended");
    if (tail != "extended" && tail != "truncated") throw ConfigError("tail must be 'extended' or 'truncated'");
    m = models::radial_density(d, profile_of(spec), get_or(spec, "kappa", 1.0),
                               tail == "extended" ? TailMode::Extended : TailMode::Truncated);
  } else {
    throw ConfigError("unknown model preset '" + preset + "'");
  }
  validate(m);
  return m;
}

Domain build_domain(const Json& spec, int dim) {
  if (!spec.is_object()) throw ConfigError("domain must be an object");
  const std::string preset = get_or<std::string>(spec, "preset", "ball");
  if (preset == "ball" || preset == "disk") {
    const Vec c = spec.contains("center") ? vec_of(spec.at("center"), dim, "center") : Vec(Vec::Zero(dim));
    return Domain::ball(c, get_or(spec, "radius", 1.0));
  }
  if (preset == "halfspace") {
    const Vec p = spec.contains("point") ? vec_of(spec.at("point"), dim, "point") : Vec(Vec::Zero(dim));
    const Vec n = spec.contains("normal") ? vec_of(spec.at("normal"), dim, "normal") : unit_vec(dim, 0);
    std::optional<double> patch;
    if (spec.contains("patch_radius")) patch = spec.at("patch_radius").get<double>();
    return Domain::halfspace(p, n, patch);
  }
  if (preset == "implicit_ball") return catalog::implicit_ball(dim, get_or(spec, "radius", 1.0));
  if (dim != 2) throw ConfigError("catalog shape '" + preset + "' is two-dimensional");
  if (preset == "ellipse") return catalog::ellipse(get_or(spec, "a", 1.5), get_or(spec, "b", 1.0));
  if (preset == "capsule") return catalog::capsule(get_or(spec, "half_length", 0.5), get_or(spec, "radius", 1.0));
  throw ConfigError("unknown domain preset '" + preset + "'");
}

double default_tolerance(const LevyModel& model) {
  if (model.has_diffusion() || !model.jumps) return 0.10;
  return std::abs(model.jumps->profile.alpha - 1.0) < 0.25 ? 0.15 : 0.10;
}

void ExperimentConfig::validate() const {
  if (t_grid.empty()) throw ConfigError("t_grid must not be empty");
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    if (!(t_grid[i] > 0.0)) throw ConfigError("t_grid entries must be positive");
    if (i > 0 && !(t_grid[i] < t_grid[i - 1])) throw ConfigError("t_grid must be strictly decreasing");
  }
  if (n_paths.empty()) throw ConfigError("n_paths must not be empty");
  if (n_paths.size() != 1 && n_paths.size() != t_grid.size())
    throw ConfigError("n_paths needs one entry or one per t");
  for (auto n : n_paths)
    if (n < 100) throw ConfigError("n_paths must be at least 100");
  if (!steps.empty() && steps.size() != 1 && steps.size() != t_grid.size())
    throw ConfigError("steps needs one entry or one per t");
  for (int s : steps)
    if (s < 1) throw ConfigError("steps must be positive");
  if (strategy != "uniform" && strategy != "layer" && strategy != "stratified")
    throw ConfigError("strategy must be uniform, layer or stratified");
  if (!(b_cap > 0.0)) throw ConfigError("b_cap must be positive");
  if (tolerance && !(*tolerance > 0.0)) throw ConfigError("tolerance must be positive");
  if (layer_width && !(*layer_width > 0.0)) throw ConfigError("layer_width must be positive");
  for (double r : r_grid)
    if (!(r > 0.0)) throw ConfigError("r_grid entries must be positive");
}

std::uint64_t ExperimentConfig::paths_at(std::size_t i) const {
  return n_paths.size() == 1 ? n_paths.front() : n_paths.at(i);
}

int ExperimentConfig::steps_at(std::size_t i) const {
  if (steps.empty()) return 1024;
  return steps.size() == 1 ? steps.front() : steps.at(i);
}

ExperimentConfig parse_config(const Json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  static const char* known[] = {"model", "domain",   "t_grid",    "n_paths",     "steps",   "strategy", "b_cap",
                                "output", "seed",    "variation", "tolerance",   "layer_width", "r_grid", "threads"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) throw ConfigError("unknown config key '" + it.key() + "'");
  }
  ExperimentConfig c;
  if (!j.contains("model")) throw ConfigError("config needs a model");
  c.model = j.at("model");
  c.domain = get_or<Json>(j, "domain", Json{{"preset", "ball"}, {"radius", 1.0}});
  c.t_grid = get_or<std::vector<double>>(j, "t_grid", {});
  if (j.contains("n_paths") && j.at("n_paths").is_number())
    c.n_paths = {j.at("n_paths").get<std::uint64_t>()};
  else
    c.n_paths = get_or<std::vector<std::uint64_t>>(j, "n_paths", {10000});
  if (j.contains("steps") && j.at("steps").is_number())
    c.steps = {j.at("steps").get<int>()};
  else
    c.steps = get_or<std::vector<int>>(j, "steps", {});
  c.strategy = get_or<std::string>(j, "strategy", c.strategy);
  c.b_cap = get_or(j, "b_cap", c.b_cap);
  c.output = get_or<std::string>(j, "output", "");
  c.seed = get_or<std::uint64_t>(j, "seed", 1);
  if (j.contains("variation")) {
    const auto v = j.at("variation").get<std::string>();
    if (v == "bounded") c.variation = Variation::Bounded;
    else if (v == "unbounded") c.variation = Variation::Unbounded;
    else throw ConfigError("variation must be 'bounded' or 'unbounded'");
  }
  if (j.contains("tolerance")) c.tolerance = j.at("tolerance").get<double>();
  if (j.contains("layer_width")) c.layer_width = j.at("layer_width").get<double>();
  c.r_grid = get_or<std::vector<double>>(j, "r_grid", {});
  c.threads = get_or(j, "threads", 0);
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  Json j;
  try {
    j = Json::parse(in, nullptr, true, true);
  } catch (const Json::parse_error& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
  return parse_config(j);
}

Json to_json(const ExperimentConfig& c) {
  Json j;
  j["model"] = c.model;
  j["domain"] = c.domain;
  j["t_grid"] = c.t_grid;
  j["n_paths"] = c.n_paths;
  j["steps"] = c.steps;
  j["strategy"] = c.strategy;
  j["b_cap"] = c.b_cap;
  j["output"] = c.output;
  j["seed"] = c.seed;
  if (c.variation) j["variation"] = to_string(*c.variation);
  if (c.tolerance) j["tolerance"] = *c.tolerance;
  if (c.layer_width) j["layer_width"] = *c.layer_width;
  if (!c.r_grid.empty()) j["r_grid"] = c.r_grid;
  // threads is left out: results do not depend on it.
  return j;
}

std::uint64_t config_hash(const ExperimentConfig& c) { return fnv1a(to_json(c).dump()); }

void apply_environment(ExperimentConfig& c) {
  if (const char* s = std::getenv("SHC_SEED"); s && *s) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(s, &end, 10);
    if (end == s || *end != '\0') throw ConfigError("SHC_SEED must be an unsigned integer");
    c.seed = v;
  }
}

void write_outputs(const std::string& prefix, const Json& report, const std::string& csv) {
  if (prefix.empty()) return;
  {
    std::ofstream out(prefix + ".json");
    if (!out) throw ConfigError("cannot write '" + prefix + ".json'");
    out << report.dump(2) << '\n';
  }
  if (!csv.empty()) {
    std::ofstream out(prefix + ".csv");
    if (!out) throw ConfigError("cannot write '" + prefix + ".csv'");
    out << csv;
  }
}

}  // namespace shc
