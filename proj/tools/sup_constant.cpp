// Estimates m1 = E[min(cap, sup_{s <= 1} Y_s)] for the one-dimensional projection of an
// isotropic stable process. The grid bias of the discrete maximum is removed with the
// exact random-walk value E[sup Y_1] - E[max_k S_k] (Spitzer's identity).

#include "shc/estimators.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"stable supremum constant"};
  double beta = 1.5, cap = 1e4;
  std::uint64_t paths = 10'000'000, seed = 20240601;
  int steps = 64, threads = 0;
  app.add_option("--beta", beta)->check(CLI::Range(1.0, 2.0));
  app.add_option("--cap", cap)->check(CLI::PositiveNumber);
  app.add_option("--paths", paths);
  app.add_option("--steps", steps);
  app.add_option("--seed", seed);
  app.add_option("--threads", threads);
  CLI11_PARSE(app, argc, argv);

  try {
    const shc::LevyModel model = shc::models::stable(2, beta);
    shc::RunOptions o;
    o.steps = steps;
    o.seed = seed;
    o.threads = threads;
    o.extrapolate = false;
    const shc::Estimate e = shc::sup_functional(model, shc::unit_vec(2, 0), 1.0, cap, paths, o);
    const double grid_bias = shc::reference::stable_sup_mean(beta) - shc::reference::stable_discrete_sup_mean(beta, steps);
    nlohmann::json j{{"beta", beta},         {"cap", cap},
                     {"paths", e.n},         {"steps", steps},
                     {"seed", seed},         {"discrete_mean", e.value},
                     {"grid_bias", grid_bias}, {"m1", e.value + grid_bias},
                     {"std_error", e.std_error}, {"uncapped_closed_form", shc::reference::stable_sup_mean(beta)}};
    std::cout << j.dump(2) << '\n';
  } catch (const shc::Error& err) {
    std::cerr << "sup_constant: " << err.what() << '\n';
    return 1;
  }
  return 0;
}
