#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace shc::quad {

struct Rule {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;
};

/// Gauss-Legendre rule of the given order (cached for repeated orders).
const Rule& gauss_legendre(int order);

using Fn = std::function<double(double)>;

struct Result {
  double value = 0.0;
  double abs_error = 0.0;
  int panels = 0;
  bool converged = false;
};

struct Options {
  double rtol = 1e-8;
  double atol = 0.0;
  int order = 16;
  double grading = 0.7;  // geometric ratio q of graded meshes
  int max_depth = 30;
  int max_panels = 4000;  // also the panel budget of one adaptive() call
};

/// Fixed-order Gauss-Legendre on [a, b].
double fixed(const Fn& f, double a, double b, int order = 16);

/// Recursive bisection comparing one panel against its two halves.
Result adaptive(const Fn& f, double a, double b, const Options& opt = {});

/// Integral over (0, hi] of a function with an integrable singularity at 0.
/// Panels [hi q^{k+1}, hi q^k] are added until the geometric tail estimate
/// from the last panels drops below rtol of the running total.
Result graded_from_zero(const Fn& f, double hi, const Options& opt = {});

/// Integral over [lo, hi] of a function concentrated near lo: panels grow
/// geometrically from lo by the factor 1/q.
Result graded_from_left(const Fn& f, double lo, double hi, const Options& opt = {});

/// Throws NumericError with a diagnostic unless the result converged.
double require(const Result& r, const std::string& what);

}  // namespace shc::quad
