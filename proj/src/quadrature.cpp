#include "shc/quadrature.hpp"

#include "shc/core.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <sstream>

namespace shc::quad {

namespace {

Rule build_rule(int n) {
  Rule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  return rule;
}

}  // namespace

const Rule& gauss_legendre(int order) {
  static std::mutex mu;
  static std::map<int, Rule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(order);
  if (it == cache.end()) it = cache.emplace(order, build_rule(order)).first;
  return it->second;
}

double fixed(const Fn& f, double a, double b, int order) {
  const Rule& rule = gauss_legendre(order);
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (b + a);
  double sum = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) sum += rule.weights[i] * f(mid + half * rule.nodes[i]);
  return sum * half;
}

namespace {

void adaptive_rec(const Fn& f, double a, double b, double whole, double tol, int depth,
                  const Options& opt, Result& out) {
  const double m = 0.5 * (a + b);
  const double left = fixed(f, a, m, opt.order);
  const double right = fixed(f, m, b, opt.order);
  const double err = std::abs(left + right - whole);
  if (err <= tol || depth >= opt.max_depth || out.panels >= opt.max_panels) {
    out.value += left + right;
    out.abs_error += err;
    out.panels += 2;
    if (err > tol) out.converged = false;
    return;
  }
  adaptive_rec(f, a, m, left, 0.5 * tol, depth + 1, opt, out);
  adaptive_rec(f, m, b, right, 0.5 * tol, depth + 1, opt, out);
}

}  // namespace

Result adaptive(const Fn& f, double a, double b, const Options& opt) {
  Result out;
  out.converged = true;
  if (a == b) return out;
  const double whole = fixed(f, a, b, opt.order);
  const double tol = std::max(opt.atol, opt.rtol * std::abs(whole));
  adaptive_rec(f, a, b, whole, tol, 0, opt, out);
  // Local tests halve the tolerance per level; accept whenever the summed error is small.
  if (!out.converged && out.abs_error <= std::max(opt.atol, opt.rtol * std::abs(out.value))) out.converged = true;
  return out;
}

Result graded_from_zero(const Fn& f, double hi, const Options& opt) {
  Result total;
  total.converged = false;
  bool panels_ok = true;
  double upper = hi;
  double prev_panel = 0.0;
  for (int k = 0; k < opt.max_panels; ++k) {
    const double lower = upper * opt.grading;
    Result panel = adaptive(f, lower, upper, opt);
    total.value += panel.value;
    total.abs_error += panel.abs_error;
    total.panels += panel.panels;
    panels_ok = panels_ok && panel.converged;
    upper = lower;
    if (k >= 2 && prev_panel != 0.0) {
      const double ratio = std::abs(panel.value / prev_panel);
      if (ratio < 1.0) {
        const double tail = std::abs(panel.value) * ratio / (1.0 - ratio);
        if (tail <= 0.1 * std::max(opt.atol, opt.rtol * std::abs(total.value))) {
          total.value += panel.value * ratio / (1.0 - ratio);
          total.abs_error += tail;
          total.converged = panels_ok;
          return total;
        }
      }
    }
    if (k >= 2 && panel.value == 0.0 && prev_panel == 0.0) {
      total.converged = panels_ok;
      return total;
    }
    prev_panel = panel.value;
  }
  return total;
}

Result graded_from_left(const Fn& f, double lo, double hi, const Options& opt) {
  Result total;
  total.converged = true;
  if (hi <= lo) return total;
  double a = lo;
  double width = lo > 0.0 ? lo * (1.0 / opt.grading - 1.0) : (hi - lo);
  while (a < hi) {
    double b = std::min(hi, a + width);
    if (hi - b < 1e-3 * width) b = hi;
    Result panel = adaptive(f, a, b, opt);
    total.value += panel.value;
    total.abs_error += panel.abs_error;
    total.panels += panel.panels;
    total.converged = total.converged && panel.converged;
    a = b;
    width /= opt.grading;
    if (total.panels > 64 * opt.max_panels) {
      total.converged = false;
      break;
    }
  }
  return total;
}

double require(const Result& r, const std::string& what) {
  if (!r.converged || !std::isfinite(r.value)) {
    std::ostringstream os;
    os << "quadrature did not converge for " << what << ": value=" << r.value
       << " abs_error=" << r.abs_error << " panels=" << r.panels;
    throw NumericError(os.str());
  }
  return r.value;
}

}  // namespace shc::quad
