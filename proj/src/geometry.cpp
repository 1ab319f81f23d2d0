#include "shc/geometry.hpp"

#include "shc/quadrature.hpp"

#include <boost/math/special_functions/ellint_2.hpp>
#include <boost/random/sobol.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace shc {

namespace {

Vec normalized(const Vec& v, const char* what) {
  const double n = v.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw ArgumentError(std::string(what) + " must be a non-zero vector");
  return v / n;
}

void check_dim(int d) {
  if (d < 1 || d > kMaxDim) throw ArgumentError("dimension must lie in [1, " + std::to_string(kMaxDim) + "]");
}

// Orthonormal basis of the hyperplane orthogonal to the unit vector n (columns).
Mat tangent_basis(const Vec& n) {
  const int d = static_cast<int>(n.size());
  const Mat nm = n;
  Eigen::HouseholderQR<Mat> qr(nm);
  Mat Q = qr.householderQ() * Mat::Identity(d, d);
  return Q.rightCols(d - 1);
}

Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x, double h) {
  Vec g(x.size());
  Vec xp = x, xm = x;
  for (int i = 0; i < x.size(); ++i) {
    xp[i] = x[i] + h;
    xm[i] = x[i] - h;
    g[i] = (f(xp) - f(xm)) / (2.0 * h);
    xp[i] = xm[i] = x[i];
  }
  return g;
}

Mat fd_hessian(const Domain& domain, const Vec& y) {
  const int d = domain.dim();
  const ImplicitShape& shape = *domain.as_implicit();
  Mat H(d, d);
  if (shape.gradient) {
    const double h = 1e-6 * shape.R;
    Vec yp = y, ym = y;
    for (int j = 0; j < d; ++j) {
      yp[j] = y[j] + h;
      ym[j] = y[j] - h;
      H.col(j) = (shape.gradient(yp) - shape.gradient(ym)) / (2.0 * h);
      yp[j] = ym[j] = y[j];
    }
  } else {
    const double h = 1e-4 * shape.R;
    const double f0 = shape.sdf(y);
    for (int i = 0; i < d; ++i) {
      for (int j = i; j < d; ++j) {
        Vec a = y, b = y, c = y, e = y;
        if (i == j) {
          a[i] += h;
          b[i] -= h;
          H(i, i) = (shape.sdf(a) - 2.0 * f0 + shape.sdf(b)) / (h * h);
        } else {
          a[i] += h, a[j] += h;
          b[i] += h, b[j] -= h;
          c[i] -= h, c[j] += h;
          e[i] -= h, e[j] -= h;
          H(i, j) = H(j, i) = (shape.sdf(a) - shape.sdf(b) - shape.sdf(c) + shape.sdf(e)) / (4.0 * h * h);
        }
      }
    }
  }
  return 0.5 * (H + H.transpose());
}

struct Box {
  Vec lo, hi;
  double volume() const { return (hi - lo).prod(); }
};

Box bounding_box(const Domain& domain) {
  if (const Ball* b = domain.as_ball()) {
    return {b->center.array() - b->radius, b->center.array() + b->radius};
  }
  if (const ImplicitShape* s = domain.as_implicit()) return {s->lo, s->hi};
  throw ArgumentError("half-spaces are unbounded");
}

// Randomly shifted Sobol points over a box, one pass per shift.
template <class Visit>
void for_each_qmc_point(const Box& box, std::uint64_t n, int shift, std::uint64_t seed, Visit&& visit) {
  const int d = static_cast<int>(box.lo.size());
  Rng rng(seed, static_cast<std::uint64_t>(shift));
  Vec offset(d);
  for (int j = 0; j < d; ++j) offset[j] = rng.uniform();
  boost::random::sobol qrng(d);
  Vec x(d);
  const Vec width = box.hi - box.lo;
  for (std::uint64_t i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) {
      double u = static_cast<double>(qrng()) * 0x1p-64 + offset[j];
      if (u >= 1.0) u -= 1.0;
      x[j] = box.lo[j] + u * width[j];
    }
    visit(x);
  }
}

}  // namespace

Domain Domain::ball(Vec center, double radius) {
  check_dim(static_cast<int>(center.size()));
  if (!(radius > 0.0)) throw ArgumentError("ball radius must be positive");
  const int d = static_cast<int>(center.size());
  return Domain(Ball{std::move(center), radius}, d);
}

Domain Domain::halfspace(Vec point, Vec outward_normal, std::optional<double> patch_radius) {
  check_dim(static_cast<int>(point.size()));
  if (outward_normal.size() != point.size()) throw ArgumentError("half-space point and normal differ in size");
  if (patch_radius && !(*patch_radius > 0.0)) throw ArgumentError("patch radius must be positive");
  const int d = static_cast<int>(point.size());
  return Domain(HalfSpace{std::move(point), normalized(outward_normal, "half-space normal"), patch_radius}, d);
}

Domain Domain::implicit(ImplicitShape shape) {
  if (!shape.sdf) throw ArgumentError("implicit shape needs a signed distance function");
  if (!(shape.R > 0.0)) throw ArgumentError("implicit shape needs a declared R > 0");
  if (shape.lo.size() != shape.hi.size() || shape.lo.size() == 0)
    throw ArgumentError("implicit shape needs a bounding box");
  if (!((shape.hi - shape.lo).array() > 0.0).all()) throw ArgumentError("bounding box is empty");
  const int d = static_cast<int>(shape.lo.size());
  check_dim(d);
  return Domain(std::move(shape), d);
}

double Domain::R() const {
  if (const Ball* b = as_ball()) return b->radius;
  if (as_halfspace()) return std::numeric_limits<double>::infinity();
  return as_implicit()->R;
}

bool Domain::convex() const {
  if (const ImplicitShape* s = as_implicit()) return s->convex;
  return true;
}

std::string Domain::describe() const {
  std::ostringstream os;
  if (const Ball* b = as_ball())
    os << "ball(d=" << dim_ << ", r=" << b->radius << ")";
  else if (as_halfspace())
    os << "halfspace(d=" << dim_ << ")";
  else
    os << "implicit:" << as_implicit()->name << "(d=" << dim_ << ", R=" << as_implicit()->R << ")";
  return os.str();
}

double signed_distance(const Domain& domain, const Vec& x) {
  if (x.size() != domain.dim()) throw ArgumentError("point dimension does not match the domain");
  if (const Ball* b = domain.as_ball()) return (x - b->center).norm() - b->radius;
  if (const HalfSpace* h = domain.as_halfspace()) return (x - h->point).dot(h->normal);
  return domain.as_implicit()->sdf(x);
}

Vec distance_gradient(const Domain& domain, const Vec& x) {
  if (const Ball* b = domain.as_ball()) {
    const Vec v = x - b->center;
    const double n = v.norm();
    return n > 0.0 ? Vec(v / n) : unit_vec(domain.dim(), 0);
  }
  if (const HalfSpace* h = domain.as_halfspace()) return h->normal;
  const ImplicitShape& s = *domain.as_implicit();
  if (s.gradient) return s.gradient(x);
  return fd_gradient(s.sdf, x, 1e-6 * s.R);
}

BoundaryPoint boundary_projection(const Domain& domain, const Vec& x) {
  const double dx = signed_distance(domain, x);
  const double delta = std::abs(dx);
  if (!(delta < domain.R())) {
    std::ostringstream os;
    os << "distance " << delta << " to the boundary is not below R = " << domain.R();
    throw NonUniqueProjectionError(os.str());
  }
  BoundaryPoint bp;
  bp.delta = delta;
  if (const Ball* b = domain.as_ball()) {
    const Vec v = x - b->center;
    const double n = v.norm();
    if (!(n > 0.0)) throw NonUniqueProjectionError("the centre of a ball has no unique projection");
    bp.nu = v / n;
    bp.y = b->center + b->radius * bp.nu;
    return bp;
  }
  if (const HalfSpace* h = domain.as_halfspace()) {
    bp.nu = h->normal;
    bp.y = x - dx * h->normal;
    return bp;
  }
  const ImplicitShape& s = *domain.as_implicit();
  Vec g = distance_gradient(domain, x);
  Vec y = x - dx * g / g.norm();
  // Damped Newton along the gradient; exact distance functions need no correction.
  double fy = s.sdf(y);
  const double tol = 1e-14 * std::max(1.0, s.R);
  for (int it = 0; it < 50 && std::abs(fy) > tol; ++it) {
    g = distance_gradient(domain, y);
    const Vec step = fy * g / g.squaredNorm();
    double damping = 1.0;
    Vec trial = y - step;
    double ft = s.sdf(trial);
    while (std::abs(ft) >= std::abs(fy) && damping > 1e-4) {
      damping *= 0.5;
      trial = y - damping * step;
      ft = s.sdf(trial);
    }
    if (std::abs(ft) >= std::abs(fy)) break;
    y = trial;
    fy = ft;
  }
  if (!(std::abs(fy) <= 1e-8 * std::max(1.0, s.R)))
    throw NonUniqueProjectionError("projection onto the implicit boundary did not converge");
  const Vec gy = distance_gradient(domain, y);
  bp.nu = gy / gy.norm();
  bp.y = y;
  return bp;
}

VolumeEstimate qmc_integral(const Domain& domain, const std::function<double(const Vec&)>& f, double a,
                            const QmcOptions& opt) {
  if (opt.shifts < 2) throw ArgumentError("QMC needs at least two shifts for an error estimate");
  const Box box = bounding_box(domain);
  const double vol = box.volume();
  const std::uint64_t per_shift = std::max<std::uint64_t>(1, opt.points / opt.shifts);
  std::vector<double> estimates(opt.shifts);
  for (int k = 0; k < opt.shifts; ++k) {
    double sum = 0.0;
    for_each_qmc_point(box, per_shift, k, opt.seed, [&](const Vec& x) {
      const double dx = signed_distance(domain, x);
      if (dx < 0.0 && dx > -a) sum += f(x);
    });
    estimates[k] = vol * sum / static_cast<double>(per_shift);
  }
  double mean = 0.0;
  for (double e : estimates) mean += e;
  mean /= opt.shifts;
  double var = 0.0;
  for (double e : estimates) var += (e - mean) * (e - mean);
  var /= (opt.shifts - 1);
  return {mean, std::sqrt(var / opt.shifts), per_shift * opt.shifts};
}

VolumeEstimate volume(const Domain& domain, const QmcOptions& opt) {
  if (!domain.bounded()) throw ArgumentError("volume of an unbounded domain");
  if (const Ball* b = domain.as_ball()) {
    const std::uint64_t zero = 0;
    return {unit_ball_volume(domain.dim()) * std::pow(b->radius, domain.dim()), 0.0, zero};
  }
  return qmc_integral(
      domain, [](const Vec&) { return 1.0; }, std::numeric_limits<double>::infinity(), opt);
}

double SurfaceQuadrature::total() const {
  double s = 0.0;
  for (double w : weights) s += w;
  return s;
}

SurfaceQuadrature surface_quadrature(const Domain& domain, int n_nodes, const SurfaceOptions& opt) {
  if (n_nodes < 1) throw ArgumentError("surface quadrature needs at least one node");
  const int d = domain.dim();
  SurfaceQuadrature q;
  q.nodes.reserve(n_nodes);
  q.normals.reserve(n_nodes);
  q.weights.reserve(n_nodes);
  if (const Ball* b = domain.as_ball()) {
    const double area = omega(d) * std::pow(b->radius, d - 1);
    auto push = [&](const Vec& u, double w) {
      q.nodes.push_back(b->center + b->radius * u);
      q.normals.push_back(u);
      q.weights.push_back(w);
    };
    if (d == 1) {
      push(unit_vec(1, 0), 1.0);
      push(-unit_vec(1, 0), 1.0);
    } else if (d == 2) {
      for (int i = 0; i < n_nodes; ++i) {
        const double th = 2.0 * kPi * (i + 0.5) / n_nodes;
        Vec u(2);
        u << std::cos(th), std::sin(th);
        push(u, area / n_nodes);
      }
    } else if (d == 3) {
      const double golden = kPi * (3.0 - std::sqrt(5.0));
      for (int i = 0; i < n_nodes; ++i) {
        const double z = 1.0 - (2.0 * i + 1.0) / n_nodes;
        const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
        Vec u(3);
        u << rho * std::cos(golden * i), rho * std::sin(golden * i), z;
        push(u, area / n_nodes);
      }
    } else {
      Rng rng(opt.seed, 0);
      for (int i = 0; i < n_nodes; ++i) {
        Vec g(d);
        for (int j = 0; j < d; ++j) {
          // Box-Muller from the stream keeps the node set a pure function of the seed.
          const double r = std::sqrt(-2.0 * std::log(rng.uniform()));
          g[j] = r * std::cos(2.0 * kPi * rng.uniform());
        }
        push(g / g.norm(), area / n_nodes);
      }
    }
    return q;
  }
  if (const HalfSpace* h = domain.as_halfspace()) {
    if (!h->patch_radius) throw ArgumentError("half-space surface quadrature needs a patch radius");
    const double rho = *h->patch_radius;
    const Mat T = tangent_basis(h->normal);
    if (d == 2) {
      for (int i = 0; i < n_nodes; ++i) {
        const double u = -rho + 2.0 * rho * (i + 0.5) / n_nodes;
        q.nodes.push_back(h->point + u * T.col(0));
        q.normals.push_back(h->normal);
        q.weights.push_back(2.0 * rho / n_nodes);
      }
    } else if (d == 3) {
      const double golden = kPi * (3.0 - std::sqrt(5.0));
      for (int i = 0; i < n_nodes; ++i) {
        const double r = rho * std::sqrt((i + 0.5) / n_nodes);
        q.nodes.push_back(h->point + r * std::cos(golden * i) * T.col(0) + r * std::sin(golden * i) * T.col(1));
        q.normals.push_back(h->normal);
        q.weights.push_back(kPi * rho * rho / n_nodes);
      }
    } else {
      throw ArgumentError("half-space patches are supported for d = 2, 3");
    }
    return q;
  }
  const ImplicitShape& s = *domain.as_implicit();
  const double h = opt.shell_fraction * s.R;
  Box box{s.lo.array() - h, s.hi.array() + h};
  const double vol = box.volume();
  std::uint64_t visited = 0, failures = 0;
  boost::random::sobol qrng(d);
  Rng rng(opt.seed, 0);
  Vec offset(d);
  for (int j = 0; j < d; ++j) offset[j] = rng.uniform();
  Vec x(d);
  const Vec width = box.hi - box.lo;
  while (static_cast<int>(q.nodes.size()) < n_nodes && visited < opt.max_points) {
    for (int j = 0; j < d; ++j) {
      double u = static_cast<double>(qrng()) * 0x1p-64 + offset[j];
      if (u >= 1.0) u -= 1.0;
      x[j] = box.lo[j] + u * width[j];
    }
    ++visited;
    if (std::abs(s.sdf(x)) >= h) continue;
    try {
      BoundaryPoint bp = boundary_projection(domain, x);
      q.nodes.push_back(bp.y);
      q.normals.push_back(bp.nu);
    } catch (const NonUniqueProjectionError&) {
      ++failures;
    }
  }
  const std::uint64_t shell = q.nodes.size() + failures;
  if (static_cast<int>(q.nodes.size()) < n_nodes) throw QualityError("shell sampling exhausted its point budget");
  if (failures > 0.001 * shell) {
    std::ostringstream os;
    os << failures << " of " << shell << " shell points failed to project";
    throw QualityError(os.str());
  }
  // Every shell point (projected or not) represents vol / visited of the shell volume 2h |dD|.
  double w = vol / (2.0 * h * static_cast<double>(visited)) * static_cast<double>(shell) /
             static_cast<double>(q.nodes.size());
  // The shell count is only good to a fraction of a percent; a declared area is exact.
  if (s.exact_area) w = *s.exact_area / static_cast<double>(q.nodes.size());
  q.weights.assign(q.nodes.size(), w);
  return q;
}

double surface_area(const Domain& domain, int n_nodes) {
  if (const Ball* b = domain.as_ball()) return omega(domain.dim()) * std::pow(b->radius, domain.dim() - 1);
  if (const ImplicitShape* s = domain.as_implicit(); s && s->exact_area) return *s->exact_area;
  return surface_quadrature(domain, n_nodes).total();
}

double coarea_jacobian(const Domain& domain, const Vec& y, const Vec& nu, double s) {
  if (const Ball* b = domain.as_ball()) return std::pow((b->radius - s) / b->radius, domain.dim() - 1);
  if (domain.as_halfspace()) return 1.0;
  (void)nu;
  const Mat H = fd_hessian(domain, y);
  return (Mat::Identity(domain.dim(), domain.dim()) - s * H).determinant();
}

// ---------------------------------------------------------------------------

LayerSampler::LayerSampler(const Domain& domain, double a, DepthLaw depth, int quadrature_nodes)
    : domain_(domain), a_(a), depth_(depth) {
  if (!(a > 0.0)) throw ArgumentError("layer width must be positive");
  if (!(a < 0.5 * domain.R())) throw ArgumentError("layer width must be below R/2");
  if (depth_.kind != DepthLaw::Uniform && !(depth_.scale > 0.0))
    throw ArgumentError("depth law needs a positive scale");
  if (!domain.as_ball()) {
    quad_ = surface_quadrature(domain, quadrature_nodes);
    cdf_.resize(quad_.weights.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < cdf_.size(); ++i) cdf_[i] = (acc += quad_.weights[i]);
    area_ = acc;
    if (const ImplicitShape* s = domain.as_implicit(); s && s->exact_area) area_ = *s->exact_area;
  } else {
    area_ = surface_area(domain);
  }
}

double LayerSampler::depth_density(double s) const {
  const double uniform = 1.0 / a_;
  switch (depth_.kind) {
    case DepthLaw::Uniform:
      return uniform;
    case DepthLaw::Exponential: {
      const double l = depth_.scale;
      return 0.25 * uniform + 0.75 * std::exp(-s / l) / (l * -std::expm1(-a_ / l));
    }
    case DepthLaw::Logarithmic: {
      const double s0 = depth_.scale;
      return 0.25 * uniform + 0.75 / ((s + s0) * std::log1p(a_ / s0));
    }
  }
  return uniform;
}

double LayerSampler::draw_depth(Rng& rng) const {
  const double u = rng.uniform();
  if (depth_.kind == DepthLaw::Uniform) return u * a_;
  const double v = rng.uniform();
  if (u < 0.25) return v * a_;
  if (depth_.kind == DepthLaw::Exponential) {
    const double l = depth_.scale;
    return -l * std::log1p(v * std::expm1(-a_ / l));
  }
  const double s0 = depth_.scale;
  return s0 * std::expm1(v * std::log1p(a_ / s0));
}

LayerSample LayerSampler::sample(Rng& rng) const {
  LayerSample ls;
  const int d = domain_.dim();
  if (const Ball* b = domain_.as_ball()) {
    Vec g(d);
    double n2 = 0.0;
    do {
      for (int j = 0; j < d; ++j) {
        const double r = std::sqrt(-2.0 * std::log(rng.uniform()));
        g[j] = r * std::cos(2.0 * kPi * rng.uniform());
      }
      n2 = g.squaredNorm();
    } while (!(n2 > 0.0));
    ls.nu = g / std::sqrt(n2);
    ls.y = b->center + b->radius * ls.nu;
  } else {
    const double target = rng.uniform() * cdf_.back();
    const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), target);
    const std::size_t i = std::min<std::size_t>(it - cdf_.begin(), cdf_.size() - 1);
    ls.y = quad_.nodes[i];
    ls.nu = quad_.normals[i];
  }
  ls.s = draw_depth(rng);
  ls.x = ls.y - ls.s * ls.nu;
  ls.weight = area_ / depth_density(ls.s);
  ls.jacobian = coarea_jacobian(domain_, ls.y, ls.nu, ls.s);
  return ls;
}

LayerSample layer_sample(const Domain& domain, double a, Rng& rng) {
  return LayerSampler(domain, a).sample(rng);
}

const char* to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::Pass:
      return "pass";
    case CheckStatus::Fail:
      return "fail";
    case CheckStatus::Inconclusive:
      return "inconclusive";
  }
  return "?";
}

CoareaReport coarea_sandwich_check(const Domain& domain, const std::function<double(const Vec&)>& f, double a,
                                   const CoareaOptions& opt) {
  const double R = domain.R();
  if (!(a > 0.0 && a < 0.5 * R)) throw ArgumentError("coarea check needs 0 < a < R/2");
  CoareaReport rep;
  const VolumeEstimate vol = qmc_integral(domain, f, a, opt.qmc);
  rep.volume_integral = vol.value;
  rep.volume_stderr = vol.std_error;

  const SurfaceQuadrature sq = surface_quadrature(domain, opt.surface_nodes);
  const quad::Rule& rule = quad::gauss_legendre(opt.depth_order);
  double layer = 0.0;
  for (std::size_t i = 0; i < sq.nodes.size(); ++i) {
    double inner = 0.0;
    for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
      const double s = 0.5 * a * (rule.nodes[j] + 1.0);
      inner += rule.weights[j] * f(sq.nodes[i] - s * sq.normals[i]);
    }
    layer += sq.weights[i] * 0.5 * a * inner;
  }
  rep.layer_integral = layer;
  const int d = domain.dim();
  rep.lower = std::pow((R - a) / R, d - 1);
  rep.upper = std::pow(R / (R - a), d - 1);
  if (!(std::abs(layer) > 0.0)) {
    rep.status = CheckStatus::Inconclusive;
    return rep;
  }
  rep.ratio = vol.value / layer;
  rep.ratio_stderr = vol.std_error / std::abs(layer);
  const double band = 3.0 * rep.ratio_stderr;
  if (2.0 * band > rep.upper - rep.lower)
    rep.status = CheckStatus::Inconclusive;
  else if (rep.ratio >= rep.lower - band && rep.ratio <= rep.upper + band)
    rep.status = CheckStatus::Pass;
  else
    rep.status = CheckStatus::Fail;
  return rep;
}

ShapeCheck check_implicit_shape(const Domain& domain, int n_points, int n_probe) {
  const ImplicitShape* s = domain.as_implicit();
  if (!s) throw ArgumentError("shape check applies to implicit domains");
  ShapeCheck rep;
  const SurfaceQuadrature sq = surface_quadrature(domain, std::max(n_points, n_probe));
  Rng rng(0x5eed, 1);
  const double a = 0.5 * s->R;
  for (int i = 0; i < n_points; ++i) {
    const double depth = (2.0 * rng.uniform() - 1.0) * a;
    const Vec x = sq.nodes[i] - depth * sq.normals[i];
    const Vec g = fd_gradient(s->sdf, x, 1e-5 * s->R);
    rep.max_gradient_defect = std::max(rep.max_gradient_defect, std::abs(g.norm() - 1.0));
  }
  rep.eikonal_ok = rep.max_gradient_defect <= 1e-4;
  rep.min_curvature_radius = std::numeric_limits<double>::infinity();
  const std::size_t stride = std::max<std::size_t>(1, sq.nodes.size() / n_probe);
  for (int k = 0; k < n_probe; ++k) {
    const std::size_t i = std::min(sq.nodes.size() - 1, k * stride);
    const Mat H = fd_hessian(domain, sq.nodes[i]);
    Eigen::SelfAdjointEigenSolver<Mat> es(H, Eigen::EigenvaluesOnly);
    const double kmax = es.eigenvalues().cwiseAbs().maxCoeff();
    if (kmax > 0.0) rep.min_curvature_radius = std::min(rep.min_curvature_radius, 1.0 / kmax);
  }
  rep.radius_consistent = rep.min_curvature_radius >= s->R * (1.0 - 1e-3);
  return rep;
}

// ---------------------------------------------------------------------------

namespace catalog {

Domain disk(double radius, Vec center) { return Domain::ball(std::move(center), radius); }

Domain implicit_ball(int d, double radius) {
  ImplicitShape s;
  s.name = "ball";
  s.sdf = [radius](const Vec& x) { return x.norm() - radius; };
  s.gradient = [](const Vec& x) {
    const double n = x.norm();
    return n > 0.0 ? Vec(x / n) : unit_vec(static_cast<int>(x.size()), 0);
  };
  s.R = radius;
  s.lo = Vec::Constant(d, -radius);
  s.hi = Vec::Constant(d, radius);
  s.convex = true;
  s.exact_volume = unit_ball_volume(d) * std::pow(radius, d);
  s.exact_area = omega(d) * std::pow(radius, d - 1);
  return Domain::implicit(std::move(s));
}

namespace {

// Closest point on the ellipse (x/e0)^2 + (y/e1)^2 = 1, e0 >= e1, for a query in the
// closed first quadrant (robust bisection on the Lagrange parameter).
std::pair<double, double> ellipse_closest(double e0, double e1, double y0, double y1) {
  if (y1 > 0.0) {
    if (y0 > 0.0) {
      const double z0 = y0 / e0, z1 = y1 / e1;
      double g = z0 * z0 + z1 * z1 - 1.0;
      if (g == 0.0) return {y0, y1};
      const double r0 = (e0 / e1) * (e0 / e1);
      const double n0 = r0 * z0;
      double s0 = z1 - 1.0;
      double s1 = g < 0.0 ? 0.0 : std::hypot(n0, z1) - 1.0;
      double sbar = 0.0;
      for (int i = 0; i < 1100; ++i) {
        sbar = 0.5 * (s0 + s1);
        if (sbar == s0 || sbar == s1) break;
        const double a = n0 / (sbar + r0), b = z1 / (sbar + 1.0);
        g = a * a + b * b - 1.0;
        if (g > 0.0)
          s0 = sbar;
        else if (g < 0.0)
          s1 = sbar;
        else
          break;
      }
      return {r0 * y0 / (sbar + r0), y1 / (sbar + 1.0)};
    }
    return {0.0, e1};
  }
  const double numer0 = e0 * y0, denom0 = e0 * e0 - e1 * e1;
  if (numer0 < denom0) {
    const double xde0 = numer0 / denom0;
    return {e0 * xde0, e1 * std::sqrt(std::max(0.0, 1.0 - xde0 * xde0))};
  }
  return {e0, 0.0};
}

}  // namespace

Domain ellipse(double a, double b) {
  if (!(a >= b && b > 0.0)) throw ArgumentError("ellipse needs a >= b > 0");
  ImplicitShape s;
  s.name = "ellipse";
  auto closest = [a, b](const Vec& x) {
    auto [c0, c1] = ellipse_closest(a, b, std::abs(x[0]), std::abs(x[1]));
    Vec c(2);
    c << std::copysign(c0, x[0]), std::copysign(c1, x[1]);
    return c;
  };
  s.sdf = [a, b, closest](const Vec& x) {
    const double dist = (x - closest(x)).norm();
    const double level = (x[0] / a) * (x[0] / a) + (x[1] / b) * (x[1] / b);
    return level < 1.0 ? -dist : dist;
  };
  s.gradient = [a, b, closest](const Vec& x) {
    const Vec c = closest(x);
    const Vec diff = x - c;
    const double dist = diff.norm();
    Vec n(2);
    n << c[0] / (a * a), c[1] / (b * b);
    n /= n.norm();
    if (dist < 1e-12 * a) return n;
    return Vec(diff.dot(n) >= 0.0 ? Vec(diff / dist) : Vec(-diff / dist));
  };
  s.R = b * b / a;
  s.lo = Vec::Constant(2, -a);
  s.lo[1] = -b;
  s.hi = Vec::Constant(2, a);
  s.hi[1] = b;
  s.convex = true;
  s.exact_volume = kPi * a * b;
  s.exact_area = 4.0 * a * boost::math::ellint_2(std::sqrt(1.0 - (b / a) * (b / a)));
  return Domain::implicit(std::move(s));
}

Domain capsule(double half_length, double radius) {
  if (!(half_length >= 0.0 && radius > 0.0)) throw ArgumentError("capsule needs half_length >= 0, radius > 0");
  ImplicitShape s;
  s.name = "capsule";
  auto offset = [half_length](const Vec& x) {
    Vec v = x;
    v[0] = x[0] - std::clamp(x[0], -half_length, half_length);
    return v;
  };
  s.sdf = [radius, offset](const Vec& x) { return offset(x).norm() - radius; };
  s.gradient = [offset](const Vec& x) {
    const Vec v = offset(x);
    const double n = v.norm();
    return n > 0.0 ? Vec(v / n) : unit_vec(2, 1);
  };
  s.R = radius;
  s.lo = Vec(2);
  s.lo << -half_length - radius, -radius;
  s.hi = -s.lo;
  s.convex = true;
  s.exact_volume = 4.0 * half_length * radius + kPi * radius * radius;
  s.exact_area = 4.0 * half_length + 2.0 * kPi * radius;
  return Domain::implicit(std::move(s));
}

}  // namespace catalog

}  // namespace shc
