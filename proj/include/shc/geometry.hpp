#pragma once

#include "shc/core.hpp"
#include "shc/rng.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace shc {

struct Ball {
  Vec center;
  double radius = 1.0;
};

/// {x : <x - point, normal> < 0}; `normal` is the outward unit normal. A patch
/// radius restricts surface quadrature and layer sampling to a disc of the plane.
struct HalfSpace {
  Vec point;
  Vec normal;
  std::optional<double> patch_radius;
};

/// Domain {sdf < 0} given by a signed distance function.
struct ImplicitShape {
  std::string name;
  std::function<double(const Vec&)> sdf;
  std::function<Vec(const Vec&)> gradient;  // empty: central differences
  double R = 0.0;                           // declared interior/exterior ball radius
  Vec lo, hi;                               // bounding box
  bool convex = false;
  std::optional<double> exact_volume;
  std::optional<double> exact_area;
};

class Domain {
 public:
  using Shape = std::variant<Ball, HalfSpace, ImplicitShape>;

  static Domain ball(Vec center, double radius);
  static Domain halfspace(Vec point, Vec outward_normal, std::optional<double> patch_radius = std::nullopt);
  static Domain implicit(ImplicitShape shape);

  int dim() const { return dim_; }
  bool bounded() const { return !std::holds_alternative<HalfSpace>(shape_); }
  /// Ball-condition radius (infinite for half-spaces).
  double R() const;
  bool convex() const;
  const Shape& shape() const { return shape_; }
  std::string describe() const;

  const Ball* as_ball() const { return std::get_if<Ball>(&shape_); }
  const HalfSpace* as_halfspace() const { return std::get_if<HalfSpace>(&shape_); }
  const ImplicitShape* as_implicit() const { return std::get_if<ImplicitShape>(&shape_); }

 private:
  Domain(Shape shape, int dim) : shape_(std::move(shape)), dim_(dim) {}
  Shape shape_;
  int dim_ = 2;
};

/// Negative inside.
double signed_distance(const Domain& domain, const Vec& x);
inline bool contains(const Domain& domain, const Vec& x) { return signed_distance(domain, x) < 0.0; }
/// Gradient of the signed distance (the outward normal on the boundary).
Vec distance_gradient(const Domain& domain, const Vec& x);

struct BoundaryPoint {
  Vec y;
  Vec nu;  // outward unit normal at y
  double delta = 0.0;
};

/// Nearest boundary point. Inside points satisfy x = y - delta nu; points outside
/// satisfy x = y + delta nu. Requires delta < R.
BoundaryPoint boundary_projection(const Domain& domain, const Vec& x);

struct VolumeEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::uint64_t points = 0;
};

struct QmcOptions {
  std::uint64_t points = 1 << 20;
  int shifts = 16;  // independent random shifts; stderr from their spread
  std::uint64_t seed = 0x5eed;
};

/// Exact for balls; randomly shifted Sobol points over the bounding box otherwise.
VolumeEstimate volume(const Domain& domain, const QmcOptions& opt = {});

/// QMC integral of f over {x in D : -a < d(x) <= 0} (a = inf for all of D).
VolumeEstimate qmc_integral(const Domain& domain, const std::function<double(const Vec&)>& f,
                            double a = std::numeric_limits<double>::infinity(), const QmcOptions& opt = {});

struct SurfaceQuadrature {
  std::vector<Vec> nodes;
  std::vector<Vec> normals;
  std::vector<double> weights;
  double total() const;
};

struct SurfaceOptions {
  double shell_fraction = 1e-3;  // h = shell_fraction * R for implicit shapes
  std::uint64_t seed = 0x5eed;
  std::uint64_t max_points = std::uint64_t(1) << 32;
};

/// Ball: equispaced (d = 2), spherical Fibonacci (d = 3), equal weights otherwise.
/// Implicit shapes: Sobol points in the shell {|d| < h}, projected, weight vol/(2h N).
/// Half-spaces need a patch radius.
SurfaceQuadrature surface_quadrature(const Domain& domain, int n_nodes, const SurfaceOptions& opt = {});

/// Surface area, exact where the catalog knows it.
double surface_area(const Domain& domain, int n_nodes = 1 << 14);

/// Ratio of the parallel surface element at depth s to the boundary element at y:
/// ((R - s)/R)^{d-1} for balls, 1 for half-spaces, det(I - s Hess d(y)) otherwise.
double coarea_jacobian(const Domain& domain, const Vec& y, const Vec& nu, double s);

struct LayerSample {
  Vec x;
  Vec y;
  Vec nu;
  double s = 0.0;
  double weight = 0.0;    // |dD| / (density of s)
  double jacobian = 1.0;  // coarea_jacobian(y, s)
};

/// Law of the depth s in (0, a). Non-uniform laws mix a quarter of uniform mass
/// with an exponential (scale) or a 1/(s + scale) profile.
struct DepthLaw {
  enum Kind { Uniform, Exponential, Logarithmic } kind = Uniform;
  double scale = 0.0;
};

/// Draws y from the surface measure and s from (0, a); the weighted mean of
/// f(x) * weight approximates int_0^a int_dD f(y - s nu) S(dy) ds, and including
/// the jacobian makes it exact for int_{D \ D_a} f dx.
class LayerSampler {
 public:
  LayerSampler(const Domain& domain, double a, DepthLaw depth = {}, int quadrature_nodes = 1 << 14);

  LayerSample sample(Rng& rng) const;
  double a() const { return a_; }
  double area() const { return area_; }
  const Domain& domain() const { return domain_; }
  /// Density of the depth law at s.
  double depth_density(double s) const;

 private:
  double draw_depth(Rng& rng) const;

  Domain domain_;
  double a_;
  double area_ = 0.0;
  DepthLaw depth_;
  SurfaceQuadrature quad_;
  std::vector<double> cdf_;
};

/// One draw; builds a sampler per call.
LayerSample layer_sample(const Domain& domain, double a, Rng& rng);

enum class CheckStatus { Pass, Fail, Inconclusive };
const char* to_string(CheckStatus s);

struct CoareaReport {
  double volume_integral = 0.0;
  double volume_stderr = 0.0;
  double layer_integral = 0.0;
  double ratio = 0.0;
  double ratio_stderr = 0.0;
  double lower = 0.0;  // ((R - a)/R)^{d-1}
  double upper = 0.0;  // (R/(R - a))^{d-1}
  CheckStatus status = CheckStatus::Inconclusive;
};

struct CoareaOptions {
  QmcOptions qmc;
  int surface_nodes = 1 << 14;
  int depth_order = 16;
};

/// Compares int_{D \ D_a} f dx (QMC) with int_0^a int_dD f(y - s nu) S(dy) ds.
CoareaReport coarea_sandwich_check(const Domain& domain, const std::function<double(const Vec&)>& f, double a,
                                   const CoareaOptions& opt = {});

struct ShapeCheck {
  double max_gradient_defect = 0.0;      // max | |grad d| - 1 | over layer points
  double min_curvature_radius = 0.0;     // from osculating-circle fits at boundary points
  bool eikonal_ok = false;
  bool radius_consistent = false;
};

/// Finite-difference eikonal check at n_points layer points and curvature probe at
/// n_probe boundary points.
ShapeCheck check_implicit_shape(const Domain& domain, int n_points = 1000, int n_probe = 64);

namespace catalog {

Domain disk(double radius = 1.0, Vec center = Vec::Zero(2));
/// Implicit ball in R^d (same set as Domain::ball), used for agreement tests.
Domain implicit_ball(int d, double radius = 1.0);
/// Ellipse with semi-axes a >= b (exact distance); R = b^2 / a.
Domain ellipse(double a, double b);
/// Stadium: points within `radius` of the segment [-half_length, half_length] x {0}.
Domain capsule(double half_length, double radius);

}  // namespace catalog

}  // namespace shc
