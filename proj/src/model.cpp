#include "shc/model.hpp"

#include "shc/scale_kernel.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace shc {

double LevyModel::a_norm() const {
  if (!diffusion) return 0.0;
  Eigen::SelfAdjointEigenSolver<Mat> es(*diffusion, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

double LevyModel::a_trace() const { return diffusion ? diffusion->trace() : 0.0; }

double LevyModel::a_quadratic(const Vec& nu) const {
  if (!diffusion) return 0.0;
  const Eigen::VectorXd v = nu;
  return v.dot(*diffusion * v);
}

double stable_kernel_constant(int d, double beta) {
  return beta * std::pow(2.0, beta - 1.0) * std::tgamma(0.5 * (d + beta)) /
         (std::pow(kPi, 0.5 * d) * std::tgamma(1.0 - 0.5 * beta));
}

double jump_density(const RadialJumpLaw& law, int d, double r) {
  if (r > law.profile.R0 && law.tail == TailMode::Truncated) return 0.0;
  return law.kappa / (std::pow(r, d) * eval_psi(law.profile, r));
}

void validate(const LevyModel& m) {
  if (m.dim < 2 || m.dim > kMaxDim)
    throw InvalidModelError("dimension must lie in [2, " + std::to_string(kMaxDim) + "]");
  if (!m.diffusion && !m.jumps) throw InvalidModelError("model has neither diffusion nor jumps");
  if (m.diffusion) {
    const Mat& A = *m.diffusion;
    if (A.rows() != m.dim || A.cols() != m.dim) throw InvalidModelError("diffusion matrix has wrong shape");
    if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + A.cwiseAbs().maxCoeff()))
      throw InvalidModelError("diffusion matrix must be symmetric");
    Eigen::SelfAdjointEigenSolver<Mat> es(A, Eigen::EigenvaluesOnly);
    if (!(es.eigenvalues().minCoeff() > 0.0))
      throw InvalidModelError("diffusion matrix must be zero or positive definite");
  }
  if (m.jumps) {
    validate(m.jumps->profile);
    if (!(m.jumps->kappa > 0.0)) throw InvalidModelError("jump kernel constant must be positive");
    const double c3 = levy_c3(*m.jumps, m.dim);
    if (!std::isfinite(c3)) throw InvalidModelError("integral of (1 ^ |x|^2) J(dx) is not finite");
  }
  if (m.exact_stable && !(*m.exact_stable > 0.0 && *m.exact_stable < 2.0))
    throw InvalidModelError("exact stable index must lie in (0, 2)");
}

namespace models {

LevyModel brownian(int d, const Mat& A) {
  LevyModel m;
  m.name = "brownian";
  m.dim = d;
  m.diffusion = A;
  m.isotropic = (A - A(0, 0) * Mat::Identity(A.rows(), A.cols())).cwiseAbs().maxCoeff() < 1e-14;
  validate(m);
  return m;
}

LevyModel brownian(int d, double scale) { return brownian(d, Mat(scale * Mat::Identity(d, d))); }

LevyModel stable(int d, double beta) {
  LevyModel m;
  m.name = "stable";
  m.dim = d;
  m.jumps = RadialJumpLaw{stable_profile(beta), stable_kernel_constant(d, beta), TailMode::Extended};
  m.exact_stable = beta;
  validate(m);
  return m;
}

LevyModel jump_diffusion(int d, const Mat& A, double beta) {
  LevyModel m = stable(d, beta);
  m.name = "jump_diffusion";
  m.diffusion = A;
  m.isotropic = (A - A(0, 0) * Mat::Identity(A.rows(), A.cols())).cwiseAbs().maxCoeff() < 1e-14;
  validate(m);
  return m;
}

LevyModel truncated_stable(int d, double beta, double R0) {
  LevyModel m;
  m.name = "truncated_stable";
  m.dim = d;
  m.jumps = RadialJumpLaw{stable_profile(beta, R0), stable_kernel_constant(d, beta), TailMode::Truncated};
  validate(m);
  return m;
}

LevyModel radial_density(int d, ScalingProfile profile, double kappa, TailMode tail) {
  LevyModel m;
  m.name = "radial_density:" + profile.name;
  m.dim = d;
  m.jumps = RadialJumpLaw{std::move(profile), kappa, tail};
  validate(m);
  return m;
}

}  // namespace models

}  // namespace shc
