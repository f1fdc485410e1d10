#include "partly/linalg.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>

namespace partly::linalg {

std::optional<Matrix> guarded_inverse(const Matrix& a, double max_condition) {
  const Index n = a.rows();
  if (n == 0) return Matrix(0, 0);
  if (n == 1) {
    const double v = a(0, 0);
    if (!(v > 0.0) || !std::isfinite(v)) return std::nullopt;
    return Matrix::Constant(1, 1, 1.0 / v);
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrize(a));
  if (eig.info() != Eigen::Success) return std::nullopt;
  const Vector& ev = eig.eigenvalues();
  const double lo = ev(0);
  const double hi = ev(n - 1);
  if (!(lo > 0.0) || !std::isfinite(hi) || hi / lo > max_condition) {
    return std::nullopt;
  }
  const Matrix& u = eig.eigenvectors();
  return u * ev.cwiseInverse().asDiagonal() * u.transpose();
}

Matrix inverse_or_throw(const Matrix& a, double time, const std::string& what) {
  auto inv = guarded_inverse(a);
  if (!inv) {
    std::ostringstream msg;
    msg << what << " is singular or ill-conditioned at time " << time;
    throw RankError(msg.str(), time);
  }
  return *std::move(inv);
}

PsdRepair repair_psd(const Matrix& a) {
  PsdRepair out;
  out.matrix = symmetrize(a);
  const Index n = a.rows();
  if (n == 0) return out;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(out.matrix);
  Vector ev = eig.eigenvalues();
  out.min_eigenvalue = ev(0);
  if (ev(0) >= 0.0) return out;
  const double trace = out.matrix.trace();
  out.clipped = true;
  out.logged = std::abs(ev(0)) > 1e-8 * std::abs(trace);
  ev = ev.cwiseMax(0.0);
  out.matrix = eig.eigenvectors() * ev.asDiagonal() * eig.eigenvectors().transpose();
  return out;
}

PseudoInverse pseudo_inverse(const Matrix& a, double rel_tol) {
  PseudoInverse out;
  const Index n = a.rows();
  out.matrix = Matrix::Zero(n, n);
  if (n == 0) return out;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrize(a));
  const Vector& ev = eig.eigenvalues();
  const double scale = ev.cwiseAbs().maxCoeff();
  if (scale == 0.0) return out;
  Vector inv = Vector::Zero(n);
  for (Index i = 0; i < n; ++i) {
    if (std::abs(ev(i)) > rel_tol * scale) {
      inv(i) = 1.0 / ev(i);
      ++out.rank;
    }
  }
  out.matrix = eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
  return out;
}

Matrix schur_leading(const Matrix& a, Index p, double time) {
  const Index q = a.rows() - p;
  if (q == 0) return a;
  const Matrix inv22 = inverse_or_throw(a.bottomRightCorner(q, q), time, "lower block");
  return a.topLeftCorner(p, p) -
         a.topRightCorner(p, q) * inv22 * a.bottomLeftCorner(q, p);
}

}  // namespace partly::linalg
