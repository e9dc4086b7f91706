#pragma once

// Grassmann and Stiefel primitives on orthonormal n x r representatives.
// Both carry the metric Tr(xi^T eta) (the Grassmann weight (Phi^T Phi)^{-1}
// is the identity because representatives are kept orthonormal).

#include "nitrom/core.hpp"

#include <algorithm>

namespace nitrom {

/// ||X^T X - I||_F.
inline double orthonormality_error(const Matrix &x) {
  return (x.transpose() * x - Matrix::Identity(x.cols(), x.cols())).norm();
}

inline Matrix sym(const Matrix &m) { return 0.5 * (m + m.transpose()); }

/// Z - Psi sym(Psi^T Z).
inline Matrix stiefel_project_tangent(const Matrix &psi, const Matrix &z) {
  check_shape("stiefel_project_tangent", z.rows(), z.cols(), psi.rows(),
              psi.cols());
  return z - psi * sym(psi.transpose() * z);
}

/// (I - Phi Phi^T) Z.
inline Matrix grassmann_project_horizontal(const Matrix &phi, const Matrix &z) {
  check_shape("grassmann_project_horizontal", z.rows(), z.cols(), phi.rows(),
              phi.cols());
  return z - phi * (phi.transpose() * z);
}

/// Q factor of the thin QR of M, with the sign of each column chosen so that
/// diag(R) >= 0.
inline Matrix orthonormalize(const Matrix &m) {
  const Index n = m.rows();
  const Index r = m.cols();
  if (r > n) throw DimensionError("orthonormalize: more columns than rows");
  if (!m.allFinite()) throw DegenerateRetraction("qr_retract: non-finite input");
  Eigen::HouseholderQR<Matrix> qr(m);
  Matrix q = qr.householderQ() * Matrix::Identity(n, r);
  const Matrix &packed = qr.matrixQR();
  const double scale = std::max(1.0, m.norm());
  for (Index j = 0; j < r; ++j) {
    const double d = packed(j, j);
    if (!(std::abs(d) > 1e-13 * scale))
      throw DegenerateRetraction("qr_retract: rank-deficient X + xi");
    if (d < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

/// R_X(xi) = qf(X + xi). Used for both manifolds.
inline Matrix qr_retract(const Matrix &x, const Matrix &xi) {
  check_shape("qr_retract", xi.rows(), xi.cols(), x.rows(), x.cols());
  return orthonormalize(x + xi);
}

/// Projection-based vector transport onto the tangent space at `to`.
inline Matrix stiefel_transport(const Matrix &from, const Matrix &to,
                                const Matrix &eta) {
  check_shape("stiefel_transport", from.rows(), from.cols(), to.rows(),
              to.cols());
  return stiefel_project_tangent(to, eta);
}

/// Projection-based vector transport onto the horizontal space at `to`.
inline Matrix grassmann_transport(const Matrix &from, const Matrix &to,
                                  const Matrix &eta) {
  check_shape("grassmann_transport", from.rows(), from.cols(), to.rows(),
              to.cols());
  return grassmann_project_horizontal(to, eta);
}

/// Largest principal angle between range(X) and range(Y), both orthonormal.
inline double subspace_angle(const Matrix &x, const Matrix &y) {
  Eigen::JacobiSVD<Matrix> svd(x.transpose() * y);
  const double smin = svd.singularValues().minCoeff();
  return std::acos(std::clamp(smin, -1.0, 1.0));
}

} // namespace nitrom
