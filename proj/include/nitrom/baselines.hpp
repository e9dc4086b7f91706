#pragma once

// POD, Operator Inference and (Petrov-)Galerkin projection of polynomial
// full-order systems. Used for initialization and comparison.

#include "nitrom/dynamics.hpp"
#include "nitrom/full_order.hpp"

#include <vector>

namespace nitrom {

struct PodResult {
  Matrix modes;           // n x r, orthonormal
  Vector singular_values; // all of them, non-increasing
  double variance_fraction = 0.0;
};

/// Leading r left singular vectors of X. Each mode is signed so that its
/// largest-magnitude entry is positive.
inline PodResult compute_pod(const Matrix &snapshots, Index r) {
  const Index n = snapshots.rows();
  const Index k = snapshots.cols();
  if (r < 1 || r > std::min(n, k))
    throw ConfigError("compute_pod: r must lie in [1, min(n, K)]");
  if (!snapshots.allFinite()) throw ConfigError("compute_pod: non-finite snapshots");
  if (snapshots.isZero(0.0)) throw ConfigError("compute_pod: all-zero snapshot matrix");
  Eigen::BDCSVD<Matrix> svd(snapshots, Eigen::ComputeThinU);
  PodResult out;
  out.singular_values = svd.singularValues();
  out.modes = svd.matrixU().leftCols(r);
  for (Index j = 0; j < r; ++j) {
    Index imax = 0;
    out.modes.col(j).cwiseAbs().maxCoeff(&imax);
    if (out.modes(imax, j) < 0.0) out.modes.col(j) *= -1.0;
  }
  const double total = out.singular_values.squaredNorm();
  out.variance_fraction = out.singular_values.head(r).squaredNorm() / total;
  return out;
}

/// Stacks the recorded states of all trajectories, each scaled by
/// 1/sqrt(alpha_j).
inline Matrix weighted_snapshots(const std::vector<Trajectory> &data) {
  Index n = -1, cols = 0;
  for (const auto &t : data) {
    if (!t.has_states()) throw ConfigError("weighted_snapshots: trajectory without states");
    if (n >= 0 && t.x.rows() != n) throw DimensionError("weighted_snapshots: state sizes differ");
    n = t.x.rows();
    cols += t.x.cols();
  }
  if (n < 0) throw ConfigError("weighted_snapshots: no data");
  Matrix out(n, cols);
  Index c = 0;
  for (const auto &t : data) {
    out.middleCols(c, t.x.cols()) = t.x / std::sqrt(t.alpha);
    c += t.x.cols();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Operator Inference

/// Reduced samples of one trajectory.
struct ReducedSamples {
  Matrix z;  // r x N
  Matrix dz; // r x N
  Matrix u;  // m x N
  double weight = 1.0;
};

struct OpInfResult {
  PolynomialROM rom;
  Index rank = 0;
  Index unknowns = 0;
  bool rank_deficient = false; // minimum-norm solution was returned
};

/// Central differences in the interior, one-sided at the ends.
inline Matrix finite_difference_derivative(const Matrix &x, const Vector &t) {
  const Index n = t.size();
  if (x.cols() != n) throw DimensionError("finite_difference_derivative: columns != times");
  if (n < 2) throw ConfigError("finite_difference_derivative: need at least two samples");
  Matrix d(x.rows(), n);
  d.col(0) = (x.col(1) - x.col(0)) / (t(1) - t(0));
  d.col(n - 1) = (x.col(n - 1) - x.col(n - 2)) / (t(n - 1) - t(n - 2));
  for (Index i = 1; i + 1 < n; ++i)
    d.col(i) = (x.col(i + 1) - x.col(i - 1)) / (t(i + 1) - t(i - 1));
  return d;
}

/// Projects trajectories onto Phi: z = Phi^T x, dz = Phi^T dx (recorded
/// derivatives when available, finite differences otherwise), weight 1/alpha.
inline std::vector<ReducedSamples> reduce_for_opinf(const std::vector<Trajectory> &data,
                                                    const Matrix &phi) {
  std::vector<ReducedSamples> out;
  for (const auto &t : data) {
    if (!t.has_states()) throw ConfigError("operator inference needs recorded states");
    if (t.x.rows() != phi.rows()) throw DimensionError("reduce_for_opinf: state size != n");
    ReducedSamples s;
    s.z = phi.transpose() * t.x;
    s.dz = phi.transpose() *
           (t.has_derivatives() ? t.dx : finite_difference_derivative(t.x, t.times));
    const Index m = input_dim(t.input);
    s.u.resize(m, t.samples());
    for (Index i = 0; i < t.samples(); ++i) s.u.col(i) = input_at(t.input, t.times(i));
    s.weight = 1.0 / t.alpha;
    out.push_back(std::move(s));
  }
  return out;
}

namespace detail {

struct Monomial {
  Index a, b, c; // c = -1 for quadratic
  double multiplicity;
};

inline std::vector<Monomial> quadratic_monomials(Index r) {
  std::vector<Monomial> out;
  for (Index a = 0; a < r; ++a)
    for (Index b = a; b < r; ++b) out.push_back({a, b, -1, a == b ? 1.0 : 2.0});
  return out;
}

inline std::vector<Monomial> cubic_monomials(Index r) {
  std::vector<Monomial> out;
  for (Index a = 0; a < r; ++a)
    for (Index b = a; b < r; ++b)
      for (Index c = b; c < r; ++c) {
        double mult = 6.0;
        if (a == b && b == c) mult = 1.0;
        else if (a == b || b == c) mult = 3.0;
        out.push_back({a, b, c, mult});
      }
  return out;
}

} // namespace detail

/// Weighted, Tikhonov-regularized least squares for (A_r, H_r | G_r, B_r).
/// Nonlinear regressors use the non-redundant monomials z_a z_b (a <= b) or
/// z_a z_b z_c (a <= b <= c). The penalty lambda ||Mat(T)||_F^2 acts on the
/// full symmetric tensor, i.e. with weight lambda / multiplicity per monomial.
inline OpInfResult operator_inference(const std::vector<ReducedSamples> &data,
                                      PolyOrder order, double lambda) {
  if (data.empty()) throw ConfigError("operator_inference: no data");
  if (!(lambda >= 0.0)) throw ConfigError("operator_inference: lambda must be >= 0");
  const Index r = data.front().z.rows();
  const Index m = data.front().u.rows();
  std::vector<detail::Monomial> mono;
  if (has_quadratic(order)) mono = detail::quadratic_monomials(r);
  if (has_cubic(order)) mono = detail::cubic_monomials(r);
  const Index nl = static_cast<Index>(mono.size());
  const Index cols = r + nl + m;

  Index rows = 0;
  for (const auto &s : data) {
    if (s.z.rows() != r || s.dz.rows() != r || s.u.rows() != m)
      throw DimensionError("operator_inference: inconsistent reduced data");
    if (s.dz.cols() != s.z.cols() || s.u.cols() != s.z.cols())
      throw DimensionError("operator_inference: sample counts differ");
    rows += s.z.cols();
  }
  const bool regularize = lambda > 0.0 && nl > 0;
  Matrix lhs = Matrix::Zero(rows + (regularize ? nl : 0), cols);
  Matrix rhs = Matrix::Zero(lhs.rows(), r);
  Index row = 0;
  for (const auto &s : data) {
    const double sw = std::sqrt(s.weight);
    for (Index i = 0; i < s.z.cols(); ++i, ++row) {
      const auto z = s.z.col(i);
      lhs.block(row, 0, 1, r) = sw * z.transpose();
      for (Index q = 0; q < nl; ++q) {
        const auto &mq = mono[static_cast<std::size_t>(q)];
        double v = z(mq.a) * z(mq.b);
        if (mq.c >= 0) v *= z(mq.c);
        lhs(row, r + q) = sw * v;
      }
      if (m > 0) lhs.block(row, r + nl, 1, m) = sw * s.u.col(i).transpose();
      rhs.row(row) = sw * s.dz.col(i).transpose();
    }
  }
  if (regularize)
    for (Index q = 0; q < nl; ++q)
      lhs(row + q, r + q) = std::sqrt(lambda / mono[static_cast<std::size_t>(q)].multiplicity);

  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(lhs);
  const Matrix ops = cod.solve(rhs); // cols x r
  OpInfResult out;
  out.rank = cod.rank();
  out.unknowns = cols;
  out.rank_deficient = out.rank < cols;

  PolynomialROM rom = PolynomialROM::zeros(r, m, order);
  rom.a = ops.topRows(r).transpose();
  if (m > 0) rom.b = ops.bottomRows(m).transpose();
  for (Index q = 0; q < nl; ++q) {
    const auto &mq = mono[static_cast<std::size_t>(q)];
    const Vector coeff = ops.row(r + q).transpose() / mq.multiplicity;
    if (mq.c < 0) {
      rom.h.col(mq.a * r + mq.b) = coeff;
      rom.h.col(mq.b * r + mq.a) = coeff;
    } else {
      const Index idx[3] = {mq.a, mq.b, mq.c};
      const int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
      for (const auto &p : perms)
        rom.g.col((idx[p[0]] * r + idx[p[1]]) * r + idx[p[2]]) = coeff;
    }
  }
  out.rom = std::move(rom);
  return out;
}

// ---------------------------------------------------------------------------
// Petrov-Galerkin projection

struct GalerkinResult {
  PolynomialROM rom;
  Matrix c_r; // C Phi (Psi^T Phi)^{-1}
};

/// Expands f through the decoder D = Phi (Psi^T Phi)^{-1}:
///   A_r = Psi^T A D, H_r[:,j,k] = Psi^T T(d_j, d_k),
///   G_r[:,j,k,l] = Psi^T T3(d_j, d_k, d_l), B_r = Psi^T B.
/// Psi = Phi gives the Galerkin model.
inline GalerkinResult petrov_galerkin_project(const FullOrderSystem &sys, const Matrix &phi,
                                              const Matrix &psi) {
  const Index n = sys.state_dim();
  if (phi.rows() != n) throw DimensionError("petrov_galerkin_project: Phi rows != n");
  check_shape("petrov_galerkin_project", psi.rows(), psi.cols(), n, phi.cols());
  if (sys.has_quadratic() && sys.has_cubic())
    throw ConfigError("petrov_galerkin_project: mixed quadratic+cubic systems unsupported");
  const PolyOrder order = sys.has_quadratic() ? PolyOrder::quadratic
                          : sys.has_cubic()   ? PolyOrder::cubic
                                              : PolyOrder::linear;
  const Index r = phi.cols();
  const Matrix d = decoder_matrix({phi, psi});
  GalerkinResult out;
  PolynomialROM rom = PolynomialROM::zeros(r, sys.input_dim(), order);
  rom.a = psi.transpose() * sys.linear_operator() * d;
  if (sys.input_dim() > 0) rom.b = psi.transpose() * sys.input_matrix();
  if (has_quadratic(order))
    for (Index j = 0; j < r; ++j)
      for (Index k = j; k < r; ++k) {
        const Vector v = psi.transpose() * sys.quadratic_form(d.col(j), d.col(k));
        rom.h.col(j * r + k) = v;
        rom.h.col(k * r + j) = v;
      }
  if (has_cubic(order))
    for (Index j = 0; j < r; ++j)
      for (Index k = j; k < r; ++k)
        for (Index l = k; l < r; ++l) {
          const Vector v = psi.transpose() * sys.cubic_form(d.col(j), d.col(k), d.col(l));
          const Index idx[3] = {j, k, l};
          const int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
          for (const auto &p : perms) rom.g.col((idx[p[0]] * r + idx[p[1]]) * r + idx[p[2]]) = v;
        }
  out.rom = std::move(rom);
  out.c_r = sys.output_matrix() * d;
  return out;
}

} // namespace nitrom
