#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace nitrom {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Thrown when operand shapes do not compose.
class DimensionError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Invalid options, schedules, files or protocols.
class ConfigError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// QR retraction hit a rank-deficient matrix.
class DegenerateRetraction : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Psi^T Phi is (numerically) singular.
class SingularProjection : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A time integration produced a non-finite state. Carries the time at which
/// the blow-up was detected.
class DivergenceError : public std::runtime_error {
public:
  DivergenceError(const std::string &what, double time)
      : std::runtime_error(what), time_(time) {}
  double time() const noexcept { return time_; }

private:
  double time_;
};

/// Optimizer could not proceed (non-finite cost at the start point, ...).
class OptimizerError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline void check_shape(const char *where, Index rows, Index cols,
                        Index expected_rows, Index expected_cols) {
  if (rows != expected_rows || cols != expected_cols) {
    throw DimensionError(std::string(where) + ": expected " +
                         std::to_string(expected_rows) + "x" +
                         std::to_string(expected_cols) + ", got " +
                         std::to_string(rows) + "x" + std::to_string(cols));
  }
}

template <class Derived>
bool all_finite(const Eigen::DenseBase<Derived> &m) {
  return m.allFinite();
}

/// Reciprocal 2-norm condition number of a square matrix (0 when singular).
inline double rcond(const Matrix &m) {
  if (m.size() == 0) return 1.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  const auto &s = svd.singularValues();
  const double smax = s(0);
  if (!(smax > 0.0) || !std::isfinite(smax)) return 0.0;
  return s(s.size() - 1) / smax;
}

/// Smallest-relative-conditioning tolerated for Psi^T Phi.
constexpr double kMinRcond = 1e-10;

/// SplitMix64: the single PRNG used for every random draw (test protocols,
/// stability-penalty directions). Output stream is fixed by the seed.
class SplitMix64 {
public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller (one draw per call, no caching).
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  Vector normal_vector(Index n) {
    Vector v(n);
    for (Index i = 0; i < n; ++i) v(i) = normal();
    return v;
  }

  Matrix normal_matrix(Index rows, Index cols) {
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j)
      for (Index i = 0; i < rows; ++i) m(i, j) = normal();
    return m;
  }

  /// Uniformly distributed point on the unit sphere in R^n.
  Vector unit_vector(Index n) {
    Vector v = normal_vector(n);
    return v / v.norm();
  }

private:
  std::uint64_t state_;
};

} // namespace nitrom
