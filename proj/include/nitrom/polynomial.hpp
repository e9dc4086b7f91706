#pragma once

// Polynomial reduced-order dynamics f_r(z, u) = A z + B u + H:(z z^T) + G:(z z z).
//
// Tensors are stored as dense mode-1 unfoldings in row-major index order:
//   H(i, j*r + k)          = H_ijk        (r x r^2)
//   G(i, (j*r + k)*r + l)  = G_ijkl       (r x r^3)

#include "nitrom/core.hpp"

#include <algorithm>
#include <string>
#include <string_view>

namespace nitrom {

/// Which nonlinear term the model carries. `cubic` is linear + cubic (no
/// quadratic term), the real form of cubic-nonlinear systems such as CGL.
enum class PolyOrder { linear, quadratic, cubic };

inline std::string to_string(PolyOrder o) {
  switch (o) {
  case PolyOrder::linear: return "linear";
  case PolyOrder::quadratic: return "quadratic";
  case PolyOrder::cubic: return "cubic";
  }
  return "linear";
}

inline PolyOrder parse_order(std::string_view s) {
  if (s == "linear") return PolyOrder::linear;
  if (s == "quadratic") return PolyOrder::quadratic;
  if (s == "cubic") return PolyOrder::cubic;
  throw ConfigError("unknown polynomial order '" + std::string(s) + "'");
}

inline bool has_quadratic(PolyOrder o) { return o == PolyOrder::quadratic; }
inline bool has_cubic(PolyOrder o) { return o == PolyOrder::cubic; }

/// z (x) z, length r^2.
inline Vector kron2(const Vector &z) {
  const Index r = z.size();
  Vector out(r * r);
  for (Index j = 0; j < r; ++j)
    for (Index k = 0; k < r; ++k) out(j * r + k) = z(j) * z(k);
  return out;
}

/// z (x) z (x) z, length r^3.
inline Vector kron3(const Vector &z) {
  const Index r = z.size();
  Vector out(r * r * r);
  for (Index j = 0; j < r; ++j)
    for (Index k = 0; k < r; ++k) {
      const double zjk = z(j) * z(k);
      for (Index l = 0; l < r; ++l) out((j * r + k) * r + l) = zjk * z(l);
    }
  return out;
}

/// Average over the two trailing indices.
inline Matrix symmetrize_quadratic(const Matrix &h) {
  const Index r = h.rows();
  check_shape("symmetrize_quadratic", h.rows(), h.cols(), r, r * r);
  Matrix out(r, r * r);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < r; ++j)
      for (Index k = 0; k < r; ++k)
        out(i, j * r + k) = 0.5 * (h(i, j * r + k) + h(i, k * r + j));
  return out;
}

/// Average over the six permutations of the three trailing indices.
inline Matrix symmetrize_cubic(const Matrix &g) {
  const Index r = g.rows();
  check_shape("symmetrize_cubic", g.rows(), g.cols(), r, r * r * r);
  auto at = [r](Index j, Index k, Index l) { return (j * r + k) * r + l; };
  Matrix out(r, r * r * r);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < r; ++j)
      for (Index k = 0; k < r; ++k)
        for (Index l = 0; l < r; ++l) {
          double v[6] = {g(i, at(j, k, l)), g(i, at(j, l, k)), g(i, at(k, j, l)),
                         g(i, at(k, l, j)), g(i, at(l, j, k)), g(i, at(l, k, j))};
          // summing in sorted order makes every permutation bit-identical
          std::sort(v, v + 6);
          if (v[0] == v[5])
            out(i, at(j, k, l)) = v[0];
          else
            out(i, at(j, k, l)) = (((((v[0] + v[1]) + v[2]) + v[3]) + v[4]) + v[5]) / 6.0;
        }
  return out;
}

/// Reduced tensors A_r, B_r, H_r, G_r. H and G are kept symmetric in their
/// trailing indices; inactive terms are stored as zero tensors of the right
/// shape so every model has the same block layout.
struct PolynomialROM {
  PolyOrder order = PolyOrder::quadratic;
  Matrix a; // r x r
  Matrix b; // r x m
  Matrix h; // r x r^2
  Matrix g; // r x r^3 (cubic only, otherwise r x 0)

  Index r() const { return a.rows(); }
  Index m() const { return b.cols(); }

  static PolynomialROM zeros(Index r, Index m, PolyOrder order) {
    PolynomialROM rom;
    rom.order = order;
    rom.a = Matrix::Zero(r, r);
    rom.b = Matrix::Zero(r, m);
    rom.h = Matrix::Zero(r, r * r);
    rom.g = Matrix::Zero(r, has_cubic(order) ? r * r * r : 0);
    return rom;
  }

  /// Validates shapes and finiteness, zeroes inactive terms and symmetrizes
  /// the nonlinear tensors.
  static PolynomialROM make(PolyOrder order, Matrix a, Matrix b, Matrix h,
                            Matrix g) {
    const Index r = a.rows();
    check_shape("PolynomialROM::A", a.rows(), a.cols(), r, r);
    if (b.rows() != r) throw DimensionError("PolynomialROM::B rows != r");
    PolynomialROM rom;
    rom.order = order;
    rom.a = std::move(a);
    rom.b = std::move(b);
    if (has_quadratic(order)) {
      check_shape("PolynomialROM::H", h.rows(), h.cols(), r, r * r);
      rom.h = symmetrize_quadratic(h);
    } else {
      rom.h = Matrix::Zero(r, r * r);
    }
    if (has_cubic(order)) {
      check_shape("PolynomialROM::G", g.rows(), g.cols(), r, r * r * r);
      rom.g = symmetrize_cubic(g);
    } else {
      rom.g = Matrix::Zero(r, 0);
    }
    if (!rom.a.allFinite() || !rom.b.allFinite() || !rom.h.allFinite() ||
        !rom.g.allFinite())
      throw std::invalid_argument("PolynomialROM: non-finite entries");
    return rom;
  }
};

/// f_r(z, u).
inline Vector eval_rom_rhs(const PolynomialROM &rom, const Vector &z,
                           const Vector &u) {
  const Index r = rom.r();
  if (z.size() != r) throw DimensionError("eval_rom_rhs: state size != r");
  if (u.size() != rom.m()) throw DimensionError("eval_rom_rhs: input size != m");
  Vector out = rom.a * z;
  if (rom.m() > 0) out.noalias() += rom.b * u;
  if (has_quadratic(rom.order)) out.noalias() += rom.h * kron2(z);
  if (has_cubic(rom.order)) out.noalias() += rom.g * kron3(z);
  return out;
}

/// df_r/dz = A + 2 H:z + 3 G:(z z); relies on trailing-index symmetry.
inline Matrix eval_rom_jacobian(const PolynomialROM &rom, const Vector &z) {
  const Index r = rom.r();
  if (z.size() != r) throw DimensionError("eval_rom_jacobian: state size != r");
  Matrix jac = rom.a;
  if (has_quadratic(rom.order)) {
    for (Index i = 0; i < r; ++i)
      for (Index j = 0; j < r; ++j) {
        double s = 0.0;
        for (Index k = 0; k < r; ++k) s += rom.h(i, j * r + k) * z(k);
        jac(i, j) += 2.0 * s;
      }
  }
  if (has_cubic(rom.order)) {
    const Vector zz = kron2(z);
    for (Index i = 0; i < r; ++i)
      for (Index j = 0; j < r; ++j) {
        double s = 0.0;
        for (Index kl = 0; kl < r * r; ++kl) s += rom.g(i, j * r * r + kl) * zz(kl);
        jac(i, j) += 3.0 * s;
      }
  }
  return jac;
}

} // namespace nitrom
