#pragma once

// Points and tangent vectors of the product manifold
//   M = Gr(n,r) x St(n,r) x R^{r x r} x R^{r x r x r} x R^{r x m} [x R^{r x r x r x r}]
// together with the product metric, retraction and transport.

#include "nitrom/manifolds.hpp"
#include "nitrom/polynomial.hpp"

#include <array>
#include <initializer_list>
#include <string>

namespace nitrom {

enum class Block { phi = 0, psi, a, h, b, g };
constexpr std::array<Block, 6> kAllBlocks = {Block::phi, Block::psi, Block::a,
                                             Block::h,   Block::b,   Block::g};

inline const char *block_name(Block b) {
  switch (b) {
  case Block::phi: return "Phi";
  case Block::psi: return "Psi";
  case Block::a: return "A_r";
  case Block::h: return "H_r";
  case Block::b: return "B_r";
  case Block::g: return "G_r";
  }
  return "?";
}

/// Which parameter blocks an optimizer may move; the rest stay bit-identical.
class BlockSelector {
public:
  BlockSelector() = default;
  BlockSelector(std::initializer_list<Block> blocks) {
    for (Block b : blocks) enable(b);
  }

  static BlockSelector all() {
    return {Block::phi, Block::psi, Block::a, Block::h, Block::b, Block::g};
  }
  static BlockSelector bases() { return {Block::phi, Block::psi}; }
  static BlockSelector tensors() { return {Block::a, Block::h, Block::b, Block::g}; }

  BlockSelector &enable(Block b) {
    flags_[static_cast<int>(b)] = true;
    return *this;
  }
  BlockSelector &disable(Block b) {
    flags_[static_cast<int>(b)] = false;
    return *this;
  }
  bool enabled(Block b) const { return flags_[static_cast<int>(b)]; }
  bool any() const {
    for (bool f : flags_)
      if (f) return true;
    return false;
  }

  std::string describe() const {
    std::string s;
    for (Block b : kAllBlocks)
      if (enabled(b)) {
        if (!s.empty()) s += "+";
        s += block_name(b);
      }
    return s.empty() ? "none" : s;
  }

private:
  std::array<bool, 6> flags_{};
};

/// Tangent vectors and Euclidean gradients share this layout.
struct TangentVector {
  Matrix phi, psi, a, h, b, g;

  Matrix &block(Block bl) {
    switch (bl) {
    case Block::phi: return phi;
    case Block::psi: return psi;
    case Block::a: return a;
    case Block::h: return h;
    case Block::b: return b;
    case Block::g: return g;
    }
    return a;
  }
  const Matrix &block(Block bl) const {
    return const_cast<TangentVector *>(this)->block(bl);
  }

  TangentVector &operator+=(const TangentVector &o) {
    for (Block bl : kAllBlocks) block(bl) += o.block(bl);
    return *this;
  }
  TangentVector &operator*=(double s) {
    for (Block bl : kAllBlocks) block(bl) *= s;
    return *this;
  }
  friend TangentVector operator*(double s, TangentVector v) { return v *= s; }
  friend TangentVector operator+(TangentVector x, const TangentVector &y) {
    return x += y;
  }
  friend TangentVector operator-(TangentVector x) { return x *= -1.0; }

  bool all_finite() const {
    for (Block bl : kAllBlocks)
      if (!block(bl).allFinite()) return false;
    return true;
  }
};

using EuclideanGradient = TangentVector;

/// Oblique projection pair: Phi spans the trial space, Psi sets the direction.
struct ModelPoint {
  Matrix phi; // n x r, orthonormal Grassmann representative
  Matrix psi; // n x r, Stiefel point
  PolynomialROM rom;

  Index n() const { return phi.rows(); }
  Index r() const { return phi.cols(); }
  Index m() const { return rom.m(); }

  const Matrix &block(Block bl) const {
    switch (bl) {
    case Block::phi: return phi;
    case Block::psi: return psi;
    case Block::a: return rom.a;
    case Block::h: return rom.h;
    case Block::b: return rom.b;
    case Block::g: return rom.g;
    }
    return rom.a;
  }
  Matrix &block(Block bl) {
    return const_cast<Matrix &>(static_cast<const ModelPoint &>(*this).block(bl));
  }

  /// Whether a block is a free parameter for this model's polynomial order.
  bool has_block(Block bl) const {
    if (bl == Block::h) return has_quadratic(rom.order);
    if (bl == Block::g) return has_cubic(rom.order);
    if (bl == Block::b) return rom.m() > 0;
    return true;
  }

  double projection_rcond() const { return rcond(psi.transpose() * phi); }

  /// Throws if shapes disagree, bases are not orthonormal or Psi^T Phi is
  /// ill-conditioned.
  void validate(double orth_tol = 1e-10) const {
    const Index n = phi.rows(), r = phi.cols();
    check_shape("ModelPoint::Psi", psi.rows(), psi.cols(), n, r);
    check_shape("ModelPoint::A_r", rom.a.rows(), rom.a.cols(), r, r);
    if (rom.b.rows() != r) throw DimensionError("ModelPoint::B_r rows != r");
    check_shape("ModelPoint::H_r", rom.h.rows(), rom.h.cols(), r, r * r);
    if (orthonormality_error(phi) > orth_tol)
      throw std::invalid_argument("ModelPoint: Phi is not orthonormal");
    if (orthonormality_error(psi) > orth_tol)
      throw std::invalid_argument("ModelPoint: Psi is not orthonormal");
    if (projection_rcond() < kMinRcond)
      throw SingularProjection("ModelPoint: Psi^T Phi is singular");
  }
};

inline TangentVector zero_tangent(const ModelPoint &x) {
  TangentVector t;
  for (Block bl : kAllBlocks) {
    const Matrix &m = x.block(bl);
    t.block(bl) = Matrix::Zero(m.rows(), m.cols());
  }
  return t;
}

/// Product metric: Tr(xi^T eta) on the bases, Frobenius dot on tensors.
inline double product_inner(const ModelPoint &x, const TangentVector &xi,
                            const TangentVector &eta) {
  double s = 0.0;
  for (Block bl : kAllBlocks) {
    if (!x.has_block(bl)) continue;
    const Matrix &u = xi.block(bl);
    const Matrix &v = eta.block(bl);
    if (u.size() == 0) continue;
    s += (u.array() * v.array()).sum();
  }
  return s;
}

inline double product_norm(const ModelPoint &x, const TangentVector &xi) {
  return std::sqrt(product_inner(x, xi, xi));
}

/// Projects an ambient vector onto T_x M and zeroes disabled blocks.
/// Applied to a Euclidean gradient this yields the Riemannian gradient.
inline TangentVector project_tangent(const ModelPoint &x, const TangentVector &v,
                                     const BlockSelector &sel) {
  TangentVector t = zero_tangent(x);
  if (sel.enabled(Block::phi)) t.phi = grassmann_project_horizontal(x.phi, v.phi);
  if (sel.enabled(Block::psi)) t.psi = stiefel_project_tangent(x.psi, v.psi);
  for (Block bl : {Block::a, Block::h, Block::b, Block::g})
    if (sel.enabled(bl) && x.has_block(bl)) t.block(bl) = v.block(bl);
  return t;
}

inline TangentVector project_tangent(const ModelPoint &x, const TangentVector &v) {
  return project_tangent(x, v, BlockSelector::all());
}

/// QR retraction on the bases, identity retraction on the tensors. Blocks
/// whose tangent component is exactly zero are copied unchanged.
inline ModelPoint retract(const ModelPoint &x, const TangentVector &xi) {
  ModelPoint y = x;
  if (!xi.phi.isZero(0.0)) y.phi = qr_retract(x.phi, xi.phi);
  if (!xi.psi.isZero(0.0)) y.psi = qr_retract(x.psi, xi.psi);
  for (Block bl : {Block::a, Block::h, Block::b, Block::g})
    if (x.has_block(bl) && xi.block(bl).size() > 0 && !xi.block(bl).isZero(0.0))
      y.block(bl) = x.block(bl) + xi.block(bl);
  return y;
}

/// Projection transport of a tangent vector from `from` to `to`.
inline TangentVector transport(const ModelPoint &from, const ModelPoint &to,
                               const TangentVector &eta) {
  TangentVector t = eta;
  t.phi = grassmann_transport(from.phi, to.phi, eta.phi);
  t.psi = stiefel_transport(from.psi, to.psi, eta.psi);
  return t;
}

} // namespace nitrom
