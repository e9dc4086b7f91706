#pragma once

#include "nitrom/core.hpp"

#include <memory>
#include <string>

namespace nitrom {

/// Polynomial full-order system
///   dx/dt = A x + T(x, x) + T3(x, x, x) + B u,   y = C x
/// where T and T3 are symmetric multilinear forms (zero when absent).
class FullOrderSystem {
public:
  virtual ~FullOrderSystem() = default;

  virtual std::string name() const = 0;
  virtual Index state_dim() const = 0;
  virtual Index input_dim() const = 0;
  Index output_dim() const { return output_matrix().rows(); }

  virtual const Matrix &linear_operator() const = 0; // n x n
  virtual const Matrix &input_matrix() const = 0;    // n x m
  virtual const Matrix &output_matrix() const = 0;   // p x n

  virtual bool has_quadratic() const { return false; }
  virtual bool has_cubic() const { return false; }
  virtual Vector quadratic_form(const Vector &a, const Vector &b) const {
    (void)b;
    return Vector::Zero(a.size());
  }
  virtual Vector cubic_form(const Vector &a, const Vector &b, const Vector &c) const {
    (void)b;
    (void)c;
    return Vector::Zero(a.size());
  }

  virtual Vector rhs(const Vector &x, const Vector &u) const {
    Vector out = linear_operator() * x;
    if (input_dim() > 0) out.noalias() += input_matrix() * u;
    if (has_quadratic()) out += quadratic_form(x, x);
    if (has_cubic()) out += cubic_form(x, x, x);
    return out;
  }
};

} // namespace nitrom
