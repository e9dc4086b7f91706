#pragma once

// Input signals, trajectories, fixed-step RK4 integration and the
// encode/decode maps of an oblique projection.

#include "nitrom/model.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

namespace nitrom {

// ---------------------------------------------------------------------------
// Input signals

namespace signal {
struct Zero {
  Index m = 0;
};
/// u(t) = amplitude for t >= start, 0 before.
struct Step {
  Vector amplitude;
  double start = 0.0;
};
/// Zero forcing; the impulse enters as x0 = B * vector.
struct Impulse {
  Vector vector;
};
/// u(t) = amplitude * sin(frequency * t + phase) * direction.
struct Sinusoid {
  double amplitude = 0.0;
  double frequency = 0.0;
  double phase = 0.0;
  Vector direction;
};
/// Piecewise-linear interpolation of sampled values (m x K), held constant
/// outside [times.front(), times.back()].
struct Sampled {
  Vector times;
  Matrix values;
};
} // namespace signal

using InputSignal = std::variant<signal::Zero, signal::Step, signal::Impulse,
                                 signal::Sinusoid, signal::Sampled>;

inline Index input_dim(const InputSignal &s) {
  return std::visit(
      [](const auto &v) -> Index {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, signal::Zero>) return v.m;
        else if constexpr (std::is_same_v<T, signal::Step>) return v.amplitude.size();
        else if constexpr (std::is_same_v<T, signal::Impulse>) return v.vector.size();
        else if constexpr (std::is_same_v<T, signal::Sinusoid>) return v.direction.size();
        else return v.values.rows();
      },
      s);
}

inline Vector input_at(const InputSignal &s, double t) {
  return std::visit(
      [t](const auto &v) -> Vector {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, signal::Zero>) {
          return Vector::Zero(v.m);
        } else if constexpr (std::is_same_v<T, signal::Step>) {
          return t >= v.start ? Vector(v.amplitude) : Vector(Vector::Zero(v.amplitude.size()));
        } else if constexpr (std::is_same_v<T, signal::Impulse>) {
          return Vector::Zero(v.vector.size());
        } else if constexpr (std::is_same_v<T, signal::Sinusoid>) {
          return v.amplitude * std::sin(v.frequency * t + v.phase) * v.direction;
        } else {
          const Index k = v.times.size();
          if (k == 0) return Vector::Zero(v.values.rows());
          if (t <= v.times(0)) return v.values.col(0);
          if (t >= v.times(k - 1)) return v.values.col(k - 1);
          const auto *begin = v.times.data();
          const auto *it = std::upper_bound(begin, begin + k, t);
          const Index hi = it - begin;
          const Index lo = hi - 1;
          const double w = (t - v.times(lo)) / (v.times(hi) - v.times(lo));
          return (1.0 - w) * v.values.col(lo) + w * v.values.col(hi);
        }
      },
      s);
}

/// True when the signal is identically zero (no forcing after t0).
inline bool is_unforced(const InputSignal &s) {
  return std::holds_alternative<signal::Zero>(s) ||
         std::holds_alternative<signal::Impulse>(s);
}

// ---------------------------------------------------------------------------
// Trajectories

/// Sampled full-order data along one run.
struct Trajectory {
  Vector times; // strictly increasing
  Matrix y;     // p x N outputs
  Matrix x;     // n x N states (empty when not recorded)
  Matrix dx;    // n x N state derivatives (empty when not recorded)
  Vector x0;    // state at times(0)
  InputSignal input = signal::Zero{};
  double alpha = 1.0; // normalization weight

  Index samples() const { return times.size(); }
  bool has_states() const { return x.cols() == times.size() && x.rows() > 0; }
  bool has_derivatives() const { return dx.cols() == times.size() && dx.rows() > 0; }

  void validate() const {
    if (times.size() == 0) throw ConfigError("Trajectory: no samples");
    for (Index i = 1; i < times.size(); ++i)
      if (!(times(i) > times(i - 1)))
        throw ConfigError("Trajectory: times must be strictly increasing");
    if (y.cols() != times.size()) throw DimensionError("Trajectory: y columns != samples");
    if (!(alpha > 0.0)) throw ConfigError("Trajectory: alpha must be positive");
    if (x.size() > 0 && x.cols() != times.size())
      throw DimensionError("Trajectory: x columns != samples");
    if (dx.size() > 0 && dx.cols() != times.size())
      throw DimensionError("Trajectory: dx columns != samples");
  }
};

// ---------------------------------------------------------------------------
// Fixed-step RK4

using Rhs = std::function<Vector(double t, const Vector &z)>;

inline Vector rk4_step(const Rhs &f, double t, const Vector &z, double h) {
  const Vector k1 = f(t, z);
  const Vector k2 = f(t + 0.5 * h, z + 0.5 * h * k1);
  const Vector k3 = f(t + 0.5 * h, z + 0.5 * h * k2);
  const Vector k4 = f(t + h, z + h * k3);
  return z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// States on the fine RK4 grid: `substeps` equal steps between consecutive
/// sample times. Column i*substeps is the state at sample i.
struct FineSolution {
  Vector grid;   // sample times the solution was requested on
  Vector times;  // fine grid
  Matrix states; // r x (1 + (N-1)*substeps)
  int substeps = 1;
  double diverged_at = kInf; // time of the first non-finite state

  bool ok() const { return !std::isfinite(diverged_at); }
  Index fine_index(Index sample) const { return sample * substeps; }
  Matrix at_samples() const {
    if (states.cols() == 0) return Matrix(states.rows(), 0);
    const Index n = (states.cols() - 1) / substeps + 1;
    Matrix out(states.rows(), n);
    for (Index i = 0; i < n; ++i) out.col(i) = states.col(i * substeps);
    return out;
  }
};

inline void check_grid(const Vector &t_grid, int substeps) {
  if (substeps < 1) throw ConfigError("integrate: substeps must be >= 1");
  if (t_grid.size() == 0) throw ConfigError("integrate: empty time grid");
  for (Index i = 1; i < t_grid.size(); ++i)
    if (!(t_grid(i) > t_grid(i - 1)))
      throw ConfigError("integrate: time grid must be strictly increasing");
}

/// Integrates over the whole grid without throwing on blow-up; the fine
/// solution is truncated at the last finite state and `diverged_at` is set.
inline FineSolution integrate_fine(const Rhs &f, const Vector &z0,
                                   const Vector &t_grid, int substeps) {
  check_grid(t_grid, substeps);
  const Index intervals = t_grid.size() - 1;
  const Index total = 1 + intervals * substeps;
  FineSolution sol;
  sol.grid = t_grid;
  sol.substeps = substeps;
  sol.times.resize(total);
  sol.states.resize(z0.size(), total);
  sol.times(0) = t_grid(0);
  sol.states.col(0) = z0;
  if (!z0.allFinite()) {
    sol.diverged_at = t_grid(0);
    sol.states.conservativeResize(Eigen::NoChange, 0);
    sol.times.conservativeResize(0);
    return sol;
  }
  Vector z = z0;
  Index col = 1;
  for (Index i = 0; i < intervals; ++i) {
    const double t0 = t_grid(i);
    const double h = (t_grid(i + 1) - t0) / substeps;
    for (int s = 0; s < substeps; ++s) {
      const double t = t0 + s * h;
      z = rk4_step(f, t, z, h);
      const double tn = (s + 1 == substeps) ? t_grid(i + 1) : t + h;
      if (!z.allFinite()) {
        sol.diverged_at = tn;
        sol.states.conservativeResize(Eigen::NoChange, col);
        sol.times.conservativeResize(col);
        return sol;
      }
      sol.times(col) = tn;
      sol.states.col(col) = z;
      ++col;
    }
  }
  return sol;
}

/// Classical RK4 with fixed step (t_{i+1} - t_i)/substeps. Returns the state at
/// every grid point including t_0; throws DivergenceError on blow-up.
inline Matrix integrate(const Rhs &f, const Vector &z0, const Vector &t_grid,
                        int substeps) {
  FineSolution sol = integrate_fine(f, z0, t_grid, substeps);
  if (!sol.ok())
    throw DivergenceError("integrate: non-finite state at t = " +
                              std::to_string(sol.diverged_at),
                          sol.diverged_at);
  return sol.at_samples();
}

// ---------------------------------------------------------------------------
// Oblique projection maps

struct ProjectionPair {
  Matrix phi;
  Matrix psi;
};

inline ProjectionPair pair_of(const ModelPoint &x) { return {x.phi, x.psi}; }

/// Psi^T x0.
inline Vector encode(const Matrix &psi, const Vector &x0) {
  if (x0.size() != psi.rows()) throw DimensionError("encode: x0 size != n");
  return psi.transpose() * x0;
}

/// D = Phi (Psi^T Phi)^{-1}.
inline Matrix decoder_matrix(const ProjectionPair &pair) {
  check_shape("decoder_matrix", pair.psi.rows(), pair.psi.cols(),
              pair.phi.rows(), pair.phi.cols());
  const Matrix m = pair.psi.transpose() * pair.phi;
  if (rcond(m) < kMinRcond) throw SingularProjection("Psi^T Phi is singular");
  return pair.phi * m.partialPivLu().inverse();
}

inline Vector decode(const ProjectionPair &pair, const Vector &z) {
  if (z.size() != pair.phi.cols()) throw DimensionError("decode: z size != r");
  return decoder_matrix(pair) * z;
}

/// P = Phi (Psi^T Phi)^{-1} Psi^T.
inline Matrix projector(const ProjectionPair &pair) {
  return decoder_matrix(pair) * pair.psi.transpose();
}

// ---------------------------------------------------------------------------
// Reduced-order simulation

struct RomSimulation {
  Matrix y_hat;      // p x (samples reached)
  FineSolution fine; // reduced state on the RK4 grid
  bool ok() const { return fine.ok(); }
};

inline Rhs rom_rhs(const PolynomialROM &rom, const InputSignal &input) {
  return [&rom, &input](double t, const Vector &z) {
    return eval_rom_rhs(rom, z, input_at(input, t));
  };
}

/// encode -> integrate -> decode -> C. Does not throw on divergence: the
/// returned fine solution stops at the blow-up and y_hat only covers samples
/// reached before it.
inline RomSimulation simulate_rom_unchecked(const PolynomialROM &rom,
                                            const ProjectionPair &pair,
                                            const Matrix &c, const Vector &x0,
                                            const InputSignal &input,
                                            const Vector &t_grid, int substeps) {
  if (c.cols() != pair.phi.rows()) throw DimensionError("simulate_rom: C cols != n");
  if (input_dim(input) != rom.m()) throw DimensionError("simulate_rom: input dim != m");
  const Matrix c_r = c * decoder_matrix(pair);
  RomSimulation sim;
  sim.fine = integrate_fine(rom_rhs(rom, input), encode(pair.psi, x0), t_grid, substeps);
  const Index reached =
      sim.fine.states.cols() == 0 ? 0 : (sim.fine.states.cols() - 1) / substeps + 1;
  sim.y_hat.resize(c.rows(), reached);
  for (Index i = 0; i < reached; ++i)
    sim.y_hat.col(i) = c_r * sim.fine.states.col(i * substeps);
  return sim;
}

/// Throws DivergenceError when the reduced model blows up.
inline RomSimulation simulate_rom(const PolynomialROM &rom,
                                  const ProjectionPair &pair, const Matrix &c,
                                  const Vector &x0, const InputSignal &input,
                                  const Vector &t_grid, int substeps) {
  RomSimulation sim =
      simulate_rom_unchecked(rom, pair, c, x0, input, t_grid, substeps);
  if (!sim.ok())
    throw DivergenceError("simulate_rom: reduced model diverged at t = " +
                              std::to_string(sim.fine.diverged_at),
                          sim.fine.diverged_at);
  return sim;
}

} // namespace nitrom
