#pragma once

// Trajectory-mismatch cost, reduced-order adjoint and closed-form Euclidean
// gradients, plus the linear stability-promoting penalty.
//
// The adjoint is the exact discrete adjoint of the forward RK4 scheme: the
// multiplier mu(t) = sum_{i : t_i >= t} lambda_i(t) is swept backward through
// the four RK4 stages of every fine step and receives the injection
// lambda_i(t_i) = 2 (Phi^T Psi)^{-1} Phi^T C^T e(t_i) / alpha at each sample.
// Gradients therefore agree with finite differences of the computed cost to
// round-off, and tend to the time integrals -int lambda z^T dt etc. as the
// step size goes to zero.

#include "nitrom/dynamics.hpp"
#include "nitrom/parallel.hpp"

#include <optional>
#include <string>
#include <vector>

namespace nitrom {

struct SimulationOptions {
  int substeps = 10;
  /// Only samples with t_i <= horizon enter the cost.
  double horizon = kInf;
};

struct CostReport {
  double total = 0.0;
  std::vector<double> per_trajectory; // weighted: sum_i ||e_i||^2 / alpha_j
  std::vector<Matrix> errors;         // p x (samples used), unweighted
  bool diverged = false;
  std::string diagnostic;
};

/// Number of leading samples with t_i <= horizon.
inline Index samples_within(const Trajectory &traj, double horizon) {
  Index k = 0;
  const double tol = 1e-12 * std::max(1.0, std::abs(horizon));
  while (k < traj.times.size() && traj.times(k) <= horizon + tol) ++k;
  return k;
}

namespace detail {

struct TrajectoryResult {
  double cost = 0.0;
  Matrix errors;
  bool diverged = false;
  double diverged_at = kInf;
  std::optional<EuclideanGradient> gradient;
};

inline void check_data(const ModelPoint &x, const Matrix &c, const Trajectory &traj) {
  if (c.cols() != x.n()) throw DimensionError("cost: C columns != n");
  if (traj.y.rows() != c.rows()) throw DimensionError("cost: data outputs != C rows");
  if (traj.x0.size() != x.n()) throw DimensionError("cost: x0 size != n");
  if (input_dim(traj.input) != x.m()) throw DimensionError("cost: input dim != m");
}

} // namespace detail

/// Parameter-gradient contributions and the cumulative multiplier of one
/// backward sweep. The tensor blocks already carry the minus sign, i.e.
/// a = -sum lambda z^T (discrete), which is dJ/dA_r.
struct AdjointSweep {
  Matrix mu; // r x (fine points), mu(:, k) = -dJ/dz_k
  Matrix a, h, b, g;
};

/// Backward sweep of mu over the fine grid of `fine`, adding
/// `injections.col(i)` when the sweep reaches fine index `sample_index[i]`.
/// Parameter gradients are accumulated stage by stage.
inline AdjointSweep solve_adjoint_cumulative(const PolynomialROM &rom,
                                             const FineSolution &fine,
                                             const InputSignal &input,
                                             const std::vector<Index> &sample_index,
                                             const Matrix &injections) {
  const Index r = rom.r();
  const Index points = fine.states.cols();
  if (fine.states.rows() != r) throw DimensionError("adjoint: state rows != r");
  if (injections.rows() != r ||
      injections.cols() != static_cast<Index>(sample_index.size()))
    throw DimensionError("adjoint: injections shape");
  if (points == 0) throw DimensionError("adjoint: empty forward solution");

  const bool quad = has_quadratic(rom.order);
  const bool cubic = has_cubic(rom.order);
  const bool forced = rom.m() > 0 && !is_unforced(input);

  AdjointSweep out;
  out.mu = Matrix::Zero(r, points);
  out.a = Matrix::Zero(r, r);
  out.h = Matrix::Zero(r, r * r);
  out.b = Matrix::Zero(r, rom.m());
  out.g = Matrix::Zero(r, cubic ? r * r * r : 0);

  // injections sorted by fine index (descending walk)
  std::vector<Index> inject_at(points, -1);
  for (std::size_t i = 0; i < sample_index.size(); ++i) {
    const Index k = sample_index[i];
    if (k < 0 || k >= points) throw DimensionError("adjoint: sample index outside grid");
    if (inject_at[k] >= 0) {
      // two samples on one grid point: merge
      out.mu.col(k) += injections.col(static_cast<Index>(i));
    } else {
      inject_at[k] = static_cast<Index>(i);
    }
  }

  auto accumulate = [&](const Vector &g, const Vector &s, double t) {
    out.a.noalias() -= g * s.transpose();
    if (quad) out.h.noalias() -= g * kron2(s).transpose();
    if (cubic) out.g.noalias() -= g * kron3(s).transpose();
    if (forced) out.b.noalias() -= g * input_at(input, t).transpose();
  };
  auto f = [&](double t, const Vector &z) { return eval_rom_rhs(rom, z, input_at(input, t)); };

  Vector mu = Vector::Zero(r);
  if (inject_at[points - 1] >= 0) mu += injections.col(inject_at[points - 1]);
  mu += out.mu.col(points - 1);
  out.mu.col(points - 1) = mu;

  const int substeps = fine.substeps;
  for (Index k = points - 2; k >= 0; --k) {
    const Index interval = k / substeps;
    const int s = static_cast<int>(k % substeps);
    const double t0 = fine.grid(interval);
    const double h = (fine.grid(interval + 1) - t0) / substeps;
    const double t = t0 + s * h;
    const Vector z = fine.states.col(k);

    // recompute forward stages
    const Vector k1 = f(t, z);
    const Vector s2 = z + 0.5 * h * k1;
    const Vector k2 = f(t + 0.5 * h, s2);
    const Vector s3 = z + 0.5 * h * k2;
    const Vector k3 = f(t + 0.5 * h, s3);
    const Vector s4 = z + h * k3;

    Vector g4 = (h / 6.0) * mu;
    Vector g3 = (h / 3.0) * mu;
    Vector g2 = (h / 3.0) * mu;
    Vector g1 = (h / 6.0) * mu;

    const Vector q4 = eval_rom_jacobian(rom, s4).transpose() * g4;
    accumulate(g4, s4, t + h);
    g3 += h * q4;
    const Vector q3 = eval_rom_jacobian(rom, s3).transpose() * g3;
    accumulate(g3, s3, t + 0.5 * h);
    g2 += 0.5 * h * q3;
    const Vector q2 = eval_rom_jacobian(rom, s2).transpose() * g2;
    accumulate(g2, s2, t + 0.5 * h);
    g1 += 0.5 * h * q2;
    const Vector q1 = eval_rom_jacobian(rom, z).transpose() * g1;
    accumulate(g1, z, t);

    mu += q4 + q3 + q2 + q1;
    if (!mu.allFinite())
      throw DivergenceError("adjoint: non-finite multiplier", fine.times(k));
    if (inject_at[k] >= 0) mu += injections.col(inject_at[k]);
    mu += out.mu.col(k); // merged duplicates
    out.mu.col(k) = mu;
  }
  if (quad) out.h = symmetrize_quadratic(out.h);
  if (cubic) out.g = symmetrize_cubic(out.g);
  return out;
}

namespace detail {

inline TrajectoryResult trajectory_cost(const ModelPoint &x, const Matrix &c,
                                        const Trajectory &traj,
                                        const SimulationOptions &opts,
                                        bool want_gradient) {
  check_data(x, c, traj);
  TrajectoryResult res;
  const Index used = samples_within(traj, opts.horizon);
  if (used == 0) {
    res.errors = Matrix::Zero(c.rows(), 0);
    if (want_gradient) res.gradient = zero_tangent(x);
    return res;
  }
  const ProjectionPair pair = pair_of(x);
  const Matrix d = decoder_matrix(pair);
  const Matrix c_r = c * d;
  const Vector grid = traj.times.head(used);
  RomSimulation sim =
      simulate_rom_unchecked(x.rom, pair, c, traj.x0, traj.input, grid, opts.substeps);
  if (!sim.ok()) {
    res.diverged = true;
    res.diverged_at = sim.fine.diverged_at;
    res.cost = kInf;
    return res;
  }
  res.errors = traj.y.leftCols(used) - sim.y_hat;
  const double w = 1.0 / traj.alpha;
  res.cost = w * res.errors.squaredNorm();
  if (!want_gradient) return res;

  const Matrix z = sim.fine.at_samples(); // r x used
  const Matrix &e = res.errors;           // p x used
  const Matrix m_inv = (x.psi.transpose() * x.phi).partialPivLu().inverse();

  std::vector<Index> idx(static_cast<std::size_t>(used));
  for (Index i = 0; i < used; ++i) idx[static_cast<std::size_t>(i)] = i * opts.substeps;
  const Matrix injections = (2.0 * w) * (c_r.transpose() * e);
  AdjointSweep sweep =
      solve_adjoint_cumulative(x.rom, sim.fine, traj.input, idx, injections);

  EuclideanGradient grad;
  // dJ/dPhi = -2 (I - Psi D^T) C^T E Z^T (Psi^T Phi)^{-T}
  const Matrix s = c.transpose() * (e * z.transpose()); // n x r
  grad.phi = (-2.0 * w) * (s - x.psi * (d.transpose() * s)) * m_inv.transpose();
  // dJ/dPsi = 2 D Z E^T C D - x0 mu(t0)^T
  grad.psi = (2.0 * w) * d * (z * e.transpose()) * c_r -
             traj.x0 * sweep.mu.col(0).transpose();
  grad.a = std::move(sweep.a);
  grad.h = std::move(sweep.h);
  grad.b = std::move(sweep.b);
  grad.g = std::move(sweep.g);
  if (!grad.all_finite())
    throw DivergenceError("gradient: non-finite entries", traj.times(used - 1));
  res.gradient = std::move(grad);
  return res;
}

inline std::pair<CostReport, std::optional<EuclideanGradient>>
accumulate(const ModelPoint &x, const Matrix &c, const std::vector<Trajectory> &data,
           const SimulationOptions &opts, bool want_gradient) {
  std::vector<TrajectoryResult> parts(data.size());
  parallel_for(data.size(), [&](std::size_t j) {
    parts[j] = trajectory_cost(x, c, data[j], opts, want_gradient);
  });
  CostReport report;
  std::optional<EuclideanGradient> grad;
  if (want_gradient) grad = zero_tangent(x);
  for (std::size_t j = 0; j < parts.size(); ++j) {
    auto &p = parts[j];
    report.per_trajectory.push_back(p.cost);
    report.errors.push_back(std::move(p.errors));
    if (p.diverged) {
      if (!report.diverged)
        report.diagnostic = "trajectory " + std::to_string(j) +
                            " diverged at t = " + std::to_string(p.diverged_at);
      report.diverged = true;
    } else {
      report.total += p.cost;
      if (grad) *grad += *p.gradient;
    }
  }
  if (report.diverged) {
    report.total = kInf;
    grad.reset();
  }
  return {std::move(report), std::move(grad)};
}

} // namespace detail

/// J = sum_j alpha_j^{-1} sum_{t_i <= horizon} ||y_j(t_i) - yhat_j(t_i)||^2.
/// A diverging reduced model yields total = +inf and a diagnostic.
inline CostReport evaluate_cost(const ModelPoint &x, const Matrix &c,
                                const std::vector<Trajectory> &data,
                                const SimulationOptions &opts = {}) {
  return detail::accumulate(x, c, data, opts, false).first;
}

/// Cost and Euclidean gradient with respect to every raw block. No gradient
/// is returned when the forward model diverges.
inline std::pair<CostReport, std::optional<EuclideanGradient>>
euclidean_gradient(const ModelPoint &x, const Matrix &c,
                   const std::vector<Trajectory> &data,
                   const SimulationOptions &opts = {}) {
  return detail::accumulate(x, c, data, opts, true);
}

// ---------------------------------------------------------------------------
// Stability-promoting penalty mu_pen * ||z_lin(t_f)||^2 with dz_lin/dt = A z_lin.

struct PenaltyResult {
  double value = 0.0;
  Matrix grad_a; // d value / d A_r
};

/// `max_step` bounds the RK4 step used for the linear flow.
inline PenaltyResult stability_penalty(const Matrix &a, double t_f,
                                       const Vector &z_lin0, double weight,
                                       double max_step = 0.05) {
  const Index r = a.rows();
  check_shape("stability_penalty", a.rows(), a.cols(), r, r);
  if (z_lin0.size() != r) throw DimensionError("stability_penalty: z_lin0 size != r");
  if (!(t_f > 0.0)) throw ConfigError("stability_penalty: t_f must be positive");
  if (weight < 0.0) throw ConfigError("stability_penalty: weight must be >= 0");
  const Index steps = std::max<Index>(1, static_cast<Index>(std::ceil(t_f / max_step - 1e-9)));
  const double h = t_f / static_cast<double>(steps);

  // one RK4 step of a linear system is multiplication by the stage polynomial
  Matrix states(r, steps + 1);
  states.col(0) = z_lin0;
  for (Index k = 0; k < steps; ++k) {
    const Vector z = states.col(k);
    const Vector k1 = a * z;
    const Vector k2 = a * (z + 0.5 * h * k1);
    const Vector k3 = a * (z + 0.5 * h * k2);
    const Vector k4 = a * (z + h * k3);
    states.col(k + 1) = z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!states.col(k + 1).allFinite())
      throw DivergenceError("stability_penalty: linear flow overflowed", h * (k + 1));
  }
  PenaltyResult out;
  out.value = weight * states.col(steps).squaredNorm();
  if (!std::isfinite(out.value))
    throw DivergenceError("stability_penalty: value overflowed", t_f);
  out.grad_a = Matrix::Zero(r, r);
  Vector sens = 2.0 * weight * states.col(steps); // d value / d z_N
  const Matrix at = a.transpose();
  for (Index k = steps - 1; k >= 0; --k) {
    const Vector z = states.col(k);
    const Vector k1 = a * z;
    const Vector s2 = z + 0.5 * h * k1;
    const Vector k2 = a * s2;
    const Vector s3 = z + 0.5 * h * k2;
    const Vector k3 = a * s3;
    const Vector s4 = z + h * k3;
    Vector g4 = (h / 6.0) * sens, g3 = (h / 3.0) * sens, g2 = (h / 3.0) * sens,
           g1 = (h / 6.0) * sens;
    out.grad_a.noalias() += g4 * s4.transpose();
    const Vector q4 = at * g4;
    g3 += h * q4;
    out.grad_a.noalias() += g3 * s3.transpose();
    const Vector q3 = at * g3;
    g2 += 0.5 * h * q3;
    out.grad_a.noalias() += g2 * s2.transpose();
    const Vector q2 = at * g2;
    g1 += 0.5 * h * q2;
    out.grad_a.noalias() += g1 * z.transpose();
    const Vector q1 = at * g1;
    sens += q4 + q3 + q2 + q1;
  }
  if (!out.grad_a.allFinite())
    throw DivergenceError("stability_penalty: gradient overflowed", 0.0);
  return out;
}

} // namespace nitrom
