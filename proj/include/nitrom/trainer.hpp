#pragma once

// End-to-end training: POD initialization (Galerkin or OpInf tensors),
// optional pre-projection onto leading POD modes, progressive-horizon
// coordinate descent with an optional stability penalty, and packaging.

#include "nitrom/adjoint.hpp"
#include "nitrom/baselines.hpp"
#include "nitrom/optim.hpp"
#include "nitrom/systems.hpp"

#include <string>
#include <vector>

namespace nitrom {

struct PenaltyConfig {
  double weight = 0.0; // 0 disables the penalty
  double t_final = 100.0;
  std::uint64_t seed = 0;
};

struct TrainingConfig {
  std::string benchmark = "toy";
  Index r = 2;
  PolyOrder order = PolyOrder::quadratic;
  std::string init = "pod-galerkin"; // pod-galerkin | pod-opinf
  double lambda = 1e-6;              // OpInf regularization (pod-opinf init)
  OptimOptions optimizer;
  std::string schedule = "joint"; // joint | alternate
  int alternations = 2;
  std::vector<double> horizons; // empty: full data horizon
  PenaltyConfig penalty;
  Index preproject_rank = 0; // 0: off
  int substeps = 10;         // ROM RK4 steps per sample interval
  std::string preset = "ci"; // full-order grid used by pod-galerkin for cgl

  void validate() const {
    if (r < 1) throw ConfigError("config: r must be >= 1");
    if (init != "pod-galerkin" && init != "pod-opinf")
      throw ConfigError("config: init must be pod-galerkin or pod-opinf");
    if (schedule != "joint" && schedule != "alternate")
      throw ConfigError("config: schedule must be joint or alternate");
    if (alternations < 1) throw ConfigError("config: alternations must be >= 1");
    if (!(lambda >= 0.0)) throw ConfigError("config: lambda must be >= 0");
    if (!(penalty.weight >= 0.0)) throw ConfigError("config: penalty weight must be >= 0");
    if (penalty.weight > 0.0 && !(penalty.t_final > 0.0))
      throw ConfigError("config: penalty t_f must be > 0");
    if (preproject_rank < 0) throw ConfigError("config: preproject_rank must be >= 0");
    if (preproject_rank > 0 && preproject_rank < r)
      throw ConfigError("config: preproject_rank must be 0 or >= r");
    if (substeps < 1) throw ConfigError("config: substeps must be >= 1");
    for (std::size_t k = 0; k < horizons.size(); ++k) {
      if (!(horizons[k] > 0.0)) throw ConfigError("config: horizons must be > 0");
      if (k > 0 && !(horizons[k] > horizons[k - 1]))
        throw ConfigError("config: horizons must be strictly increasing");
    }
    optimizer.validate();
  }

  static TrainingConfig defaults_for(const std::string &benchmark) {
    TrainingConfig c;
    c.benchmark = benchmark;
    if (benchmark == "toy") {
      c.optimizer.max_iterations = 500;
    } else if (benchmark == "cgl") {
      c.r = 5;
      c.order = PolyOrder::cubic;
      c.init = "pod-opinf";
      c.lambda = 1e9;
      c.schedule = "alternate";
      c.alternations = 2;
      c.optimizer.max_iterations = 100;
    } else {
      throw ConfigError("unknown benchmark '" + benchmark + "'");
    }
    return c;
  }
};

/// Training data together with the maps needed to interpret it.
struct TrainingData {
  std::vector<Trajectory> trajectories;
  Matrix c; // p x n output map
  Matrix b; // n x m input map, empty when unknown
};

inline double data_horizon(const std::vector<Trajectory> &data) {
  double h = 0.0;
  for (const auto &t : data) h = std::max(h, t.times(t.samples() - 1));
  return h;
}

// ---------------------------------------------------------------------------
// Pre-projection

struct Preprojection {
  Matrix basis; // n x k, empty when off
  TrainingData data;
};

/// Replaces states by their coordinates in the leading k weighted POD modes.
inline Preprojection preproject(const TrainingData &data, Index k) {
  Preprojection out;
  if (k == 0) {
    out.data = data;
    return out;
  }
  const Matrix snaps = weighted_snapshots(data.trajectories);
  Eigen::BDCSVD<Matrix> svd(snaps);
  const Vector sv = svd.singularValues();
  const double tol = std::max(snaps.rows(), snaps.cols()) * sv(0) * 1e-14;
  const Index rank = (sv.array() > tol).count();
  if (k > rank)
    throw ConfigError("preproject: rank " + std::to_string(k) + " exceeds snapshot rank " +
                      std::to_string(rank));
  out.basis = compute_pod(snaps, k).modes;
  const Matrix ut = out.basis.transpose();
  out.data.c = data.c * out.basis;
  if (data.b.size() > 0) out.data.b = ut * data.b;
  for (const auto &t : data.trajectories) {
    Trajectory r = t;
    r.x0 = ut * t.x0;
    if (t.has_states()) r.x = ut * t.x;
    if (t.has_derivatives()) r.dx = ut * t.dx;
    out.data.trajectories.push_back(std::move(r));
  }
  return out;
}

/// Maps bases learned in the pre-projected frame back to the full space.
inline ModelPoint lift(const ModelPoint &x, const Matrix &basis) {
  if (basis.size() == 0) return x;
  ModelPoint out = x;
  out.phi = basis * x.phi;
  out.psi = basis * x.psi;
  return out;
}

// ---------------------------------------------------------------------------
// Initialization

/// Phi = Psi = leading r weighted POD modes; tensors from Galerkin
/// projection of `sys` (optionally via a frame `basis`, for pre-projected
/// data) or from Operator Inference on the data.
inline ModelPoint initialize(const TrainingConfig &cfg, const TrainingData &data,
                             const FullOrderSystem *sys, const Matrix &basis = {}) {
  if (data.trajectories.empty()) throw ConfigError("initialize: no training data");
  const Matrix snaps = weighted_snapshots(data.trajectories);
  if (cfg.r > std::min(snaps.rows(), snaps.cols()))
    throw ConfigError("initialize: r exceeds the snapshot dimensions");
  const PodResult pod = compute_pod(snaps, cfg.r);
  Eigen::BDCSVD<Matrix> svd(snaps);
  const Vector &sv = svd.singularValues();
  if (sv(cfg.r - 1) <= std::max(snaps.rows(), snaps.cols()) * sv(0) * 1e-14)
    throw ConfigError("initialize: r exceeds the snapshot rank");

  ModelPoint x;
  x.phi = pod.modes;
  x.psi = pod.modes;
  if (cfg.init == "pod-galerkin") {
    if (sys == nullptr) throw ConfigError("initialize: pod-galerkin needs the full-order system");
    const Matrix full_modes = basis.size() > 0 ? Matrix(basis * pod.modes) : pod.modes;
    GalerkinResult g = petrov_galerkin_project(*sys, full_modes, full_modes);
    if (g.rom.order != cfg.order)
      throw ConfigError("initialize: config order " + to_string(cfg.order) +
                        " does not match the system (" + to_string(g.rom.order) + ")");
    x.rom = std::move(g.rom);
  } else {
    OpInfResult fit =
        operator_inference(reduce_for_opinf(data.trajectories, pod.modes), cfg.order, cfg.lambda);
    bool forced = false;
    for (const auto &t : data.trajectories) forced = forced || !is_unforced(t.input);
    // impulse data carry no information on B_r; use its projection instead
    if (!forced && data.b.size() > 0) fit.rom.b = pod.modes.transpose() * data.b;
    x.rom = std::move(fit.rom);
  }
  x.validate();
  return x;
}

// ---------------------------------------------------------------------------
// Training

struct TrainingResult {
  ModelPoint initial; // full-space initialization
  ModelPoint point;   // full-space trained model
  Matrix c_r;
  double initial_cost = kInf;
  double final_cost = kInf;
  std::vector<IterationRecord> log;
  std::vector<OptimResult> phases;
  Vector z_lin0; // empty when the penalty is off
  double linear_abscissa = 0.0; // max Re eig(A_r)
  bool unstable = false;        // penalty on, yet A_r still not stable
};

/// Training objective: trajectory cost on samples up to `horizon`, plus the
/// stability penalty on A_r when enabled.
inline HorizonObjective make_objective(const TrainingConfig &cfg, const TrainingData &data,
                                       const Vector &z_lin0) {
  return [&cfg, &data, z_lin0](const ModelPoint &x, bool want_grad, double horizon) {
    Evaluation ev;
    if (x.projection_rcond() < kMinRcond) return ev;
    SimulationOptions so{cfg.substeps, horizon};
    auto [report, grad] = detail::accumulate(x, data.c, data.trajectories, so, want_grad);
    if (report.diverged) return ev;
    double cost = report.total;
    if (cfg.penalty.weight > 0.0) {
      try {
        const PenaltyResult pen =
            stability_penalty(x.rom.a, cfg.penalty.t_final, z_lin0, cfg.penalty.weight);
        cost += pen.value;
        if (grad) grad->a += pen.grad_a;
      } catch (const DivergenceError &) {
        return ev;
      }
    }
    ev.cost = cost;
    ev.gradient = std::move(grad);
    return ev;
  };
}

inline std::vector<Phase> build_schedule(const TrainingConfig &cfg, const TrainingData &data) {
  const double horizon = data_horizon(data.trajectories);
  std::vector<double> horizons = cfg.horizons;
  if (horizons.empty()) horizons.push_back(horizon);
  std::vector<BlockSelector> blocks{BlockSelector::all()};
  int alternations = 1;
  if (cfg.schedule == "alternate") {
    blocks = {BlockSelector::bases(), BlockSelector::tensors()};
    alternations = cfg.alternations;
  }
  return progressive_schedule(horizons, cfg.optimizer, horizon, blocks, alternations);
}

inline TrainingResult train(const TrainingConfig &cfg, const TrainingData &data,
                            const FullOrderSystem *sys = nullptr,
                            std::vector<IterationRecord> *progress = nullptr) {
  cfg.validate();
  if (data.trajectories.empty()) throw ConfigError("train: no training data");
  for (const auto &t : data.trajectories) t.validate();

  const Preprojection pre = preproject(data, cfg.preproject_rank);
  TrainingResult out;
  ModelPoint x0 = initialize(cfg, pre.data, sys, pre.basis);

  if (cfg.penalty.weight > 0.0) {
    SplitMix64 rng(cfg.penalty.seed);
    out.z_lin0 = rng.unit_vector(cfg.r);
  }
  const HorizonObjective objective = make_objective(cfg, pre.data, out.z_lin0);
  const std::vector<Phase> schedule = build_schedule(cfg, pre.data);

  out.initial_cost = objective(x0, false, kInf).cost;
  ScheduleResult sr = coordinate_descent(objective, x0, schedule, progress);
  out.final_cost = objective(sr.point, false, kInf).cost;
  out.log = std::move(sr.log);
  out.phases = std::move(sr.phases);
  out.initial = lift(x0, pre.basis);
  out.point = lift(sr.point, pre.basis);
  out.c_r = data.c * decoder_matrix(pair_of(out.point));
  out.linear_abscissa = spectral_abscissa(out.point.rom.a);
  out.unstable = cfg.penalty.weight > 0.0 && out.linear_abscissa >= 0.0;
  return out;
}

} // namespace nitrom
