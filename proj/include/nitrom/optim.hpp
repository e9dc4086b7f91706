#pragma once

// Riemannian steepest descent / nonlinear conjugate gradient on the product
// manifold, coordinate-descent phases and progressive-horizon schedules.

#include "nitrom/model.hpp"

#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace nitrom {

struct OptimOptions {
  int max_iterations = 100;
  double gradient_tolerance = 1e-6;
  double initial_step = 1.0;
  double backtracking = 0.5;         // step shrink factor in (0, 1)
  double sufficient_decrease = 1e-4; // Armijo constant in (0, 1)
  int max_backtracks = 40;
  int cg_restart_period = 50;
  bool conjugate = true; // false: steepest descent
  int verbosity = 0;

  void validate() const {
    if (max_iterations < 0) throw ConfigError("OptimOptions: max_iterations < 0");
    if (!(gradient_tolerance > 0.0)) throw ConfigError("OptimOptions: tolerance must be > 0");
    if (!(initial_step > 0.0)) throw ConfigError("OptimOptions: initial_step must be > 0");
    if (!(backtracking > 0.0 && backtracking < 1.0))
      throw ConfigError("OptimOptions: backtracking factor must lie in (0,1)");
    if (!(sufficient_decrease > 0.0 && sufficient_decrease < 1.0))
      throw ConfigError("OptimOptions: sufficient-decrease constant must lie in (0,1)");
    if (max_backtracks < 1) throw ConfigError("OptimOptions: max_backtracks < 1");
    if (cg_restart_period < 1) throw ConfigError("OptimOptions: cg_restart_period < 1");
  }
};

/// Objective value and (when requested) Euclidean gradient. A non-finite cost
/// marks an infeasible point; the gradient may then be absent.
struct Evaluation {
  double cost = kInf;
  std::optional<TangentVector> gradient;
};

using Objective = std::function<Evaluation(const ModelPoint &, bool want_gradient)>;

struct IterationRecord {
  int iteration = 0;
  double cost = 0.0;
  double grad_norm = 0.0;
  double step_size = 0.0;
  int phase = 0;
};

enum class OptimStatus { converged, max_iterations, line_search_failed };

inline const char *to_string(OptimStatus s) {
  switch (s) {
  case OptimStatus::converged: return "converged";
  case OptimStatus::max_iterations: return "max_iterations";
  case OptimStatus::line_search_failed: return "line_search_failed";
  }
  return "?";
}

struct OptimResult {
  ModelPoint point;
  double cost = kInf;
  double grad_norm = kInf;
  int iterations = 0;
  OptimStatus status = OptimStatus::max_iterations;
  std::vector<IterationRecord> log;
};

inline void write_log_csv(std::ostream &os, const std::vector<IterationRecord> &log) {
  os << "iteration,cost,grad_norm,step_size,phase\n";
  os.precision(17);
  for (const auto &rec : log)
    os << rec.iteration << ',' << rec.cost << ',' << rec.grad_norm << ','
       << rec.step_size << ',' << rec.phase << '\n';
}

namespace detail {

inline bool admissible(const ModelPoint &x) {
  return x.projection_rcond() >= kMinRcond;
}

} // namespace detail

/// Polak-Ribiere+ conjugate gradient with Armijo backtracking. Blocks not
/// enabled in `selector` are never touched. Every accepted step satisfies
/// J(next) <= J(x) + c * alpha * <grad, d>.
inline OptimResult riemannian_cg(const Objective &objective, const ModelPoint &x0,
                                 const OptimOptions &opts,
                                 const BlockSelector &selector, int phase = 0) {
  opts.validate();
  if (!selector.any()) throw ConfigError("riemannian_cg: no parameter block enabled");

  OptimResult res;
  res.point = x0;
  Evaluation ev = objective(x0, true);
  if (!std::isfinite(ev.cost) || !ev.gradient || !ev.gradient->all_finite())
    throw OptimizerError("riemannian_cg: non-finite cost or gradient at the start point");

  ModelPoint &x = res.point;
  double cost = ev.cost;
  TangentVector grad = project_tangent(x, *ev.gradient, selector);
  double gnorm2 = product_inner(x, grad, grad);
  TangentVector dir = -grad;
  double step = opts.initial_step;
  res.log.push_back({0, cost, std::sqrt(gnorm2), 0.0, phase});

  int since_restart = 0;
  res.status = OptimStatus::max_iterations;
  for (int it = 1; it <= opts.max_iterations; ++it) {
    if (std::sqrt(gnorm2) <= opts.gradient_tolerance) {
      res.status = OptimStatus::converged;
      break;
    }
    double slope = product_inner(x, grad, dir);
    if (!(slope < 0.0)) {
      dir = -grad;
      slope = -gnorm2;
    }

    bool steepest = slope == -gnorm2;
    std::optional<ModelPoint> accepted;
    double alpha = step;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      alpha = attempt == 0 ? step : opts.initial_step;
      for (int bt = 0; bt < opts.max_backtracks; ++bt, alpha *= opts.backtracking) {
        ModelPoint trial;
        try {
          trial = retract(x, alpha * dir);
        } catch (const DegenerateRetraction &) {
          continue;
        }
        if (!detail::admissible(trial)) continue;
        const double c = objective(trial, false).cost;
        if (std::isfinite(c) && c <= cost + opts.sufficient_decrease * alpha * slope) {
          accepted = std::move(trial);
          break;
        }
      }
      if (!accepted) {
        if (steepest) break;
        dir = -grad; // fall back to steepest descent once
        slope = -gnorm2;
        steepest = true;
      }
    }
    if (!accepted) {
      res.status = OptimStatus::line_search_failed;
      break;
    }

    Evaluation next = objective(*accepted, true);
    if (!next.gradient || !next.gradient->all_finite())
      throw OptimizerError("riemannian_cg: gradient unavailable at an accepted point");
    const TangentVector new_grad = project_tangent(*accepted, *next.gradient, selector);
    const double new_gnorm2 = product_inner(*accepted, new_grad, new_grad);

    ++since_restart;
    TangentVector new_dir = -new_grad;
    if (opts.conjugate && since_restart < opts.cg_restart_period) {
      const TangentVector old_grad = transport(x, *accepted, grad);
      const TangentVector old_dir = transport(x, *accepted, dir);
      const double beta =
          std::max(0.0, (new_gnorm2 - product_inner(*accepted, new_grad, old_grad)) / gnorm2);
      new_dir += beta * old_dir;
    } else {
      since_restart = 0;
    }

    x = std::move(*accepted);
    cost = next.cost;
    grad = new_grad;
    gnorm2 = new_gnorm2;
    dir = std::move(new_dir);
    step = 2.0 * alpha;
    res.iterations = it;
    res.log.push_back({it, cost, std::sqrt(gnorm2), alpha, phase});
  }
  if (res.status == OptimStatus::max_iterations && std::sqrt(gnorm2) <= opts.gradient_tolerance)
    res.status = OptimStatus::converged;
  res.cost = cost;
  res.grad_norm = std::sqrt(gnorm2);
  return res;
}

// ---------------------------------------------------------------------------
// Schedules

/// One optimizer run over a subset of blocks on samples with t <= horizon.
struct Phase {
  BlockSelector blocks;
  OptimOptions options;
  double horizon = kInf;
};

/// Objective restricted to a forecasting horizon.
using HorizonObjective =
    std::function<Evaluation(const ModelPoint &, bool want_gradient, double horizon)>;

struct ScheduleResult {
  ModelPoint point;
  std::vector<IterationRecord> log;
  std::vector<OptimResult> phases; // per-phase summaries (points cleared)
};

/// Runs `riemannian_cg` phase by phase, feeding each result into the next.
/// Completed phase logs are also appended to `progress` when given, so a
/// caller still has them if a later phase throws.
inline ScheduleResult coordinate_descent(const HorizonObjective &objective,
                                         const ModelPoint &x0,
                                         const std::vector<Phase> &schedule,
                                         std::vector<IterationRecord> *progress = nullptr) {
  if (schedule.empty()) throw ConfigError("coordinate_descent: empty schedule");
  for (const auto &ph : schedule)
    if (!ph.blocks.any()) throw ConfigError("coordinate_descent: phase with no enabled block");
  ScheduleResult out;
  out.point = x0;
  for (std::size_t k = 0; k < schedule.size(); ++k) {
    const Phase &ph = schedule[k];
    Objective bound = [&objective, h = ph.horizon](const ModelPoint &x, bool g) {
      return objective(x, g, h);
    };
    OptimResult r = riemannian_cg(bound, out.point, ph.options, ph.blocks, static_cast<int>(k));
    out.log.insert(out.log.end(), r.log.begin(), r.log.end());
    if (progress) progress->insert(progress->end(), r.log.begin(), r.log.end());
    out.point = std::move(r.point);
    r.point = ModelPoint{};
    out.phases.push_back(std::move(r));
  }
  return out;
}

/// Expands strictly increasing horizons into phases: at each horizon the
/// `block_phases` are run in order, `alternations` times.
inline std::vector<Phase> progressive_schedule(const std::vector<double> &horizons,
                                               const OptimOptions &base,
                                               double data_horizon,
                                               const std::vector<BlockSelector> &block_phases =
                                                   {BlockSelector::all()},
                                               int alternations = 1) {
  if (horizons.empty()) throw ConfigError("progressive_schedule: no horizons");
  if (block_phases.empty()) throw ConfigError("progressive_schedule: no block phases");
  if (alternations < 1) throw ConfigError("progressive_schedule: alternations < 1");
  for (std::size_t k = 0; k < horizons.size(); ++k) {
    if (!(horizons[k] > 0.0)) throw ConfigError("progressive_schedule: horizon must be > 0");
    if (k > 0 && !(horizons[k] > horizons[k - 1]))
      throw ConfigError("progressive_schedule: horizons must be strictly increasing");
    if (horizons[k] > data_horizon * (1.0 + 1e-12))
      throw ConfigError("progressive_schedule: horizon exceeds the available data");
  }
  std::vector<Phase> out;
  for (double h : horizons)
    for (int a = 0; a < alternations; ++a)
      for (const auto &sel : block_phases) {
        if (!sel.any()) throw ConfigError("progressive_schedule: empty block selector");
        out.push_back({sel, base, h});
      }
  return out;
}

} // namespace nitrom
