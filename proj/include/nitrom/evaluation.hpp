#pragma once

// Normalized testing error e(t) = (1/N_traj) sum_j ||y_j(t) - yhat_j(t)||^2 / alpha_j.

#include "nitrom/dynamics.hpp"
#include "nitrom/parallel.hpp"

#include <vector>

namespace nitrom {

/// Reduced output yhat = C_r z for one trajectory; columns past a blow-up
/// are +inf.
inline Matrix predict_outputs(const ModelPoint &x, const Matrix &c_r, const Trajectory &traj,
                              int substeps) {
  if (c_r.cols() != x.r()) throw DimensionError("predict: C_r columns != r");
  if (traj.x0.size() != x.n()) throw DimensionError("predict: x0 size != n");
  if (input_dim(traj.input) != x.m()) throw DimensionError("predict: input dim != m");
  const FineSolution fine =
      integrate_fine(rom_rhs(x.rom, traj.input), encode(x.psi, traj.x0), traj.times, substeps);
  const Matrix z = fine.at_samples();
  Matrix y = Matrix::Constant(c_r.rows(), traj.samples(), kInf);
  y.leftCols(z.cols()) = c_r * z;
  return y;
}

struct ErrorTrace {
  Vector times;
  Vector e;           // averaged over trajectories
  double mean = 0.0;  // time average of e
  std::vector<Matrix> predictions;
};

inline ErrorTrace error_trace(const ModelPoint &x, const Matrix &c_r,
                              const std::vector<Trajectory> &data, int substeps) {
  if (data.empty()) throw ConfigError("error_trace: no trajectories");
  const Vector &times = data.front().times;
  for (const auto &t : data) {
    if (t.times.size() != times.size() || t.times != times)
      throw DimensionError("error_trace: trajectories must share one time grid");
    if (t.y.rows() != c_r.rows()) throw DimensionError("error_trace: output size != C_r rows");
  }
  ErrorTrace out;
  out.times = times;
  out.predictions.resize(data.size());
  parallel_for(data.size(),
               [&](std::size_t j) { out.predictions[j] = predict_outputs(x, c_r, data[j], substeps); });
  out.e = Vector::Zero(times.size());
  for (std::size_t j = 0; j < data.size(); ++j) {
    const Matrix diff = data[j].y - out.predictions[j];
    for (Index i = 0; i < times.size(); ++i) {
      const double d = diff.col(i).squaredNorm();
      out.e(i) += std::isfinite(d) ? d / data[j].alpha : kInf;
    }
  }
  out.e /= static_cast<double>(data.size());
  out.mean = out.e.mean();
  return out;
}

} // namespace nitrom
