#pragma once

// Benchmark full-order systems (three-state toy model, discretized complex
// Ginzburg-Landau equation) and their training/testing data protocols.

#include "nitrom/dynamics.hpp"
#include "nitrom/full_order.hpp"

#include <Eigen/Sparse>

#include <complex>
#include <memory>
#include <string>
#include <vector>

namespace nitrom {

// ---------------------------------------------------------------------------
// Toy model
//   x1' = -x1 + 20 x1 x3 + u
//   x2' = -2 x2 + 20 x2 x3 + u
//   x3' = -5 x3 + u
//   y   = x1 + x2 + x3

class ToySystem final : public FullOrderSystem {
public:
  ToySystem() {
    a_ = Matrix::Zero(3, 3);
    a_.diagonal() << -1.0, -2.0, -5.0;
    b_ = Matrix::Ones(3, 1);
    c_ = Matrix::Ones(1, 3);
  }

  std::string name() const override { return "toy"; }
  Index state_dim() const override { return 3; }
  Index input_dim() const override { return 1; }
  const Matrix &linear_operator() const override { return a_; }
  const Matrix &input_matrix() const override { return b_; }
  const Matrix &output_matrix() const override { return c_; }
  bool has_quadratic() const override { return true; }

  /// Symmetric bilinear form with T(x, x) = (20 x1 x3, 20 x2 x3, 0).
  Vector quadratic_form(const Vector &p, const Vector &q) const override {
    if (p.size() != 3 || q.size() != 3) throw DimensionError("toy: state size != 3");
    Vector out(3);
    out << 10.0 * (p(0) * q(2) + p(2) * q(0)), 10.0 * (p(1) * q(2) + p(2) * q(1)), 0.0;
    return out;
  }

  Vector rhs(const Vector &x, const Vector &u) const override {
    if (x.size() != 3 || u.size() != 1) throw DimensionError("toy_rhs: bad shapes");
    Vector out(3);
    out << -x(0) + 20.0 * x(0) * x(2) + u(0), -2.0 * x(1) + 20.0 * x(1) * x(2) + u(0),
        -5.0 * x(2) + u(0);
    return out;
  }

  /// Forced steady state for a constant input u < 0.25.
  static Vector steady_state(double u) {
    Vector x(3);
    x << u / (1.0 - 4.0 * u), u / (2.0 - 4.0 * u), u / 5.0;
    return x;
  }

private:
  Matrix a_, b_, c_;
};

inline Vector toy_rhs(const Vector &x, double u) {
  static const ToySystem sys;
  return sys.rhs(x, Vector::Constant(1, u));
}

// ---------------------------------------------------------------------------
// Complex Ginzburg-Landau equation
//   q_t = (-nu d_x + gamma d_xx + mu(x)) q - a |q|^2 q
// on interior nodes of (-L, L) with homogeneous Dirichlet ends, written in
// real form [Re q; Im q].

struct CglParameters {
  Index nodes = 220;
  double half_width = 40.0;
  double a = 0.1;
  std::complex<double> nu{2.0, 0.4};
  std::complex<double> gamma{1.0, -1.0};
  double mu0 = 0.38;
  double mu2 = -0.01;
  double s = 1.6;

  /// Branch-I location -sqrt(-2 (mu0 - 0.2^2) / mu2).
  double branch_location() const { return -std::sqrt(-2.0 * (mu0 - 0.04) / mu2); }
  double spacing() const { return 2.0 * half_width / static_cast<double>(nodes + 1); }
  double node(Index k) const { return -half_width + spacing() * static_cast<double>(k + 1); }
  double mu(double x) const { return (mu0 - 0.04) + mu2 * x * x / 2.0; }

  static CglParameters full() { return {}; }
  static CglParameters ci() {
    CglParameters p;
    p.nodes = 128;
    p.half_width = 20.0;
    return p;
  }
};

class CglSystem final : public FullOrderSystem {
public:
  explicit CglSystem(CglParameters p = {}) : p_(p) {
    const Index nx = p.nodes;
    if (nx < 16) throw ConfigError("build_cgl: need at least 16 nodes");
    if (!(p.half_width > 2.0 * std::abs(p.branch_location())))
      throw ConfigError("build_cgl: half-width must exceed twice the branch location");
    const double dx = p.spacing();
    Eigen::MatrixXcd lin = Eigen::MatrixXcd::Zero(nx, nx);
    for (Index k = 0; k < nx; ++k) {
      lin(k, k) = p.mu(p.node(k)) - 2.0 * p.gamma / (dx * dx);
      if (k > 0) lin(k, k - 1) = p.nu / (2.0 * dx) + p.gamma / (dx * dx);
      if (k + 1 < nx) lin(k, k + 1) = -p.nu / (2.0 * dx) + p.gamma / (dx * dx);
    }
    a_.resize(2 * nx, 2 * nx);
    a_ << lin.real(), -lin.imag(), lin.imag(), lin.real();
    complex_ = lin;
    sparse_a_ = a_.sparseView();

    Vector gb(nx), gc(nx);
    const double xb = p.branch_location();
    for (Index k = 0; k < nx; ++k) {
      const double x = p.node(k);
      gb(k) = std::exp(-std::pow((x - xb) / p.s, 2));
      gc(k) = std::exp(-std::pow((x + xb) / p.s, 2));
    }
    gb /= gb.norm();
    b_ = Matrix::Zero(2 * nx, 2);
    b_.block(0, 0, nx, 1) = gb;
    b_.block(nx, 1, nx, 1) = gb;
    c_ = Matrix::Zero(2, 2 * nx);
    c_.block(0, 0, 1, nx) = gc.transpose();
    c_.block(1, nx, 1, nx) = gc.transpose();
  }

  const CglParameters &parameters() const { return p_; }
  const Eigen::MatrixXcd &complex_operator() const { return complex_; }

  std::string name() const override { return "cgl"; }
  Index state_dim() const override { return 2 * p_.nodes; }
  Index input_dim() const override { return 2; }
  const Matrix &linear_operator() const override { return a_; }
  const Matrix &input_matrix() const override { return b_; }
  const Matrix &output_matrix() const override { return c_; }
  bool has_cubic() const override { return true; }

  /// Nodewise symmetric trilinear form with T3(q, q, q) = -a |q|^2 q:
  /// -a/3 [ (x.y) z + (y.z) x + (x.z) y ] using the real 2-vector per node.
  Vector cubic_form(const Vector &x, const Vector &y, const Vector &z) const override {
    const Index nx = p_.nodes;
    if (x.size() != 2 * nx || y.size() != 2 * nx || z.size() != 2 * nx)
      throw DimensionError("cgl: state size != 2 N_x");
    Vector out(2 * nx);
    const double c = -p_.a / 3.0;
    for (Index k = 0; k < nx; ++k) {
      const double xr = x(k), xi = x(nx + k), yr = y(k), yi = y(nx + k), zr = z(k),
                   zi = z(nx + k);
      const double xy = xr * yr + xi * yi, yz = yr * zr + yi * zi, xz = xr * zr + xi * zi;
      out(k) = c * (xy * zr + yz * xr + xz * yr);
      out(nx + k) = c * (xy * zi + yz * xi + xz * yi);
    }
    return out;
  }

  Vector rhs(const Vector &q, const Vector &u) const override {
    const Index nx = p_.nodes;
    if (q.size() != 2 * nx || u.size() != 2) throw DimensionError("cgl rhs: bad shapes");
    Vector out = sparse_a_ * q;
    out.noalias() += b_ * u;
    for (Index k = 0; k < nx; ++k) {
      const double qr = q(k), qi = q(nx + k);
      const double m2 = qr * qr + qi * qi;
      out(k) -= p_.a * m2 * qr;
      out(nx + k) -= p_.a * m2 * qi;
    }
    return out;
  }

  /// Complex-valued right-hand side used to cross-check the real form.
  Eigen::VectorXcd complex_rhs(const Eigen::VectorXcd &q, std::complex<double> u) const {
    Eigen::VectorXcd out = complex_ * q;
    const Index nx = p_.nodes;
    for (Index k = 0; k < nx; ++k) {
      out(k) += b_(k, 0) * u;
      out(k) -= p_.a * std::norm(q(k)) * q(k);
    }
    return out;
  }

  Vector to_real(const Eigen::VectorXcd &q) const {
    Vector out(2 * p_.nodes);
    out << q.real(), q.imag();
    return out;
  }

private:
  CglParameters p_;
  Eigen::MatrixXcd complex_;
  Matrix a_, b_, c_;
  Eigen::SparseMatrix<double> sparse_a_;
};

inline CglSystem build_cgl(Index nodes, double half_width) {
  CglParameters p;
  p.nodes = nodes;
  p.half_width = half_width;
  return CglSystem(p);
}

/// Largest real part of the spectrum of a real square matrix.
inline double spectral_abscissa(const Matrix &a) {
  Eigen::EigenSolver<Matrix> es(a, false);
  return es.eigenvalues().real().maxCoeff();
}

// ---------------------------------------------------------------------------
// Data protocols

struct ProtocolSpec {
  std::string benchmark = "toy";  // toy | cgl
  std::string protocol = "train"; // train | test | sinusoid
  std::uint64_t seed = 0;
  Index count = 0;               // test protocols (0 -> benchmark default)
  double t_final = 0.0;          // 0 -> benchmark default
  Index samples = 0;             // 0 -> benchmark default
  int substeps = 0;              // RK4 steps per sample interval (0 -> default)
  std::string preset = "ci";     // cgl grid preset: ci | full
  int harmonic = 1;              // sinusoid: frequency k * omega
  double omega = 0.0;            // sinusoid base frequency (0 -> default)
  double amplitude = 0.0;        // sinusoid amplitude (0 -> default)
  bool record_states = true;
};

/// Benchmark defaults.
struct BenchmarkDefaults {
  double t_final;
  Index samples;
  int substeps;
  Index test_count;
  double omega;
  double amplitude;
};

inline BenchmarkDefaults defaults_for(const std::string &benchmark, const std::string &preset) {
  if (benchmark == "toy") return {10.0, 20, 10, 100, 1.0, 0.1};
  if (benchmark == "cgl") {
    if (preset == "full") return {1000.0, 1000, 20, 50, 0.648, 0.05};
    return {300.0, 301, 40, 20, 0.648, 0.05};
  }
  throw ConfigError("unknown benchmark '" + benchmark + "'");
}

inline std::unique_ptr<FullOrderSystem> make_system(const std::string &benchmark,
                                                    const std::string &preset = "ci") {
  if (benchmark == "toy") return std::make_unique<ToySystem>();
  if (benchmark == "cgl") {
    if (preset == "full") return std::make_unique<CglSystem>(CglParameters::full());
    if (preset == "ci") return std::make_unique<CglSystem>(CglParameters::ci());
    throw ConfigError("unknown cgl preset '" + preset + "'");
  }
  throw ConfigError("unknown benchmark '" + benchmark + "'");
}

inline Vector linspace(double a, double b, Index n) {
  if (n == 1) return Vector::Constant(1, a);
  return Vector::LinSpaced(n, a, b);
}

/// Integrates the full model and samples it on `times`.
inline Trajectory simulate_full(const FullOrderSystem &sys, const Vector &x0,
                                const InputSignal &input, const Vector &times, int substeps,
                                bool record_states = true) {
  Rhs f = [&](double t, const Vector &x) { return sys.rhs(x, input_at(input, t)); };
  const Matrix x = integrate(f, x0, times, substeps);
  Trajectory traj;
  traj.times = times;
  traj.x0 = x0;
  traj.input = input;
  traj.y = sys.output_matrix() * x;
  if (record_states) {
    traj.x = x;
    traj.dx.resize(x.rows(), x.cols());
    for (Index i = 0; i < x.cols(); ++i)
      traj.dx.col(i) = sys.rhs(x.col(i), input_at(input, times(i)));
  }
  return traj;
}

/// Time-averaged output energy (1/N) sum_i ||y(t_i)||^2.
inline double output_energy(const Trajectory &t) {
  return t.y.squaredNorm() / static_cast<double>(t.samples());
}

struct Dataset {
  std::string benchmark;
  std::string protocol;
  std::string preset;
  std::uint64_t seed = 0;
  int substeps = 10;
  Matrix c; // output map
  Matrix b; // input map
  std::vector<Trajectory> trajectories;
};

/// Generates a protocol's trajectories with their alpha weights:
///  toy: alpha_j = N_traj N ||C xbar_j||^2 (xbar the forced steady state;
///       time-averaged output energy for non-step inputs)
///  cgl: alpha_j = time-averaged output energy.
inline Dataset generate_dataset(const ProtocolSpec &spec) {
  const BenchmarkDefaults def = defaults_for(spec.benchmark, spec.preset);
  const auto sys = make_system(spec.benchmark, spec.preset);
  const double t_final = spec.t_final > 0.0 ? spec.t_final : def.t_final;
  const Index samples = spec.samples > 0 ? spec.samples : def.samples;
  const int substeps = spec.substeps > 0 ? spec.substeps : def.substeps;
  const Vector times = linspace(0.0, t_final, samples);
  const Index n = sys->state_dim();
  const Index m = sys->input_dim();

  Dataset ds;
  ds.benchmark = spec.benchmark;
  ds.protocol = spec.protocol;
  ds.preset = spec.benchmark == "cgl" ? spec.preset : "";
  ds.seed = spec.seed;
  ds.substeps = substeps;
  ds.c = sys->output_matrix();
  ds.b = sys->input_matrix();

  SplitMix64 rng(spec.seed);
  std::vector<InputSignal> inputs;
  std::vector<Vector> x0s;
  if (spec.benchmark == "toy") {
    if (spec.protocol == "train") {
      for (double u : {0.01, 0.1, 0.2, 0.248}) inputs.push_back(signal::Step{Vector::Constant(1, u), 0.0});
    } else if (spec.protocol == "test") {
      const Index count = spec.count > 0 ? spec.count : def.test_count;
      for (Index j = 0; j < count; ++j)
        inputs.push_back(signal::Step{Vector::Constant(1, rng.uniform(0.01, 0.25)), 0.0});
    } else if (spec.protocol == "sinusoid") {
      const double omega = spec.omega > 0.0 ? spec.omega : def.omega;
      const double amp = spec.amplitude > 0.0 ? spec.amplitude : def.amplitude;
      inputs.push_back(signal::Sinusoid{amp, spec.harmonic * omega, 0.0, Vector::Ones(1)});
    } else {
      throw ConfigError("unknown protocol '" + spec.protocol + "' for benchmark toy");
    }
    for (std::size_t j = 0; j < inputs.size(); ++j) x0s.push_back(Vector::Zero(n));
  } else {
    const Matrix &bm = sys->input_matrix();
    auto impulse = [&](double beta, Index dir) {
      Vector v = Vector::Zero(m);
      v(dir) = beta;
      inputs.push_back(signal::Impulse{v});
      x0s.push_back(bm * v);
    };
    if (spec.protocol == "train") {
      // -beta duplicates +beta up to sign (the dynamics are odd), so each
      // direction keeps the distinct magnitudes {1.0, 0.01, 0.1}.
      for (Index dir = 0; dir < m; ++dir)
        for (double beta : {-1.0, 0.01, 0.1}) impulse(beta, dir);
    } else if (spec.protocol == "test") {
      const Index count = spec.count > 0 ? spec.count : def.test_count;
      for (Index j = 0; j < count; ++j) {
        const double beta = rng.uniform(-1.0, 1.0);
        const Index dir = static_cast<Index>(rng.next() % static_cast<std::uint64_t>(m));
        impulse(beta, dir);
      }
    } else if (spec.protocol == "sinusoid") {
      const double omega = spec.omega > 0.0 ? spec.omega : def.omega;
      const double amp = spec.amplitude > 0.0 ? spec.amplitude : def.amplitude;
      Vector v = rng.normal_vector(m);
      v /= (bm * v).norm(); // B u / ||B u||
      inputs.push_back(signal::Sinusoid{amp, spec.harmonic * omega, 0.0, v});
      x0s.push_back(Vector::Zero(n));
    } else {
      throw ConfigError("unknown protocol '" + spec.protocol + "' for benchmark cgl");
    }
  }

  const double n_traj = static_cast<double>(inputs.size());
  for (std::size_t j = 0; j < inputs.size(); ++j) {
    Trajectory t = simulate_full(*sys, x0s[j], inputs[j], times, substeps, spec.record_states);
    double alpha = 0.0;
    if (spec.benchmark == "toy" && std::holds_alternative<signal::Step>(inputs[j])) {
      const double u = std::get<signal::Step>(inputs[j]).amplitude(0);
      alpha = n_traj * static_cast<double>(samples) *
              (sys->output_matrix() * ToySystem::steady_state(u)).squaredNorm();
    } else {
      alpha = output_energy(t);
    }
    t.alpha = alpha > 0.0 ? alpha : 1.0;
    ds.trajectories.push_back(std::move(t));
  }
  return ds;
}

} // namespace nitrom
