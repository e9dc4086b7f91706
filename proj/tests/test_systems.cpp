#include "test_helpers.hpp"

#include <complex>

using namespace nitrom;

namespace {

Trajectory toy_run(double u, double t_final, Index samples) {
  const ToySystem sys;
  return simulate_full(sys, Vector::Zero(3), signal::Step{Vector::Constant(1, u), 0.0},
                       linspace(0.0, t_final, samples), 50);
}

} // namespace

TEST(Toy, SteadyStateIsAnEquilibrium) {
  for (double u : {0.01, 0.1, 0.2, 0.248}) {
    const Vector xbar = ToySystem::steady_state(u);
    EXPECT_LT(toy_rhs(xbar, u).norm(), 1e-13) << "u = " << u;
  }
}

TEST(Toy, FormsReproduceRhs) {
  const ToySystem sys;
  SplitMix64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const Vector x = rng.normal_vector(3);
    const Vector u = rng.normal_vector(1);
    const Vector split = sys.linear_operator() * x + sys.quadratic_form(x, x) +
                         sys.input_matrix() * u;
    EXPECT_LT((split - sys.rhs(x, u)).norm(), 1e-12);
    const Vector y = rng.normal_vector(3);
    EXPECT_LT((sys.quadratic_form(x, y) - sys.quadratic_form(y, x)).norm(), 1e-15);
  }
}

TEST(Toy, ConvergesBelowThresholdAndGrowsAbove) {
  const Trajectory below = toy_run(0.24, 200.0, 201);
  EXPECT_TRUE(below.x.allFinite());
  // slowest rate at u = 0.24 is 1 - 20 u / 5 = 0.04
  const Vector xbar = ToySystem::steady_state(0.24);
  EXPECT_LT((below.x.col(200) - xbar).norm(), 1e-2);
  EXPECT_LT((below.x.col(200) - xbar).norm(), 0.1 * (below.x.col(100) - xbar).norm());
  EXPECT_LT(below.x.cwiseAbs().maxCoeff(), 10.0);

  const Trajectory above = toy_run(0.26, 200.0, 201);
  // x1 grows like exp((20 u / 5 - 1) t) once x3 has settled
  EXPECT_GT(std::abs(above.x(0, 200)), 100.0);
  EXPECT_GT(std::abs(above.x(0, 200)), 10.0 * std::abs(above.x(0, 100)));
}

TEST(Toy, RecordedDerivativesMatchRhs) {
  const Trajectory t = toy_run(0.1, 10.0, 20);
  for (Index i = 0; i < t.samples(); ++i)
    EXPECT_LT((t.dx.col(i) - toy_rhs(t.x.col(i), 0.1)).norm(), 1e-14);
  EXPECT_LT((t.y - Matrix::Ones(1, 3) * t.x).norm(), 1e-14);
}

TEST(Cgl, BranchLocationAndGrid) {
  const CglParameters p = CglParameters::full();
  EXPECT_NEAR(p.branch_location(), -std::sqrt(68.0), 1e-12);
  EXPECT_NEAR(p.branch_location(), -8.2462, 1e-4);
  EXPECT_NEAR(p.node(0), -40.0 + 80.0 / 221.0, 1e-12);
  EXPECT_NEAR(p.node(219), 40.0 - 80.0 / 221.0, 1e-12);
  EXPECT_NEAR(p.mu(p.branch_location()), 0.0, 1e-12);
  EXPECT_THROW(build_cgl(8, 20.0), ConfigError);
  EXPECT_THROW(build_cgl(64, 10.0), ConfigError);
}

TEST(Cgl, RealFormMatchesComplexForm) {
  const CglSystem sys(CglParameters::ci());
  const Index nx = sys.parameters().nodes;
  SplitMix64 rng(2);
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::VectorXcd q(nx);
    for (Index k = 0; k < nx; ++k) q(k) = {rng.normal(), rng.normal()};
    const std::complex<double> u{rng.normal(), rng.normal()};
    const Eigen::VectorXcd fc = sys.complex_rhs(q, u);
    Vector ur(2);
    ur << u.real(), u.imag();
    const Vector fr = sys.rhs(sys.to_real(q), ur);
    EXPECT_LT((fr - sys.to_real(fc)).cwiseAbs().maxCoeff(), 1e-12);
    const Vector split = sys.linear_operator() * sys.to_real(q) +
                         sys.cubic_form(sys.to_real(q), sys.to_real(q), sys.to_real(q)) +
                         sys.input_matrix() * ur;
    EXPECT_LT((split - fr).cwiseAbs().maxCoeff(), 1e-11);
  }
}

TEST(Cgl, CubicFormIsSymmetricAndPolarizes) {
  const CglSystem sys(CglParameters::ci());
  const Index n = sys.state_dim();
  SplitMix64 rng(3);
  const Vector x = rng.normal_vector(n), y = rng.normal_vector(n), z = rng.normal_vector(n);
  const Vector ref = sys.cubic_form(x, y, z);
  EXPECT_LT((sys.cubic_form(y, x, z) - ref).norm(), 1e-13);
  EXPECT_LT((sys.cubic_form(z, y, x) - ref).norm(), 1e-13);
  EXPECT_LT((sys.cubic_form(x, z, y) - ref).norm(), 1e-13);
  // polarization: T3(x,y,z) = 1/48 sum_{s} s1 s2 s3 c(s1 x + s2 y + s3 z)
  Vector pol = Vector::Zero(n);
  for (int s1 : {-1, 1})
    for (int s2 : {-1, 1})
      for (int s3 : {-1, 1}) {
        const Vector w = s1 * x + s2 * y + s3 * z;
        pol += double(s1 * s2 * s3) * sys.cubic_form(w, w, w);
      }
  EXPECT_LT((pol / 48.0 - ref).norm(), 1e-11 * ref.norm());
}

TEST(Cgl, RhsCommutesWithComplexRotation) {
  // rotating q by i commutes with the dynamics (no input)
  const CglSystem sys(CglParameters::ci());
  const Index nx = sys.parameters().nodes;
  SplitMix64 rng(4);
  const Vector q = rng.normal_vector(2 * nx);
  auto rot = [nx](const Vector &v) {
    Vector out(2 * nx);
    out << -v.tail(nx), v.head(nx);
    return out;
  };
  const Vector u0 = Vector::Zero(2);
  EXPECT_LT((sys.rhs(rot(q), u0) - rot(sys.rhs(q, u0))).norm(), 1e-11);
}

TEST(Cgl, LinearOperatorStableWithTransientGrowth) {
  const CglSystem ci(CglParameters::ci());
  const double abscissa = spectral_abscissa(ci.linear_operator());
  EXPECT_LT(abscissa, 0.0);
  EXPECT_GT(abscissa, -0.05);

  const CglSystem full(CglParameters::full());
  EXPECT_LT(spectral_abscissa(full.linear_operator()), 0.0);

  // small impulse at the actuator: linear regime
  const Vector x0 = 0.01 * ci.input_matrix().col(0);
  const Trajectory t = simulate_full(ci, x0, signal::Impulse{Vector::Zero(2)},
                                     linspace(0.0, 20.0, 21), 40, false);
  const double e1 = t.y.col(1).squaredNorm(), e20 = t.y.col(20).squaredNorm();
  EXPECT_GT(e20, 10.0 * e1);
}

TEST(Cgl, InputAndOutputMapsAreGaussians) {
  const CglSystem sys(CglParameters::ci());
  const Index nx = sys.parameters().nodes;
  const Matrix &b = sys.input_matrix();
  EXPECT_NEAR(b.col(0).norm(), 1.0, 1e-14);
  EXPECT_NEAR(b.col(1).norm(), 1.0, 1e-14);
  EXPECT_EQ(b.col(0).tail(nx).norm(), 0.0);
  Index kb = 0, kc = 0;
  b.col(0).head(nx).maxCoeff(&kb);
  sys.output_matrix().row(0).head(nx).maxCoeff(&kc);
  const CglParameters &p = sys.parameters();
  EXPECT_NEAR(p.node(kb), p.branch_location(), p.spacing());
  EXPECT_NEAR(p.node(kc), -p.branch_location(), p.spacing());
}

TEST(Datasets, ToyProtocols) {
  ProtocolSpec spec;
  spec.benchmark = "toy";
  spec.protocol = "train";
  const Dataset train = generate_dataset(spec);
  ASSERT_EQ(train.trajectories.size(), 4u);
  for (const auto &t : train.trajectories) {
    EXPECT_EQ(t.samples(), 20);
    EXPECT_DOUBLE_EQ(t.times(19), 10.0);
    const double u = std::get<signal::Step>(t.input).amplitude(0);
    EXPECT_NEAR(t.alpha, 4.0 * 20.0 * std::pow(ToySystem::steady_state(u).sum(), 2), 1e-15);
  }

  spec.protocol = "test";
  spec.seed = 11;
  spec.count = 7;
  const Dataset a = generate_dataset(spec), b = generate_dataset(spec);
  ASSERT_EQ(a.trajectories.size(), 7u);
  for (std::size_t j = 0; j < 7; ++j) {
    const double u = std::get<signal::Step>(a.trajectories[j].input).amplitude(0);
    EXPECT_GE(u, 0.01);
    EXPECT_LT(u, 0.25);
    EXPECT_EQ(a.trajectories[j].y, b.trajectories[j].y);
  }
  spec.seed = 12;
  const Dataset c = generate_dataset(spec);
  EXPECT_NE(std::get<signal::Step>(c.trajectories[0].input).amplitude(0),
            std::get<signal::Step>(a.trajectories[0].input).amplitude(0));

  spec.protocol = "sinusoid";
  spec.harmonic = 3;
  const Dataset s = generate_dataset(spec);
  ASSERT_EQ(s.trajectories.size(), 1u);
  EXPECT_DOUBLE_EQ(std::get<signal::Sinusoid>(s.trajectories[0].input).frequency, 3.0);

  spec.protocol = "bogus";
  EXPECT_THROW(generate_dataset(spec), ConfigError);
}

TEST(Datasets, CglProtocols) {
  ProtocolSpec spec;
  spec.benchmark = "cgl";
  spec.protocol = "train";
  spec.t_final = 10.0;
  spec.samples = 11;
  const Dataset train = generate_dataset(spec);
  ASSERT_EQ(train.trajectories.size(), 6u);
  const Matrix &b = train.b;
  for (const auto &t : train.trajectories) {
    const Vector v = std::get<signal::Impulse>(t.input).vector;
    EXPECT_LT((t.x0 - b * v).norm(), 1e-15);
    EXPECT_NEAR(t.alpha, output_energy(t), 1e-15 * t.alpha);
    EXPECT_TRUE(is_unforced(t.input));
  }

  spec.protocol = "test";
  spec.count = 4;
  spec.seed = 5;
  const Dataset a = generate_dataset(spec), c = generate_dataset(spec);
  ASSERT_EQ(a.trajectories.size(), 4u);
  for (std::size_t j = 0; j < 4; ++j) {
    const Vector v = std::get<signal::Impulse>(a.trajectories[j].input).vector;
    EXPECT_EQ((v.array() != 0.0).count(), 1);
    EXPECT_LE(v.cwiseAbs().maxCoeff(), 1.0);
    EXPECT_EQ(a.trajectories[j].y, c.trajectories[j].y);
  }

  spec.protocol = "sinusoid";
  const Dataset s = generate_dataset(spec);
  const auto &sin = std::get<signal::Sinusoid>(s.trajectories[0].input);
  EXPECT_NEAR((b * sin.direction).norm(), 1.0, 1e-14);
  EXPECT_DOUBLE_EQ(sin.frequency, 0.648);
  EXPECT_DOUBLE_EQ(sin.amplitude, 0.05);
}

TEST(Datasets, ZeroImpulseGivesZeroTrajectory) {
  const CglSystem sys(CglParameters::ci());
  const Trajectory t = simulate_full(sys, Vector::Zero(sys.state_dim()),
                                     signal::Impulse{Vector::Zero(2)}, linspace(0.0, 5.0, 6), 40);
  EXPECT_EQ(t.x.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(t.y.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(output_energy(t), 0.0);
}

TEST(Datasets, UnknownBenchmarkOrPreset) {
  EXPECT_THROW(make_system("burgers"), ConfigError);
  EXPECT_THROW(make_system("cgl", "huge"), ConfigError);
}
