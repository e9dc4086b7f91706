#include "test_helpers.hpp"

using namespace nitrom;
using nitrom::testing::fd_gradient;
using nitrom::testing::max_relative_error;
using nitrom::testing::random_data;
using nitrom::testing::random_point;

namespace {

struct Instance {
  ModelPoint x;
  Matrix c;
  std::vector<Trajectory> data;
  SimulationOptions opts;
};

Instance make_instance(std::uint64_t seed, PolyOrder order, Index n = 3, Index r = 2) {
  SplitMix64 rng(seed);
  Instance in;
  in.x = random_point(rng, n, r, 1, order, 0.3);
  in.c = rng.normal_matrix(1, n);
  in.data = random_data(rng, n, 1, 1, 2, 5, 2.0);
  in.opts.substeps = 6;
  return in;
}

void expect_gradient_matches_fd(Instance &in, double tol) {
  const auto [report, grad] = euclidean_gradient(in.x, in.c, in.data, in.opts);
  ASSERT_TRUE(grad.has_value());
  ASSERT_TRUE(std::isfinite(report.total));
  auto cost = [&] { return evaluate_cost(in.x, in.c, in.data, in.opts).total; };
  for (Block bl : kAllBlocks) {
    if (!in.x.has_block(bl)) continue;
    const Matrix fd = fd_gradient(in.x.block(bl), cost);
    EXPECT_LT(max_relative_error(grad->block(bl), fd), tol) << block_name(bl);
  }
}

} // namespace

TEST(Gradient, QuadraticModelMatchesFiniteDifferences) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    Instance in = make_instance(seed, PolyOrder::quadratic);
    expect_gradient_matches_fd(in, 1e-5);
  }
}

TEST(Gradient, CubicModelMatchesFiniteDifferences) {
  for (std::uint64_t seed : {4u, 5u}) {
    Instance in = make_instance(seed, PolyOrder::cubic);
    expect_gradient_matches_fd(in, 1e-5);
  }
}

TEST(Gradient, LargerStateAndOrderMatchFiniteDifferences) {
  Instance in = make_instance(6, PolyOrder::quadratic, 6, 3);
  expect_gradient_matches_fd(in, 1e-5);
}

TEST(Gradient, UnforcedInputGivesZeroInputGradient) {
  Instance in = make_instance(7, PolyOrder::quadratic);
  for (auto &t : in.data) t.input = signal::Impulse{Vector::Ones(1)};
  const auto grad = euclidean_gradient(in.x, in.c, in.data, in.opts).second;
  ASSERT_TRUE(grad);
  EXPECT_TRUE(grad->b.isZero(0.0));
  expect_gradient_matches_fd(in, 1e-5);
}

TEST(Gradient, ExactDataGivesZeroCostAndGradient) {
  Instance in = make_instance(8, PolyOrder::quadratic);
  for (auto &t : in.data) {
    const RomSimulation sim = simulate_rom(in.x.rom, pair_of(in.x), in.c, t.x0, t.input, t.times,
                                           in.opts.substeps);
    t.y = sim.y_hat;
  }
  const auto [report, grad] = euclidean_gradient(in.x, in.c, in.data, in.opts);
  EXPECT_EQ(report.total, 0.0);
  for (Block bl : kAllBlocks) EXPECT_TRUE(grad->block(bl).isZero(0.0)) << block_name(bl);
}

TEST(Adjoint, CumulativeSweepEqualsSumOfPerSampleSweeps) {
  Instance in = make_instance(9, PolyOrder::quadratic);
  const Trajectory &t = in.data.front();
  const ProjectionPair pair = pair_of(in.x);
  const RomSimulation sim = simulate_rom(in.x.rom, pair, in.c, t.x0, t.input, t.times,
                                         in.opts.substeps);
  const Matrix c_r = in.c * decoder_matrix(pair);
  const Matrix e = t.y - sim.y_hat;
  const Matrix inj = (2.0 / t.alpha) * (c_r.transpose() * e);
  std::vector<Index> idx;
  for (Index i = 0; i < t.samples(); ++i) idx.push_back(i * in.opts.substeps);
  const AdjointSweep all = solve_adjoint_cumulative(in.x.rom, sim.fine, t.input, idx, inj);

  AdjointSweep sum;
  sum.mu = Matrix::Zero(all.mu.rows(), 1);
  sum.a = Matrix::Zero(all.a.rows(), all.a.cols());
  sum.h = Matrix::Zero(all.h.rows(), all.h.cols());
  sum.b = Matrix::Zero(all.b.rows(), all.b.cols());
  for (Index i = 0; i < t.samples(); ++i) {
    const AdjointSweep one =
        solve_adjoint_cumulative(in.x.rom, sim.fine, t.input, {idx[static_cast<std::size_t>(i)]},
                                 inj.col(i));
    sum.mu += one.mu.col(0);
    sum.a += one.a;
    sum.h += one.h;
    sum.b += one.b;
  }
  auto rel = [](const Matrix &a, const Matrix &b) { return (a - b).norm() / b.norm(); };
  EXPECT_LT(rel(all.mu.col(0), sum.mu), 1e-9);
  EXPECT_LT(rel(all.a, sum.a), 1e-9);
  EXPECT_LT(rel(all.h, sum.h), 1e-9);
  EXPECT_LT(rel(all.b, sum.b), 1e-9);
}

TEST(Cost, HorizonTruncatesSamples) {
  Instance in = make_instance(10, PolyOrder::quadratic);
  SimulationOptions shortened = in.opts;
  shortened.horizon = 1.0; // samples at t = 0, 0.5, 1.0
  std::vector<Trajectory> cut = in.data;
  for (auto &t : cut) {
    t.times = t.times.head(3).eval();
    t.y = t.y.leftCols(3).eval();
  }
  EXPECT_NEAR(evaluate_cost(in.x, in.c, in.data, shortened).total,
              evaluate_cost(in.x, in.c, cut, in.opts).total, 1e-14);
  EXPECT_EQ(samples_within(in.data.front(), 1.0), 3);
}

TEST(Cost, WeightsByInverseAlpha) {
  Instance in = make_instance(11, PolyOrder::quadratic);
  const CostReport base = evaluate_cost(in.x, in.c, in.data, in.opts);
  in.data[0].alpha *= 2.0;
  const CostReport scaled = evaluate_cost(in.x, in.c, in.data, in.opts);
  EXPECT_NEAR(scaled.per_trajectory[0], 0.5 * base.per_trajectory[0], 1e-14);
  EXPECT_EQ(scaled.per_trajectory[1], base.per_trajectory[1]);
}

TEST(Cost, DivergingModelReportsInfinity) {
  Instance in = make_instance(12, PolyOrder::quadratic);
  in.x.rom.h *= 1e4;
  in.x.rom.a = Matrix::Identity(2, 2);
  for (auto &t : in.data) t.x0 *= 10.0;
  const auto [report, grad] = euclidean_gradient(in.x, in.c, in.data, in.opts);
  EXPECT_TRUE(report.diverged);
  EXPECT_TRUE(std::isinf(report.total));
  EXPECT_FALSE(grad.has_value());
  EXPECT_NE(report.diagnostic.find("diverged"), std::string::npos);
}

TEST(Cost, DimensionMismatchThrows) {
  Instance in = make_instance(13, PolyOrder::quadratic);
  EXPECT_THROW(evaluate_cost(in.x, Matrix::Ones(1, 4), in.data, in.opts), DimensionError);
}

TEST(StabilityPenalty, MatchesFiniteDifferences) {
  SplitMix64 rng(14);
  for (int trial = 0; trial < 3; ++trial) {
    Matrix a = 0.3 * rng.normal_matrix(4, 4) - 0.2 * Matrix::Identity(4, 4);
    const Vector z0 = rng.unit_vector(4);
    const PenaltyResult res = stability_penalty(a, 5.0, z0, 1e-3);
    const Matrix fd = fd_gradient(a, [&] { return stability_penalty(a, 5.0, z0, 1e-3).value; });
    EXPECT_LT(max_relative_error(res.grad_a, fd), 1e-5);
  }
}

TEST(StabilityPenalty, ValueMatchesMatrixExponential) {
  Matrix a(2, 2);
  a << -0.1, 1.0, -1.0, -0.1;
  Vector z0(2);
  z0 << 1.0, 0.0;
  // exp(A t) is a damped rotation: ||z(t)||^2 = exp(-0.2 t), up to RK4 error
  const double value = stability_penalty(a, 10.0, z0, 2.0).value;
  EXPECT_NEAR(value, 2.0 * std::exp(-2.0), 1e-6);
  // exactly: 200 steps of the RK4 stability polynomial R(hA)
  const Matrix z = 0.05 * a;
  const Matrix step = Matrix::Identity(2, 2) + z + z * z / 2.0 + z * z * z / 6.0 + z * z * z * z / 24.0;
  Vector w = z0;
  for (int k = 0; k < 200; ++k) w = step * w;
  EXPECT_NEAR(value, 2.0 * w.squaredNorm(), 1e-14);
}

TEST(StabilityPenalty, InvalidArguments) {
  const Matrix a = Matrix::Identity(2, 2);
  EXPECT_THROW(stability_penalty(a, 0.0, Vector::Ones(2), 1.0), ConfigError);
  EXPECT_THROW(stability_penalty(a, 1.0, Vector::Ones(3), 1.0), DimensionError);
  EXPECT_THROW(stability_penalty(a, 1.0, Vector::Ones(2), -1.0), ConfigError);
}
