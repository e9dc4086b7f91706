#include "test_helpers.hpp"

using namespace nitrom;
using nitrom::testing::random_orthonormal;

TEST(Orthonormalize, ProducesOrthonormalColumnsWithPositiveDiagonal) {
  SplitMix64 rng(1);
  const Matrix m = rng.normal_matrix(7, 3);
  const Matrix q = orthonormalize(m);
  EXPECT_LT(orthonormality_error(q), 1e-14);
  // span preserved and R = Q^T M upper-triangular with positive diagonal
  const Matrix r = q.transpose() * m;
  for (Index j = 0; j < 3; ++j) {
    EXPECT_GT(r(j, j), 0.0);
    for (Index i = j + 1; i < 3; ++i) EXPECT_NEAR(r(i, j), 0.0, 1e-12);
  }
}

TEST(Orthonormalize, RankDeficientThrows) {
  Matrix m = Matrix::Zero(5, 2);
  m(0, 0) = 1.0;
  m(0, 1) = 2.0;
  EXPECT_THROW(orthonormalize(m), DegenerateRetraction);
  Matrix bad = Matrix::Identity(4, 2);
  bad(1, 1) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(orthonormalize(bad), DegenerateRetraction);
}

TEST(Retraction, AtZeroIsIdentity) {
  SplitMix64 rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix x = random_orthonormal(rng, 8, 3);
    EXPECT_LT((qr_retract(x, Matrix::Zero(8, 3)) - x).norm(), 1e-14);
  }
}

TEST(Retraction, FirstOrderAgreement) {
  SplitMix64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix x = random_orthonormal(rng, 9, 3);
    const Matrix xi = stiefel_project_tangent(x, rng.normal_matrix(9, 3));
    const double t1 = 1e-3, t2 = 5e-4;
    const double e1 = (qr_retract(x, t1 * xi) - x - t1 * xi).norm();
    const double e2 = (qr_retract(x, t2 * xi) - x - t2 * xi).norm();
    // remainder is O(t^2)
    EXPECT_LT(e1, 10.0 * t1 * t1 * (1.0 + xi.squaredNorm()));
    if (e1 > 1e-12) {
      EXPECT_NEAR(e1 / e2, 4.0, 0.5);
    }
  }
}

TEST(Retraction, StaysOnManifold) {
  SplitMix64 rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix x = random_orthonormal(rng, 6, 2);
    const Matrix xi = 3.0 * stiefel_project_tangent(x, rng.normal_matrix(6, 2));
    EXPECT_LT(orthonormality_error(qr_retract(x, xi)), 1e-13);
  }
}

TEST(TangentProjection, StiefelIdempotentAndTangent) {
  SplitMix64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix x = random_orthonormal(rng, 7, 3);
    const Matrix v = rng.normal_matrix(7, 3);
    const Matrix p = stiefel_project_tangent(x, v);
    EXPECT_LT((stiefel_project_tangent(x, p) - p).norm(), 1e-12);
    EXPECT_LT((x.transpose() * p + p.transpose() * x).norm(), 1e-12);
  }
}

TEST(TangentProjection, GrassmannIdempotentAndHorizontal) {
  SplitMix64 rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix x = random_orthonormal(rng, 7, 3);
    const Matrix v = rng.normal_matrix(7, 3);
    const Matrix p = grassmann_project_horizontal(x, v);
    EXPECT_LT((grassmann_project_horizontal(x, p) - p).norm(), 1e-12);
    EXPECT_LT((x.transpose() * p).norm(), 1e-12);
  }
}

TEST(Transport, ResultIsTangentAtTarget) {
  SplitMix64 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix x = random_orthonormal(rng, 8, 3);
    const Matrix y = qr_retract(x, 0.5 * stiefel_project_tangent(x, rng.normal_matrix(8, 3)));
    const Matrix eta = stiefel_project_tangent(x, rng.normal_matrix(8, 3));
    const Matrix ts = stiefel_transport(x, y, eta);
    EXPECT_LT((y.transpose() * ts + ts.transpose() * y).norm(), 1e-12);
    const Matrix tg = grassmann_transport(x, y, grassmann_project_horizontal(x, eta));
    EXPECT_LT((y.transpose() * tg).norm(), 1e-12);
  }
}

TEST(SubspaceAngle, InvariantToBasisRotation) {
  SplitMix64 rng(8);
  const Matrix x = random_orthonormal(rng, 6, 2);
  const Matrix rot = random_orthonormal(rng, 2, 2);
  EXPECT_NEAR(subspace_angle(x, x * rot), 0.0, 1e-7);
  Matrix e1 = Matrix::Zero(3, 1), e2 = Matrix::Zero(3, 1);
  e1(0, 0) = 1.0;
  e2(1, 0) = 1.0;
  EXPECT_NEAR(subspace_angle(e1, e2), std::acos(0.0), 1e-12);
}
