#include "ferro/errors.hpp"
#include "ferro/material.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

using namespace ferro;
using ferro::testing::random_matrix;
using ferro::testing::random_spd;
using ferro::testing::random_unit;

namespace {

MaterialTensors scalar_tensors(double C, double eps, double e) {
  return make_tensors(1, ElasticParams::from_packed(Mat::Constant(1, 1, C)),
                      DielectricParams::full(Mat::Constant(1, 1, eps)),
                      CouplingParams::full(Mat::Constant(1, 1, e)),
                      HardeningParams::none());
}

double dense_min_eig(const Mat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (m + m.transpose()));
  return es.eigenvalues()(0);
}

}  // namespace

TEST(Packing, FrobeniusProductIsPackedDot) {
  std::mt19937_64 rng(1);
  for (int d = 1; d <= 3; ++d) {
    const Mat a0 = random_matrix(d, d, rng), b0 = random_matrix(d, d, rng);
    const Mat a = a0 + a0.transpose(), b = b0 + b0.transpose();
    const double frob = (a.array() * b.array()).sum();
    EXPECT_NEAR(pack_symmetric(a).dot(pack_symmetric(b)), frob, 1e-12);
    EXPECT_LT((unpack_symmetric(pack_symmetric(a), d) - a).norm(), 1e-14);
  }
}

TEST(Packing, OffDiagonalOrder) {
  Mat t = Mat::Zero(3, 3);
  t(1, 2) = t(2, 1) = 1.0;
  Vec p = pack_symmetric(t);
  EXPECT_NEAR(p(3), kSqrt2, 1e-15);
  t.setZero();
  t(0, 1) = t(1, 0) = 1.0;
  p = pack_symmetric(t);
  EXPECT_NEAR(p(5), kSqrt2, 1e-15);
}

TEST(MakeTensors, IdentityCoefficients) {
  const auto t = scalar_tensors(1.0, 1.0, 0.0);
  EXPECT_EQ(t.hardening, HardeningRegime::Zero);
  EXPECT_NEAR(assemble_block_A(t).c0, 1.0, 1e-15);
  EXPECT_GT(assemble_block_D(t).lambda_min, 0.0);
}

TEST(MakeTensors, IsotropicSmallestEigenvalue) {
  const auto t = make_tensors(2, ElasticParams::isotropic(1.0, 1.0),
                              DielectricParams::diagonal(Vec::Constant(2, 2.0)),
                              CouplingParams::none(), HardeningParams::none());
  // Oracle: the Mandel matrix written out by hand, [[3,1,0],[1,3,0],[0,0,2]].
  Mat mandel(3, 3);
  mandel << 3, 1, 0, 1, 3, 0, 0, 0, 2;
  EXPECT_LT((t.C - mandel).norm(), 1e-14);
  EXPECT_NEAR(dense_min_eig(t.C), 2.0, 1e-12);
}

TEST(MakeTensors, IndefiniteDielectricRejected) {
  Vec diag(2);
  diag << 1.0, -1.0;
  try {
    make_tensors(2, ElasticParams::isotropic(1.0, 1.0),
                 DielectricParams::diagonal(diag), CouplingParams::none(),
                 HardeningParams::none());
    FAIL() << "expected NonPositiveDefinite";
  } catch (const NonPositiveDefinite& e) {
    EXPECT_NE(std::string(e.what()).find("eps"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("-1"), std::string::npos);
  }
}

TEST(MakeTensors, HardeningRegimes) {
  auto base = [](HardeningParams hp) {
    return make_tensors(1, ElasticParams::isotropic(0.0, 1.0),
                        DielectricParams::diagonal(Vec::Ones(1)),
                        CouplingParams::none(), std::move(hp));
  };
  EXPECT_EQ(base(HardeningParams::none()).hardening, HardeningRegime::Zero);
  EXPECT_EQ(base(HardeningParams::identity(0.5, 2)).hardening,
            HardeningRegime::PositiveDefinite);
  Mat semi = Mat::Zero(2, 2);
  semi(1, 1) = 1.0;
  EXPECT_EQ(base(HardeningParams::full(semi)).hardening,
            HardeningRegime::SemiDefinite);
  Mat neg = -Mat::Identity(2, 2);
  EXPECT_THROW(base(HardeningParams::full(neg)), NonPositiveDefinite);
  Mat wrong = Mat::Identity(3, 3);
  EXPECT_THROW(base(HardeningParams::full(wrong)), InvalidArgument);
}

TEST(BlockA, DecoupledBlocks) {
  const auto t = make_tensors(2, ElasticParams::isotropic(0.5, 0.7),
                              DielectricParams::diagonal(Vec::Constant(2, 0.9)),
                              CouplingParams::none(), HardeningParams::none());
  const auto A = assemble_block_A(t);
  EXPECT_NEAR(A.c0, std::min(dense_min_eig(t.C), dense_min_eig(t.eps)), 1e-12);
  EXPECT_LT(A.matrix.topRightCorner(3, 2).norm(), 1e-15);
}

TEST(BlockA, CouplingCancelsInQuadraticForm) {
  const auto t = scalar_tensors(2.0, 3.0, 5.0);
  const auto A = assemble_block_A(t);
  std::mt19937_64 rng(7);
  for (int i = 0; i < 100; ++i) {
    const Vec eta = random_matrix(2, 1, rng);
    const double expect = 2.0 * eta(0) * eta(0) + 3.0 * eta(1) * eta(1);
    EXPECT_NEAR(eta.dot(A.matrix * eta), expect, 1e-12 * (1 + expect));
  }
  EXPECT_NEAR(A.c0, 2.0, 1e-12);
}

TEST(BlockA, RandomCouplingDoesNotChangeC0) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    const Mat C = random_spd(3, rng), eps = random_spd(2, rng);
    const Mat e = random_matrix(2, 3, rng);
    const auto with = make_tensors(2, ElasticParams::from_packed(C),
                                   DielectricParams::full(eps),
                                   CouplingParams::full(e), HardeningParams::none());
    const auto without = make_tensors(2, ElasticParams::from_packed(C),
                                      DielectricParams::full(eps),
                                      CouplingParams::none(), HardeningParams::none());
    const double c_with = assemble_block_A(with).c0;
    EXPECT_NEAR(c_with, assemble_block_A(without).c0, 1e-12);
    EXPECT_GT(c_with, 0.0);
    // 1000 random unit probes never dip below c0.
    const Mat& A = assemble_block_A(with).matrix;
    for (int i = 0; i < 1000; ++i) {
      const Vec eta = random_unit(5, rng);
      EXPECT_GE(eta.dot(A * eta), c_with - 1e-12);
    }
  }
}

TEST(BlockD, DecoupledIsBlockDiagonal) {
  const auto t = make_tensors(2, ElasticParams::isotropic(1.0, 2.0),
                              DielectricParams::diagonal(Vec::Constant(2, 4.0)),
                              CouplingParams::none(), HardeningParams::none());
  const auto D = assemble_block_D(t);
  EXPECT_LT((D.matrix.topLeftCorner(3, 3) - t.C).norm(), 1e-14);
  EXPECT_LT((D.matrix.bottomRightCorner(2, 2) - 0.25 * Mat::Identity(2, 2)).norm(),
            1e-14);
  EXPECT_LT(D.matrix.topRightCorner(3, 2).norm(), 1e-15);
}

TEST(BlockD, ScalarCoupledExample) {
  const auto D = assemble_block_D(scalar_tensors(1.0, 1.0, 1.0));
  Mat expect(2, 2);
  expect << 2, -1, -1, 1;
  EXPECT_LT((D.matrix - expect).norm(), 1e-14);
  Eigen::SelfAdjointEigenSolver<Mat> es(expect);
  EXPECT_NEAR(D.lambda_min, (3.0 - std::sqrt(5.0)) / 2.0, 1e-14);
  EXPECT_NEAR(D.lambda_max, (3.0 + std::sqrt(5.0)) / 2.0, 1e-14);
  EXPECT_NEAR(es.eigenvalues()(0), D.lambda_min, 1e-14);
}

TEST(BlockD, SymmetricAndFactorsConsistent) {
  std::mt19937_64 rng(3);
  const auto t = make_tensors(3, ElasticParams::from_packed(random_spd(6, rng)),
                              DielectricParams::full(random_spd(3, rng)),
                              CouplingParams::full(random_matrix(3, 6, rng)),
                              HardeningParams::none());
  const auto D = assemble_block_D(t);
  for (int i = 0; i < 50; ++i) {
    const Vec a = random_matrix(9, 1, rng), b = random_matrix(9, 1, rng);
    const double l = (D.matrix * a).dot(b), r = a.dot(D.matrix * b);
    EXPECT_LE(std::abs(l - r), 1e-12 * std::max(1.0, std::abs(l)));
  }
  EXPECT_LT((D.sqrt * D.sqrt - D.matrix).norm(), 1e-10 * D.matrix.norm());
  EXPECT_LT((D.inv_sqrt * D.matrix * D.inv_sqrt - Mat::Identity(9, 9)).norm(), 1e-10);
  EXPECT_LT((D.inverse * D.matrix - Mat::Identity(9, 9)).norm(), 1e-10);
}

TEST(BlockD, ReconstructionIdentity) {
  // sigma, E from the direct law with E solved out of the D equation must
  // match D applied to (strain - r, D - P).
  std::mt19937_64 rng(5);
  const auto t = make_tensors(2, ElasticParams::from_packed(random_spd(3, rng)),
                              DielectricParams::full(random_spd(2, rng)),
                              CouplingParams::full(random_matrix(2, 3, rng)),
                              HardeningParams::none());
  const auto D = assemble_block_D(t);
  for (int i = 0; i < 100; ++i) {
    const Vec rev = random_matrix(3, 1, rng);
    const Vec dP = random_matrix(2, 1, rng);
    const Vec E = t.eps.inverse() * (dP - t.e * rev);
    const auto resp = direct_response(t, rev, E, Vec::Zero(3), Vec::Zero(2));
    EXPECT_LT((resp.D - dP).norm(), 1e-12 * (1 + dP.norm()));
    Vec w(5);
    w << rev, dP;
    Vec expect(5);
    expect << resp.sigma, E;
    const Vec got = D.matrix * w;
    EXPECT_LE((got - expect).norm(), 1e-12 * std::max(1.0, expect.norm()));
  }
}
