#include "ferro/elliptic.hpp"
#include "ferro/errors.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

using namespace ferro;
using namespace ferro::testing;

namespace {

MaterialTensors unit_tensors(int dim) {
  return make_tensors(dim, ElasticParams::from_packed(Mat::Identity(sym_size(dim), sym_size(dim))),
                      DielectricParams::diagonal(Vec::Ones(dim)),
                      CouplingParams::none(), HardeningParams::none());
}

Grid square(int dim, int n) {
  return Grid(dim, std::vector<int>(static_cast<std::size_t>(dim), n),
              std::vector<double>(static_cast<std::size_t>(dim), 1.0));
}

double rel(const Mat& a, const Mat& b) {
  return (a - b).norm() / std::max({a.norm(), b.norm(), 1e-300});
}

}  // namespace

TEST(Grid, KuhnSubdivision) {
  const Grid g(3, {2, 3, 1}, {1.0, 1.5, 0.5});
  EXPECT_EQ(g.num_nodes(), 3 * 4 * 2);
  EXPECT_EQ(g.simplices_per_box(), 6);
  EXPECT_EQ(g.num_cells(), 36);
  double vol = 0.0;
  for (int c = 0; c < g.num_cells(); ++c) vol += g.cell_measure();
  EXPECT_NEAR(vol, g.volume(), 1e-14);
  // Barycentric gradients: sum to zero and reproduce linear functions.
  for (int c = 0; c < g.num_cells(); ++c) {
    const Mat& G = g.cell_gradients(c);
    EXPECT_LT(G.rowwise().sum().norm(), 1e-13);
    const auto nodes = g.cell_nodes(c);
    Vec lin(4);
    for (int a = 0; a < 4; ++a) lin(a) = g.node_coords(nodes[static_cast<std::size_t>(a)]).sum();
    EXPECT_LT((G * lin - Vec::Ones(3)).norm(), 1e-13);
  }
  EXPECT_THROW(Grid(4, {1, 1, 1, 1}, {1, 1, 1, 1}), InvalidArgument);
}

TEST(Assemble, OneDimensionalStencil) {
  // Two interior nodes on [0, 1] with three cells: each block is the
  // second-difference stencil [[2, -1], [-1, 2]] / h.
  const AssembledSystem sys(Grid(1, {3}, {1.0}), unit_tensors(1));
  ASSERT_EQ(sys.num_dofs(), 4);
  const double h = 1.0 / 3.0;
  Mat expect = Mat::Zero(4, 4);
  expect.topLeftCorner(2, 2) << 2, -1, -1, 2;
  expect.bottomRightCorner(2, 2) << 2, -1, -1, 2;
  expect /= h;
  EXPECT_LT((Mat(sys.matrix()) - expect).norm(), 1e-12);
}

TEST(Assemble, DecoupledWithoutPiezoCoupling) {
  const AssembledSystem sys(square(2, 4), unit_tensors(2));
  const Mat K = Mat(sys.matrix());
  const int nu = 2 * static_cast<int>(sys.grid().free_nodes().size());
  EXPECT_EQ(K.topRightCorner(nu, K.cols() - nu).norm(), 0.0);
  EXPECT_EQ(K.bottomLeftCorner(K.rows() - nu, nu).norm(), 0.0);
}

TEST(Assemble, DiscreteCoercivity) {
  const AssembledSystem sys(square(2, 5), coupled_tensors(2, 0.8));
  const Mat K = Mat(sys.matrix());
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (K + K.transpose()));
  EXPECT_GT(es.eigenvalues()(0), 0.0);
}

TEST(Solve, ZeroDataGivesZeroFields) {
  const AssembledSystem sys(square(2, 3), coupled_tensors(2));
  const auto fs = sys.solve(sys.zero_field(), sys.zero_body_force(), sys.zero_charge());
  EXPECT_EQ(fs.u.norm() + fs.phi.norm() + fs.sigma.norm() + fs.D.norm(), 0.0);
}

TEST(Solve, LinearityAndSuperposition) {
  std::mt19937_64 rng(31);
  const AssembledSystem sys(square(2, 4), coupled_tensors(2));
  const Mat z1 = random_field(sys, rng), z2 = random_field(sys, rng);
  const Mat b = random_matrix(2, sys.grid().num_nodes(), rng);
  const Vec q = random_matrix(sys.grid().num_nodes(), 1, rng);
  const auto f1 = sys.solve(z1, Mat(), Vec());
  const auto f2 = sys.solve(z2, Mat(), Vec());
  const auto f12 = sys.solve(z1 + z2, Mat(), Vec());
  EXPECT_LE(rel(f12.u, f1.u + f2.u), 1e-10);
  EXPECT_LE(rel(f12.phi, f1.phi + f2.phi), 1e-10);
  const auto full = sys.solve(z1, b, q);
  const auto loads = sys.solve(Mat(), b, q);
  EXPECT_LE(rel(full.sigma, f1.sigma + loads.sigma), 1e-10);
  EXPECT_LE(rel(full.E, f1.E + loads.E), 1e-10);
  EXPECT_LE(full.residual, 1e-10);
}

TEST(Solve, ConstitutiveLawHoldsPerCell) {
  std::mt19937_64 rng(32);
  const AssembledSystem sys(square(2, 3), coupled_tensors(2));
  const Mat z = random_field(sys, rng);
  const auto fs = sys.solve(z, Mat(), Vec());
  const auto& t = sys.tensors();
  for (int c = 0; c < sys.num_cells(); ++c) {
    const Vec rev = fs.strain.col(c) - z.col(c).head(3);
    const Vec sig = t.C * rev - t.e.transpose() * fs.E.col(c);
    const Vec D = t.e * rev + t.eps * fs.E.col(c) + z.col(c).tail(2);
    EXPECT_LE((sig - fs.sigma.col(c)).norm(), 1e-12 * (1 + sig.norm()));
    EXPECT_LE((D - fs.D.col(c)).norm(), 1e-12 * (1 + D.norm()));
  }
}

TEST(Solve, DirichletNodesVanish) {
  std::mt19937_64 rng(33);
  const AssembledSystem sys(square(2, 4), coupled_tensors(2));
  const auto fs = sys.solve(random_field(sys, rng), Mat(), Vec());
  for (int n = 0; n < sys.grid().num_nodes(); ++n) {
    if (!sys.grid().is_boundary(n)) continue;
    EXPECT_EQ(fs.u.col(n).norm(), 0.0);
    EXPECT_EQ(fs.phi(n), 0.0);
  }
}

TEST(Solve, ManufacturedConvergenceOrderTwo) {
  for (int dim : {1, 2}) {
    const auto t = coupled_tensors(dim, 0.5);
    Vec a(dim);
    for (int i = 0; i < dim; ++i) a(i) = 1.0 - 0.4 * i;
    const double c = 0.7;
    std::vector<double> err;
    for (int n : {4, 8, 16, 32, 64}) {
      Grid g = square(dim, dim == 1 ? 2 * n : n);
      Mat b;
      Vec q;
      manufactured_loads(g, t, a, c, b, q);
      const AssembledSystem sys(std::move(g), t);
      err.push_back(manufactured_error(sys.grid(), sys.solve(Mat(), b, q), a, c));
    }
    for (std::size_t k = 0; k + 1 < err.size(); ++k) {
      const double order = std::log2(err[k] / err[k + 1]);
      EXPECT_NEAR(order, 2.0, 0.2) << "d = " << dim << ", refinement " << k;
    }
  }
}

TEST(LoadTrace, ClampedBarHandOracle) {
  // -u'' = 1 on (0, 1), u(0) = u(1) = 0: cell stresses are the exact cell
  // averages of sigma = 1/2 - x, i.e. (1/3, 0, -1/3) on three cells.
  const AssembledSystem sys(Grid(1, {3}, {1.0}), unit_tensors(1));
  const Mat b = Mat::Ones(1, sys.grid().num_nodes());
  const Mat zhat = sys.load_trace(b, Vec());
  EXPECT_NEAR(zhat(0, 0), 1.0 / 3.0, 1e-14);
  EXPECT_NEAR(zhat(0, 1), 0.0, 1e-14);
  EXPECT_NEAR(zhat(0, 2), -1.0 / 3.0, 1e-14);
  EXPECT_LT(zhat.row(1).norm(), 1e-15);
  EXPECT_EQ(sys.load_trace(sys.zero_body_force(), sys.zero_charge()).norm(), 0.0);
}

class Projection : public ::testing::TestWithParam<std::pair<int, int>> {};

TEST_P(Projection, IdempotentAdjointAndMConsistent) {
  const auto [dim, n] = GetParam();
  std::mt19937_64 rng(static_cast<unsigned>(40 + dim * 10 + n));
  const AssembledSystem sys(square(dim, n), coupled_tensors(dim, 0.5));
  EXPECT_EQ(sys.project_Q(sys.zero_field()).norm(), 0.0);
  EXPECT_EQ(sys.apply_M(sys.zero_field()).norm(), 0.0);
  for (int i = 0; i < 20; ++i) {
    const Mat z = random_field(sys, rng), w = random_field(sys, rng);
    const Mat Qz = sys.project_Q(z), Qw = sys.project_Q(w);
    EXPECT_LE(rel(sys.project_Q(Qz), Qz), 1e-8);
    const double l = sys.inner_D(Qz, w), r = sys.inner_D(z, Qw);
    EXPECT_LE(std::abs(l - r), 1e-8 * std::max({std::abs(l), std::abs(r), 1.0}));
    const Mat Mz = sys.apply_M(z), Mw = sys.apply_M(w);
    const double mzw = sys.inner(Mz, w), mwz = sys.inner(Mw, z);
    EXPECT_LE(std::abs(mzw - mwz), 1e-8 * std::max(std::abs(mzw), 1.0));
    EXPECT_GE(sys.inner(Mz, z), -1e-10);
    // Orthogonality <Mz, Qw> = 0 and M vanishes on the range of Q.
    EXPECT_LE(std::abs(sys.inner(Mz, Qw)), 1e-8 * std::sqrt(sys.inner(Mz, Mz) * sys.inner(Qw, Qw)));
    EXPECT_LE(std::sqrt(sys.inner(sys.apply_M(Qw), sys.apply_M(Qw))),
              1e-8 * std::sqrt(sys.inner(Qw, Qw)));
  }
}

INSTANTIATE_TEST_SUITE_P(Grids, Projection,
                         ::testing::Values(std::pair{1, 16}, std::pair{2, 6},
                                           std::pair{2, 8}, std::pair{3, 4}));

TEST(ApplyM, EqualsMinusZeroLoadFields) {
  std::mt19937_64 rng(50);
  const AssembledSystem sys(square(2, 5), coupled_tensors(2));
  const Mat z = random_field(sys, rng);
  const auto fs = sys.solve(z, Mat(), Vec());
  Mat expect(5, sys.num_cells());
  expect << -fs.sigma, -fs.E;
  EXPECT_LE(rel(sys.apply_M(z), expect), 1e-10);
}

TEST(ProjectQ, RangeHasZeroWeakDivergence) {
  // For Qz = (eps(u0), D0): sum_K |K| D0 . grad psi_a = 0 at every free node.
  std::mt19937_64 rng(51);
  const AssembledSystem sys(square(2, 6), coupled_tensors(2));
  const Mat Qz = sys.project_Q(random_field(sys, rng));
  const Grid& g = sys.grid();
  Vec div = Vec::Zero(g.num_nodes());
  for (int c = 0; c < g.num_cells(); ++c) {
    const auto nodes = g.cell_nodes(c);
    for (int a = 0; a < 3; ++a) {
      div(nodes[static_cast<std::size_t>(a)]) +=
          g.cell_measure() * Qz.col(c).tail(2).dot(g.cell_gradients(c).col(a));
    }
  }
  double worst = 0.0;
  for (int node : g.free_nodes()) worst = std::max(worst, std::abs(div(node)));
  EXPECT_LE(worst, 1e-8 * std::max(1.0, Qz.norm()));
}

TEST(Solve, StabilityConstantBoundedUnderRefinement) {
  const auto t = coupled_tensors(2, 0.5);
  std::vector<double> ratio;
  for (int n : {4, 8, 16}) {
    const AssembledSystem sys(square(2, n), t);
    const Grid& g = sys.grid();
    Mat z(5, g.num_cells());
    for (int c = 0; c < g.num_cells(); ++c) {
      const Vec x = g.cell_centroid(c);
      z.col(c) << std::sin(3 * x(0)), x(1), 0.2, std::cos(x(0) * x(1)), 0.5 * x(0);
    }
    Mat b(2, g.num_nodes());
    Vec q(g.num_nodes());
    for (int k = 0; k < g.num_nodes(); ++k) {
      const Vec x = g.node_coords(k);
      b.col(k) << x(0), 1.0 - x(1);
      q(k) = x(0) * x(1);
    }
    const auto fs = sys.solve(z, b, q);
    const Vec meas = g.cell_measures();
    const Vec node_w = Vec::Constant(g.num_nodes(), g.volume() / g.num_nodes());
    const double lhs = lp_norm(fs.u, node_w, 2) + lp_norm(fs.phi.transpose(), node_w, 2);
    const double rhs = lp_norm(z.topRows(3), meas, 2) + lp_norm(z.bottomRows(2), meas, 2) +
                       lp_norm(b, node_w, 2) + lp_norm(q.transpose(), node_w, 2);
    ratio.push_back(lhs / rhs);
  }
  for (double r : ratio) EXPECT_LE(r, 2.0 * ratio.front());
}

TEST(LpNorm, Basics) {
  Mat f(1, 4);
  f << 1, -1, 2, 0;
  const Vec m = Vec::Constant(4, 0.25);
  EXPECT_NEAR(lp_norm(f, m, 2.0), std::sqrt(1.5), 1e-15);
  EXPECT_NEAR(lp_norm(f, m, 1.0), 1.0, 1e-15);
  EXPECT_EQ(lp_norm(f, m, std::numeric_limits<double>::infinity()), 2.0);
}
