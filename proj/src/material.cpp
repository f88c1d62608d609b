#include "ferro/material.hpp"

#include "ferro/errors.hpp"

#include <Eigen/Eigenvalues>

#include <sstream>

namespace ferro {

namespace {

void require_shape(const Mat& m, int rows, int cols, const char* name) {
  if (m.rows() != rows || m.cols() != cols) {
    std::ostringstream os;
    os << name << " must be " << rows << "x" << cols << ", got " << m.rows()
       << "x" << m.cols();
    throw InvalidArgument(os.str());
  }
}

void require_symmetric(const Mat& m, const char* name) {
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw InvalidArgument(std::string(name) + " is not symmetric");
  }
}

double min_eigenvalue_sym(const Mat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (m + m.transpose()),
                                        Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

void require_positive_definite(const Mat& m, const char* name) {
  const double lmin = min_eigenvalue_sym(m);
  if (!(lmin > 0.0)) {
    std::ostringstream os;
    os.precision(17);
    os << name << " has eigenvalue " << lmin;
    throw NonPositiveDefinite(os.str());
  }
}

}  // namespace

double min_symmetric_eigenvalue(const Mat& m) { return min_eigenvalue_sym(m); }

MaterialTensors make_tensors(int dim, const ElasticParams& elastic,
                             const DielectricParams& dielectric,
                             const CouplingParams& coupling,
                             const HardeningParams& hardening) {
  if (dim < 1 || dim > 3) throw InvalidArgument("dim must be 1, 2 or 3");
  const int s = sym_size(dim);
  const int n = s + dim;

  MaterialTensors t;
  t.dim = dim;

  if (elastic.kind == ElasticParams::Kind::Isotropic) {
    t.C = 2.0 * elastic.mu * Mat::Identity(s, s);
    t.C.topLeftCorner(dim, dim).array() += elastic.lambda;
  } else {
    t.C = elastic.packed;
  }
  require_shape(t.C, s, s, "C");
  require_symmetric(t.C, "C");
  require_positive_definite(t.C, "C");

  t.eps = dielectric.matrix;
  require_shape(t.eps, dim, dim, "eps");
  require_symmetric(t.eps, "eps");
  require_positive_definite(t.eps, "eps");

  t.e = coupling.matrix.size() == 0 ? Mat::Zero(dim, s) : coupling.matrix;
  require_shape(t.e, dim, s, "e");

  t.L = hardening.matrix.size() == 0 ? Mat::Zero(n, n) : hardening.matrix;
  require_shape(t.L, n, n, "L");
  require_symmetric(t.L, "L");
  const double lmin = t.L.isZero(0.0) ? 0.0 : min_eigenvalue_sym(t.L);
  const double tol = 1e-12 * std::max(1.0, t.L.cwiseAbs().maxCoeff());
  if (lmin < -tol) {
    std::ostringstream os;
    os.precision(17);
    os << "L has eigenvalue " << lmin;
    throw NonPositiveDefinite(os.str());
  }
  t.hardening_min_eigenvalue = lmin;
  if (t.L.isZero(0.0)) {
    t.hardening = HardeningRegime::Zero;
  } else if (lmin > tol) {
    t.hardening = HardeningRegime::PositiveDefinite;
  } else {
    t.hardening = HardeningRegime::SemiDefinite;
  }
  return t;
}

BlockOperatorA assemble_block_A(const MaterialTensors& t) {
  const int s = sym_size(t.dim);
  const int d = t.dim;
  BlockOperatorA a;
  a.matrix.resize(s + d, s + d);
  a.matrix << t.C, t.e.transpose(), -t.e, t.eps;
  a.c0 = min_eigenvalue_sym(a.matrix);
  return a;
}

BlockOperatorD assemble_block_D(const MaterialTensors& t) {
  const int s = sym_size(t.dim);
  const int d = t.dim;
  const Mat eps_inv = t.eps.inverse();
  BlockOperatorD out;
  out.matrix.resize(s + d, s + d);
  out.matrix << t.C + t.e.transpose() * eps_inv * t.e,
      -t.e.transpose() * eps_inv, -eps_inv * t.e, eps_inv;
  // Symmetric by construction up to rounding in eps_inv.
  out.matrix = 0.5 * (out.matrix + out.matrix.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Mat> es(out.matrix);
  const Vec& lam = es.eigenvalues();
  out.lambda_min = lam.minCoeff();
  out.lambda_max = lam.maxCoeff();
  if (!(out.lambda_min > 0.0)) {
    std::ostringstream os;
    os.precision(17);
    os << "D has eigenvalue " << out.lambda_min;
    throw NonPositiveDefinite(os.str());
  }
  const Mat& V = es.eigenvectors();
  out.sqrt = V * lam.cwiseSqrt().asDiagonal() * V.transpose();
  out.inv_sqrt = V * lam.cwiseSqrt().cwiseInverse().asDiagonal() * V.transpose();
  out.inverse = V * lam.cwiseInverse().asDiagonal() * V.transpose();
  return out;
}

ConstitutiveResponse direct_response(const MaterialTensors& t,
                                     const Vec& strain, const Vec& E,
                                     const Vec& r, const Vec& P) {
  const Vec rev = strain - r;
  return {t.C * rev - t.e.transpose() * E, t.e * rev + t.eps * E + P};
}

}  // namespace ferro
