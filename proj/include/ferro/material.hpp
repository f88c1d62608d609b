#pragma once

#include "ferro/packing.hpp"

namespace ferro {

/// Elastic stiffness input: isotropic Lame pair or a packed (Mandel) matrix.
struct ElasticParams {
  enum class Kind { Isotropic, Packed } kind = Kind::Isotropic;
  double lambda = 0.0;
  double mu = 0.0;
  Mat packed;

  static ElasticParams isotropic(double lambda, double mu) {
    return {Kind::Isotropic, lambda, mu, {}};
  }
  static ElasticParams from_packed(Mat m) {
    return {Kind::Packed, 0.0, 0.0, std::move(m)};
  }
};

struct DielectricParams {
  Mat matrix;
  static DielectricParams diagonal(const Vec& diag) {
    return {diag.asDiagonal().toDenseMatrix()};
  }
  static DielectricParams full(Mat m) { return {std::move(m)}; }
};

/// Piezoelectric coupling, d x sym_size(d), mapping packed strain to a vector.
struct CouplingParams {
  Mat matrix;  // empty means zero coupling
  static CouplingParams none() { return {}; }
  static CouplingParams full(Mat m) { return {std::move(m)}; }
};

/// Hardening on the internal-variable space; empty means zero.
struct HardeningParams {
  Mat matrix;
  static HardeningParams none() { return {}; }
  static HardeningParams identity(double scale, int n) {
    return {scale * Mat::Identity(n, n)};
  }
  static HardeningParams full(Mat m) { return {std::move(m)}; }
};

enum class HardeningRegime {
  Zero,               // L = 0
  SemiDefinite,       // L >= 0, singular, nonzero
  PositiveDefinite,   // L > 0
};

/// Constant material coefficients in packed form. Immutable after make_tensors.
struct MaterialTensors {
  int dim = 1;
  Mat C;        // s x s elastic stiffness
  Mat eps;      // d x d dielectric tensor
  Mat e;        // d x s piezoelectric coupling
  Mat L;        // n x n hardening, n = s + d
  HardeningRegime hardening = HardeningRegime::Zero;
  double hardening_min_eigenvalue = 0.0;

  InternalLayout layout() const { return {dim}; }
};

/// Validates and assembles the tensors. Throws NonPositiveDefinite naming the
/// offending tensor, InvalidArgument on shape mismatch.
MaterialTensors make_tensors(int dim, const ElasticParams& elastic,
                             const DielectricParams& dielectric,
                             const CouplingParams& coupling,
                             const HardeningParams& hardening);

/// [[C, e^T], [-e, eps]] acting on (strain, gradient) pairs.
struct BlockOperatorA {
  Mat matrix;
  double c0 = 0.0;  // smallest eigenvalue of the symmetric part
};

BlockOperatorA assemble_block_A(const MaterialTensors& t);

/// [[C + e^T eps^-1 e, -e^T eps^-1], [-eps^-1 e, eps^-1]] on S^d x R^d, with
/// factors for the energy norm |D^{-1/2} w|.
struct BlockOperatorD {
  Mat matrix;
  Mat inverse;
  Mat sqrt;
  Mat inv_sqrt;
  double lambda_min = 0.0;
  double lambda_max = 0.0;
};

BlockOperatorD assemble_block_D(const MaterialTensors& t);

/// Stress and electric displacement from the direct constitutive law:
/// sigma = C(eps - r) - e^T E, D = e(eps - r) + eps E + P.
struct ConstitutiveResponse {
  Vec sigma;
  Vec D;
};
ConstitutiveResponse direct_response(const MaterialTensors& t,
                                     const Vec& strain, const Vec& E,
                                     const Vec& r, const Vec& P);

/// Smallest eigenvalue of the symmetric part of a square matrix.
double min_symmetric_eigenvalue(const Mat& m);

}  // namespace ferro
