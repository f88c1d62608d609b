#pragma once

// Shared fixtures for the unit and acceptance suites: random tensors and the
// strong-form forcing of a manufactured displacement/potential pair.

#include "ferro/elliptic.hpp"
#include "ferro/material.hpp"

#include <cmath>
#include <random>

namespace ferro::testing {

inline constexpr double kPi = 3.14159265358979323846;

inline Mat random_matrix(int rows, int cols, std::mt19937_64& rng,
                         double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

inline Mat random_spd(int n, std::mt19937_64& rng, double shift = 1.0) {
  const Mat a = random_matrix(n, n, rng, 0.5);
  return a * a.transpose() + shift * Mat::Identity(n, n);
}

inline Vec random_unit(int n, std::mt19937_64& rng) {
  Vec v = random_matrix(n, 1, rng);
  return v.normalized();
}

/// Coupled tensors with nonzero piezoelectric coupling.
inline MaterialTensors coupled_tensors(int dim, double coupling = 0.4,
                                       double hardening = 0.0) {
  const int s = sym_size(dim);
  Mat e = Mat::Zero(dim, s);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < s; ++j) e(i, j) = coupling * (1.0 + 0.3 * i - 0.2 * j);
  }
  Vec eps(dim);
  for (int i = 0; i < dim; ++i) eps(i) = 1.5 + 0.25 * i;
  return make_tensors(dim, ElasticParams::isotropic(1.0, 1.0),
                      DielectricParams::diagonal(eps), CouplingParams::full(e),
                      hardening > 0.0
                          ? HardeningParams::identity(hardening, s + dim)
                          : HardeningParams::none());
}

inline Mat random_field(const AssembledSystem& sys, std::mt19937_64& rng) {
  return random_matrix(sys.field_rows(), sys.num_cells(), rng);
}

/// S(x) = prod sin(pi x_k / L_k) with gradient and Hessian.
struct SineProduct {
  const Grid* grid;
  double value(const Vec& x) const {
    double s = 1.0;
    for (int k = 0; k < x.size(); ++k) s *= std::sin(kPi * x(k) / grid->length(k));
    return s;
  }
  Mat hessian(const Vec& x) const {
    const int d = static_cast<int>(x.size());
    Mat H(d, d);
    for (int k = 0; k < d; ++k) {
      for (int l = 0; l < d; ++l) {
        double v = 1.0;
        for (int a = 0; a < d; ++a) {
          const double w = kPi / grid->length(a);
          const int order = (a == k) + (a == l);
          if (order == 0) v *= std::sin(w * x(a));
          if (order == 1) v *= w * std::cos(w * x(a));
          if (order == 2) v *= -w * w * std::sin(w * x(a));
        }
        H(k, l) = v;
      }
    }
    return H;
  }
};

/// Strong-form loads (b = -div sigma, q = div D) for u = a S(x), phi = c S(x)
/// with r = P = 0, evaluated at the nodes.
inline void manufactured_loads(const Grid& grid, const MaterialTensors& t,
                               const Vec& a, double c, Mat& b, Vec& q) {
  const int d = grid.dim();
  SineProduct S{&grid};
  b = Mat::Zero(d, grid.num_nodes());
  q = Vec::Zero(grid.num_nodes());
  for (int n = 0; n < grid.num_nodes(); ++n) {
    const Vec x = grid.node_coords(n);
    const Mat H = S.hessian(x);
    Vec div_sigma = Vec::Zero(d);
    double div_D = 0.0;
    for (int j = 0; j < d; ++j) {
      const Mat Gj = a * H.col(j).transpose();  // d_j (d_k u_i)
      const Vec deps = packed_symmetric_gradient(Gj);
      const Vec dgrad_phi = c * H.col(j);
      const Mat dsigma =
          unpack_symmetric(t.C * deps + t.e.transpose() * dgrad_phi, d);
      const Vec dD = t.e * deps - t.eps * dgrad_phi;
      div_sigma += dsigma.col(j);
      div_D += dD(j);
    }
    b.col(n) = -div_sigma;
    q(n) = div_D;
  }
}

/// Grid-L2 nodal error of (u, phi) against the manufactured pair.
inline double manufactured_error(const Grid& grid, const FieldState& fs,
                                 const Vec& a, double c) {
  SineProduct S{&grid};
  double w = 1.0;
  for (int k = 0; k < grid.dim(); ++k) w *= grid.spacing(k);
  double acc = 0.0;
  for (int n = 0; n < grid.num_nodes(); ++n) {
    const double s = S.value(grid.node_coords(n));
    acc += (fs.u.col(n) - a * s).squaredNorm() + std::pow(fs.phi(n) - c * s, 2);
  }
  return std::sqrt(w * acc);
}

}  // namespace ferro::testing
