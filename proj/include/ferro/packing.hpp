#pragma once

// Packed (Mandel) storage of symmetric d x d tensors: diagonal entries first,
// then off-diagonals in the order (2,3), (1,3), (1,2), each scaled by sqrt(2)
// so that the Frobenius product of two tensors equals the dot product of their
// packed vectors.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <utility>

namespace ferro {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kSqrt2 = 1.41421356237309504880;

constexpr int sym_size(int dim) { return dim * (dim + 1) / 2; }

/// Layout of the internal-variable space S^d x R^d: z = (r, P) with r packed.
struct InternalLayout {
  int dim = 1;

  constexpr int strain_size() const { return sym_size(dim); }
  constexpr int vector_size() const { return dim; }
  constexpr int size() const { return strain_size() + dim; }
  constexpr int polarization_offset() const { return strain_size(); }
};

/// Index pairs (i, j), i < j, of the packed off-diagonal slots for `dim`.
inline std::pair<int, int> off_diagonal_pair(int dim, int slot) {
  if (dim == 2) return {0, 1};
  static constexpr std::array<std::pair<int, int>, 3> k3 = {
      std::pair{1, 2}, std::pair{0, 2}, std::pair{0, 1}};
  return k3[static_cast<std::size_t>(slot)];
}

/// Packs a full symmetric matrix.
inline Vec pack_symmetric(const Mat& t) {
  const int d = static_cast<int>(t.rows());
  Vec out(sym_size(d));
  for (int i = 0; i < d; ++i) out(i) = t(i, i);
  for (int k = 0; k < sym_size(d) - d; ++k) {
    auto [i, j] = off_diagonal_pair(d, k);
    out(d + k) = kSqrt2 * 0.5 * (t(i, j) + t(j, i));
  }
  return out;
}

inline Mat unpack_symmetric(const Vec& packed, int dim) {
  Mat t = Mat::Zero(dim, dim);
  for (int i = 0; i < dim; ++i) t(i, i) = packed(i);
  for (int k = 0; k < sym_size(dim) - dim; ++k) {
    auto [i, j] = off_diagonal_pair(dim, k);
    t(i, j) = t(j, i) = packed(dim + k) / kSqrt2;
  }
  return t;
}

/// Packed symmetric gradient of a displacement gradient G(i, j) = d u_i / d x_j.
inline Vec packed_symmetric_gradient(const Mat& grad_u) {
  return pack_symmetric(0.5 * (grad_u + grad_u.transpose()));
}

}  // namespace ferro
