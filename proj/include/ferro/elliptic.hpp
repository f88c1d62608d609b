#pragma once

// Linear piezoelectric boundary value problem with homogeneous Dirichlet data
// for u and phi, discretized with P1 elements on the Kuhn simplices of a Grid.
// Internal-variable fields are (s + d) x num_cells matrices, one column per
// cell holding (r packed, P).

#include "ferro/grid.hpp"
#include "ferro/material.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <memory>

namespace ferro {

struct LinearSolverOptions {
  double relative_tolerance = 1e-10;
  int direct_limit = 100000;  // above this many DOFs use BiCGSTAB
};

struct FieldState {
  Mat u;       // d x num_nodes
  Vec phi;     // num_nodes
  Mat strain;  // s x num_cells, packed eps(u)
  Mat E;       // d x num_cells, -grad phi
  Mat sigma;   // s x num_cells
  Mat D;       // d x num_cells
  double residual = 0.0;  // relative residual of the linear solve
};

class AssembledSystem {
 public:
  /// Assembles and factors. Throws SingularSystem if factorization fails.
  AssembledSystem(Grid grid, MaterialTensors tensors,
                  LinearSolverOptions options = {});
  ~AssembledSystem();
  AssembledSystem(const AssembledSystem&) = delete;
  AssembledSystem& operator=(const AssembledSystem&) = delete;

  const Grid& grid() const { return grid_; }
  const MaterialTensors& tensors() const { return tensors_; }
  const BlockOperatorD& block_D() const { return D_; }
  InternalLayout layout() const { return tensors_.layout(); }
  int num_cells() const { return grid_.num_cells(); }
  int field_rows() const { return layout().size(); }

  /// Unknowns ordered (u of free node 0..N-1 by component, then phi).
  int num_dofs() const { return static_cast<int>(K_.rows()); }
  const Eigen::SparseMatrix<double>& matrix() const { return K_; }

  /// Right-hand side l(V) for internal state z, nodal body force b and
  /// nodal charge density q (interpolated, integrated with the P1 mass).
  Vec rhs(const Mat& z, const Mat& b, const Vec& q) const;
  /// Solves K x = rhs. Throws LinearSolveFailure if the relative residual
  /// exceeds the configured tolerance.
  Vec solve_linear(const Vec& rhs, double* residual = nullptr) const;

  FieldState solve(const Mat& z, const Mat& b, const Vec& q) const;
  /// Q z = (eps(u0), D0) from the solve with zero loads.
  Mat project_Q(const Mat& z) const;
  /// M z = D (z - Q z) cellwise.
  Mat apply_M(const Mat& z) const;
  /// zhat = (sigma_B, E_B) from the solve with z = 0.
  Mat load_trace(const Mat& b, const Vec& q) const;

  /// sum_K |K| a_K . b_K
  double inner(const Mat& a, const Mat& b) const;
  double inner_D(const Mat& a, const Mat& b) const;  // with D applied to a

  Mat zero_field() const { return Mat::Zero(field_rows(), num_cells()); }
  Mat zero_body_force() const { return Mat::Zero(grid_.dim(), grid_.num_nodes()); }
  Vec zero_charge() const { return Vec::Zero(grid_.num_nodes()); }

 private:
  Mat strain_matrix(int cell, int local) const;  // s x d, maps u_a to eps
  void recover(const Vec& x, const Mat& z, FieldState& out) const;

  Grid grid_;
  MaterialTensors tensors_;
  LinearSolverOptions options_;
  BlockOperatorD D_;
  Eigen::SparseMatrix<double> K_;
  std::unique_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double>>> lu_;
  struct Iterative;
  std::unique_ptr<Iterative> iterative_;
};

/// (sum_K |K| |field_K|^p)^(1/p); p = inf gives the max column norm.
double lp_norm(const Mat& field, const Vec& measures, double p);

/// Sample a scalar function at the nodes.
template <class F>
Vec nodal_samples(const Grid& grid, F fn) {
  Vec out(grid.num_nodes());
  for (int n = 0; n < grid.num_nodes(); ++n) out(n) = fn(grid.node_coords(n));
  return out;
}

}  // namespace ferro
