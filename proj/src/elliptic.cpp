#include "ferro/elliptic.hpp"

#include "ferro/errors.hpp"

#include <Eigen/IterativeLinearSolvers>

#include <cmath>
#include <sstream>

namespace ferro {

struct AssembledSystem::Iterative {
  Eigen::BiCGSTAB<Eigen::SparseMatrix<double>, Eigen::IncompleteLUT<double>>
      solver;
};

AssembledSystem::~AssembledSystem() = default;

Mat AssembledSystem::strain_matrix(int cell, int local) const {
  const int d = grid_.dim();
  const Vec g = grid_.cell_gradients(cell).col(local);
  Mat B = Mat::Zero(sym_size(d), d);
  for (int i = 0; i < d; ++i) B(i, i) = g(i);
  for (int k = 0; k < sym_size(d) - d; ++k) {
    const auto [i, j] = off_diagonal_pair(d, k);
    B(d + k, i) = g(j) / kSqrt2;
    B(d + k, j) = g(i) / kSqrt2;
  }
  return B;
}

AssembledSystem::AssembledSystem(Grid grid, MaterialTensors tensors,
                                 LinearSolverOptions options)
    : grid_(std::move(grid)),
      tensors_(std::move(tensors)),
      options_(options),
      D_(assemble_block_D(tensors_)) {
  if (tensors_.dim != grid_.dim()) {
    throw InvalidArgument("grid and tensors have different dimensions");
  }
  const int d = grid_.dim();
  const int nfree = static_cast<int>(grid_.free_nodes().size());
  const int ndof = (d + 1) * nfree;
  const auto& fidx = grid_.free_index();
  const double vol = grid_.cell_measure();
  const Mat& C = tensors_.C;
  const Mat& e = tensors_.e;
  const Mat& eps = tensors_.eps;

  std::vector<Eigen::Triplet<double>> trip;
  for (int cell = 0; cell < grid_.num_cells(); ++cell) {
    const auto nodes = grid_.cell_nodes(cell);
    const Mat& G = grid_.cell_gradients(cell);
    std::vector<Mat> B;
    for (int a = 0; a <= d; ++a) B.push_back(strain_matrix(cell, a));
    for (int a = 0; a <= d; ++a) {
      const int fa = fidx[static_cast<std::size_t>(nodes[static_cast<std::size_t>(a)])];
      if (fa < 0) continue;
      for (int b = 0; b <= d; ++b) {
        const int fb = fidx[static_cast<std::size_t>(nodes[static_cast<std::size_t>(b)])];
        if (fb < 0) continue;
        const auto& Ba = B[static_cast<std::size_t>(a)];
        const auto& Bb = B[static_cast<std::size_t>(b)];
        const Mat kuu = vol * Ba.transpose() * C * Bb;
        const Vec kup = vol * Ba.transpose() * e.transpose() * G.col(b);
        const Vec kpu = -vol * Bb.transpose() * e.transpose() * G.col(a);
        const double kpp = vol * G.col(a).dot(eps * G.col(b));
        for (int i = 0; i < d; ++i) {
          for (int j = 0; j < d; ++j) {
            if (kuu(i, j) != 0.0) trip.emplace_back(fa * d + i, fb * d + j, kuu(i, j));
          }
          if (kup(i) != 0.0) trip.emplace_back(fa * d + i, d * nfree + fb, kup(i));
          if (kpu(i) != 0.0) trip.emplace_back(d * nfree + fa, fb * d + i, kpu(i));
        }
        if (kpp != 0.0) trip.emplace_back(d * nfree + fa, d * nfree + fb, kpp);
      }
    }
  }
  K_.resize(ndof, ndof);
  K_.setFromTriplets(trip.begin(), trip.end());
  K_.makeCompressed();
  if (ndof == 0) return;

  if (ndof <= options_.direct_limit) {
    lu_ = std::make_unique<Eigen::SparseLU<Eigen::SparseMatrix<double>>>();
    lu_->compute(K_);
    if (lu_->info() != Eigen::Success) {
      throw SingularSystem("sparse LU factorization failed: " +
                           lu_->lastErrorMessage());
    }
  } else {
    iterative_ = std::make_unique<Iterative>();
    iterative_->solver.setTolerance(0.1 * options_.relative_tolerance);
    iterative_->solver.setMaxIterations(20000);
    iterative_->solver.compute(K_);
    if (iterative_->solver.info() != Eigen::Success) {
      throw SingularSystem("incomplete LU preconditioner failed");
    }
  }
}

Vec AssembledSystem::rhs(const Mat& z, const Mat& b, const Vec& q) const {
  const int d = grid_.dim();
  const int s = sym_size(d);
  const int nfree = static_cast<int>(grid_.free_nodes().size());
  const auto& fidx = grid_.free_index();
  const double vol = grid_.cell_measure();
  const double mass_off = vol / ((d + 1.0) * (d + 2.0));
  const bool has_z = z.size() != 0;
  const bool has_b = b.size() != 0;
  const bool has_q = q.size() != 0;
  if (has_z && (z.rows() != s + d || z.cols() != grid_.num_cells())) {
    throw InvalidArgument("internal state has the wrong shape");
  }
  if (has_b && (b.rows() != d || b.cols() != grid_.num_nodes())) {
    throw InvalidArgument("body force has the wrong shape");
  }
  if (has_q && q.size() != grid_.num_nodes()) {
    throw InvalidArgument("charge density has the wrong shape");
  }

  Vec out = Vec::Zero(num_dofs());
  for (int cell = 0; cell < grid_.num_cells(); ++cell) {
    const auto nodes = grid_.cell_nodes(cell);
    const Mat& G = grid_.cell_gradients(cell);
    Vec Cr, eP;
    if (has_z) {
      const Vec r = z.col(cell).head(s);
      const Vec P = z.col(cell).tail(d);
      Cr = vol * (tensors_.C * r);
      eP = vol * (P - tensors_.e * r);
    }
    for (int a = 0; a <= d; ++a) {
      const int fa = fidx[static_cast<std::size_t>(nodes[static_cast<std::size_t>(a)])];
      if (fa < 0) continue;
      if (has_z) {
        out.segment(fa * d, d) += strain_matrix(cell, a).transpose() * Cr;
        out(d * nfree + fa) += G.col(a).dot(eP);
      }
      for (int c = 0; c <= d; ++c) {
        const int node = nodes[static_cast<std::size_t>(c)];
        const double m = mass_off * (a == c ? 2.0 : 1.0);
        if (has_b) out.segment(fa * d, d) += m * b.col(node);
        if (has_q) out(d * nfree + fa) += m * q(node);
      }
    }
  }
  return out;
}

Vec AssembledSystem::solve_linear(const Vec& rhs, double* residual) const {
  if (num_dofs() == 0) {
    if (residual) *residual = 0.0;
    return Vec();
  }
  Vec x;
  if (lu_) {
    x = lu_->solve(rhs);
  } else {
    x = iterative_->solver.solve(rhs);
  }
  const double nb = rhs.norm();
  const double res = nb == 0.0 ? (K_ * x).norm() : (K_ * x - rhs).norm() / nb;
  if (residual) *residual = res;
  if (!(res <= options_.relative_tolerance)) {
    std::ostringstream os;
    os.precision(3);
    os << "linear solve reached relative residual " << std::scientific << res;
    throw LinearSolveFailure(os.str());
  }
  return x;
}

void AssembledSystem::recover(const Vec& x, const Mat& z,
                              FieldState& out) const {
  const int d = grid_.dim();
  const int s = sym_size(d);
  const int nfree = static_cast<int>(grid_.free_nodes().size());
  out.u = Mat::Zero(d, grid_.num_nodes());
  out.phi = Vec::Zero(grid_.num_nodes());
  for (int f = 0; f < nfree; ++f) {
    const int node = grid_.free_nodes()[static_cast<std::size_t>(f)];
    out.u.col(node) = x.segment(f * d, d);
    out.phi(node) = x(d * nfree + f);
  }
  const int nc = grid_.num_cells();
  out.strain.resize(s, nc);
  out.E.resize(d, nc);
  out.sigma.resize(s, nc);
  out.D.resize(d, nc);
  for (int cell = 0; cell < nc; ++cell) {
    const auto nodes = grid_.cell_nodes(cell);
    const Mat& G = grid_.cell_gradients(cell);
    Mat grad_u = Mat::Zero(d, d);
    Vec grad_phi = Vec::Zero(d);
    for (int a = 0; a <= d; ++a) {
      const int node = nodes[static_cast<std::size_t>(a)];
      grad_u += out.u.col(node) * G.col(a).transpose();
      grad_phi += out.phi(node) * G.col(a);
    }
    out.strain.col(cell) = packed_symmetric_gradient(grad_u);
    out.E.col(cell) = -grad_phi;
    const Vec r = z.size() ? Vec(z.col(cell).head(s)) : Vec::Zero(s);
    const Vec P = z.size() ? Vec(z.col(cell).tail(d)) : Vec::Zero(d);
    const auto resp =
        direct_response(tensors_, out.strain.col(cell), out.E.col(cell), r, P);
    out.sigma.col(cell) = resp.sigma;
    out.D.col(cell) = resp.D;
  }
}

FieldState AssembledSystem::solve(const Mat& z, const Mat& b,
                                  const Vec& q) const {
  FieldState out;
  const Vec x = solve_linear(rhs(z, b, q), &out.residual);
  recover(x, z, out);
  return out;
}

Mat AssembledSystem::project_Q(const Mat& z) const {
  const FieldState fs = solve(z, Mat(), Vec());
  Mat out(field_rows(), num_cells());
  out.topRows(fs.strain.rows()) = fs.strain;
  out.bottomRows(fs.D.rows()) = fs.D;
  return out;
}

Mat AssembledSystem::apply_M(const Mat& z) const {
  return D_.matrix * (z - project_Q(z));
}

Mat AssembledSystem::load_trace(const Mat& b, const Vec& q) const {
  const FieldState fs = solve(Mat(), b, q);
  Mat out(field_rows(), num_cells());
  out.topRows(fs.sigma.rows()) = fs.sigma;
  out.bottomRows(fs.E.rows()) = fs.E;
  return out;
}

double AssembledSystem::inner(const Mat& a, const Mat& b) const {
  return grid_.cell_measure() * a.cwiseProduct(b).sum();
}

double AssembledSystem::inner_D(const Mat& a, const Mat& b) const {
  return inner(D_.matrix * a, b);
}

double lp_norm(const Mat& field, const Vec& measures, double p) {
  if (std::isinf(p)) {
    return field.cols() ? field.colwise().norm().maxCoeff() : 0.0;
  }
  double acc = 0.0;
  for (Eigen::Index k = 0; k < field.cols(); ++k) {
    acc += measures(k) * std::pow(field.col(k).norm(), p);
  }
  return std::pow(acc, 1.0 / p);
}

}  // namespace ferro
