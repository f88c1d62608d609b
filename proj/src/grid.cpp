#include "ferro/grid.hpp"

#include "ferro/errors.hpp"

#include <algorithm>
#include <numeric>

namespace ferro {

Grid::Grid(int dim, const std::vector<int>& cells_per_axis,
           const std::vector<double>& lengths)
    : dim_(dim) {
  if (dim < 1 || dim > 3) throw InvalidArgument("grid dim must be 1, 2 or 3");
  if (static_cast<int>(cells_per_axis.size()) != dim ||
      static_cast<int>(lengths.size()) != dim) {
    throw InvalidArgument("grid needs one cell count and one length per axis");
  }
  for (int a = 0; a < dim; ++a) {
    const auto i = static_cast<std::size_t>(a);
    if (cells_per_axis[i] < 1) throw InvalidArgument("grid cells must be >= 1");
    if (!(lengths[i] > 0.0)) throw InvalidArgument("grid lengths must be > 0");
    n_[i] = cells_per_axis[i];
    len_[i] = lengths[i];
  }
  num_nodes_ = 1;
  num_boxes_ = 1;
  double box = 1.0;
  for (int a = 0; a < dim; ++a) {
    num_nodes_ *= cells_along(a) + 1;
    num_boxes_ *= cells_along(a);
    box *= spacing(a);
  }

  std::array<int, 3> p{0, 1, 2};
  do {
    perms_.push_back(p);
  } while (std::next_permutation(p.begin(), p.begin() + dim));
  cell_measure_ = box / static_cast<double>(perms_.size());

  // Simplex {1 >= t_p0 >= ... >= t_p(d-1) >= 0} in scaled coordinates
  // t_i = x_i / h_i: lambda_0 = 1 - t_p0, lambda_k = t_p(k-1) - t_pk,
  // lambda_d = t_p(d-1).
  for (const auto& perm : perms_) {
    Mat g = Mat::Zero(dim, dim + 1);
    for (int k = 0; k < dim; ++k) {
      const int axis = perm[static_cast<std::size_t>(k)];
      const double inv_h = 1.0 / spacing(axis);
      g(axis, k) -= inv_h;
      g(axis, k + 1) += inv_h;
    }
    grads_.push_back(g);
  }

  free_index_.assign(static_cast<std::size_t>(num_nodes_), -1);
  for (int node = 0; node < num_nodes_; ++node) {
    if (!is_boundary(node)) {
      free_index_[static_cast<std::size_t>(node)] = static_cast<int>(free_.size());
      free_.push_back(node);
    }
  }
}

double Grid::volume() const {
  double v = 1.0;
  for (int a = 0; a < dim_; ++a) v *= length(a);
  return v;
}

std::array<int, 3> Grid::node_multi_index(int node) const {
  std::array<int, 3> idx{0, 0, 0};
  for (int a = 0; a < dim_; ++a) {
    const int stride = cells_along(a) + 1;
    idx[static_cast<std::size_t>(a)] = node % stride;
    node /= stride;
  }
  return idx;
}

int Grid::node_index(const std::array<int, 3>& idx) const {
  int node = 0;
  for (int a = dim_ - 1; a >= 0; --a) {
    node = node * (cells_along(a) + 1) + idx[static_cast<std::size_t>(a)];
  }
  return node;
}

Vec Grid::node_coords(int node) const {
  const auto idx = node_multi_index(node);
  Vec x(dim_);
  for (int a = 0; a < dim_; ++a) {
    x(a) = idx[static_cast<std::size_t>(a)] * spacing(a);
  }
  return x;
}

bool Grid::is_boundary(int node) const {
  const auto idx = node_multi_index(node);
  for (int a = 0; a < dim_; ++a) {
    const int i = idx[static_cast<std::size_t>(a)];
    if (i == 0 || i == cells_along(a)) return true;
  }
  return false;
}

std::vector<int> Grid::cell_nodes(int cell) const {
  int box = box_of(cell);
  const auto& perm = perms_[static_cast<std::size_t>(cell % simplices_per_box())];
  std::array<int, 3> idx{0, 0, 0};
  for (int a = 0; a < dim_; ++a) {
    idx[static_cast<std::size_t>(a)] = box % cells_along(a);
    box /= cells_along(a);
  }
  std::vector<int> nodes;
  nodes.reserve(static_cast<std::size_t>(dim_ + 1));
  nodes.push_back(node_index(idx));
  for (int k = 0; k < dim_; ++k) {
    ++idx[static_cast<std::size_t>(perm[static_cast<std::size_t>(k)])];
    nodes.push_back(node_index(idx));
  }
  return nodes;
}

Vec Grid::cell_centroid(int cell) const {
  Vec c = Vec::Zero(dim_);
  const auto nodes = cell_nodes(cell);
  for (int n : nodes) c += node_coords(n);
  return c / static_cast<double>(nodes.size());
}

}  // namespace ferro
