#pragma once

// Structured box grid on [0, L1] x ... x [0, Ld], split into Kuhn simplices
// (d! per box). Simplices are the "cells": every field that lives on cells
// (strains, internal variables, driving forces) is constant on each of them.

#include "ferro/packing.hpp"

#include <array>
#include <vector>

namespace ferro {

class Grid {
 public:
  /// Throws InvalidArgument unless 1 <= dim <= 3, cells >= 1, lengths > 0.
  Grid(int dim, const std::vector<int>& cells_per_axis,
       const std::vector<double>& lengths);

  int dim() const { return dim_; }
  int cells_along(int axis) const { return n_[static_cast<std::size_t>(axis)]; }
  double length(int axis) const { return len_[static_cast<std::size_t>(axis)]; }
  double spacing(int axis) const { return length(axis) / cells_along(axis); }

  int num_nodes() const { return num_nodes_; }
  int num_boxes() const { return num_boxes_; }
  int simplices_per_box() const { return static_cast<int>(perms_.size()); }
  int num_cells() const { return num_boxes_ * simplices_per_box(); }

  /// All simplices have the same measure on a uniform grid.
  double cell_measure() const { return cell_measure_; }
  Vec cell_measures() const { return Vec::Constant(num_cells(), cell_measure_); }
  double volume() const;

  int box_of(int cell) const { return cell / simplices_per_box(); }
  std::array<int, 3> node_multi_index(int node) const;
  int node_index(const std::array<int, 3>& idx) const;
  Vec node_coords(int node) const;
  bool is_boundary(int node) const;

  /// Vertex node ids of a simplex (dim + 1 entries).
  std::vector<int> cell_nodes(int cell) const;
  /// Barycentric-coordinate gradients of the simplex, one column per vertex.
  const Mat& cell_gradients(int cell) const {
    return grads_[static_cast<std::size_t>(cell % simplices_per_box())];
  }
  Vec cell_centroid(int cell) const;

  /// Free (non-boundary) nodes in increasing order, and the inverse map
  /// (-1 for boundary nodes).
  const std::vector<int>& free_nodes() const { return free_; }
  const std::vector<int>& free_index() const { return free_index_; }

 private:
  int dim_;
  std::array<int, 3> n_{1, 1, 1};
  std::array<double, 3> len_{1.0, 1.0, 1.0};
  int num_nodes_ = 0;
  int num_boxes_ = 0;
  double cell_measure_ = 0.0;
  std::vector<std::array<int, 3>> perms_;
  std::vector<Mat> grads_;
  std::vector<int> free_;
  std::vector<int> free_index_;
};

}  // namespace ferro
