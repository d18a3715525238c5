#pragma once

#include <vector>

#include "cflab/dataset.hpp"
#include "cflab/types.hpp"

namespace cflab {

struct Triplet {
  Index row = 0;
  Index col = 0;
  double value = 0.0;
};

// Compressed sparse rows with column indices sorted within each row.
class SparseMatrix {
 public:
  SparseMatrix() = default;

  // Rejects duplicate coordinates, out-of-range indices and non-finite values.
  static SparseMatrix from_triplets(Index rows, Index cols, std::vector<Triplet> triplets);
  static SparseMatrix identity(Index n);

  Index rows() const noexcept { return rows_; }
  Index cols() const noexcept { return cols_; }
  Index nnz() const noexcept { return static_cast<Index>(values_.size()); }

  const std::vector<Index>& row_ptr() const noexcept { return row_ptr_; }
  const std::vector<Index>& col_index() const noexcept { return col_index_; }
  const std::vector<double>& values() const noexcept { return values_; }

  double coeff(Index row, Index col) const;
  Matrix to_dense() const;
  bool is_symmetric(double tol = 0.0) const;

 private:
  Index rows_ = 0;
  Index cols_ = 0;
  std::vector<Index> row_ptr_{0};
  std::vector<Index> col_index_;
  std::vector<double> values_;
};

// Throws std::invalid_argument on dimension mismatch.
Matrix spmm(const SparseMatrix& m, const Matrix& dense);
Vector spmv(const SparseMatrix& m, const Vector& x);

// Bipartite interaction graph over |U| + |I| nodes, users first.
class BipartiteGraph {
 public:
  BipartiteGraph() = default;
  BipartiteGraph(Index n_users, Index n_items, SparseMatrix adjacency, Vector degree);

  Index n_users() const noexcept { return n_users_; }
  Index n_items() const noexcept { return n_items_; }
  Index n_nodes() const noexcept { return n_users_ + n_items_; }
  Index item_node(Index item) const noexcept { return n_users_ + item; }
  Index n_edges() const noexcept { return adjacency_.nnz() / 2; }

  const SparseMatrix& adjacency() const noexcept { return adjacency_; }
  const Vector& degree() const noexcept { return degree_; }

 private:
  Index n_users_ = 0;
  Index n_items_ = 0;
  SparseMatrix adjacency_;
  Vector degree_;
};

// A_{u, |U|+i} = A_{|U|+i, u} = 1 for every training pair.
BipartiteGraph build_graph(const InteractionDataset& train);

// L = D - A.
SparseMatrix laplacian(const BipartiteGraph& g);

// D^{-1/2} A D^{-1/2}; isolated nodes keep all-zero rows and columns.
SparseMatrix normalized_adjacency(const BipartiteGraph& g);

// x^T M x.
double quadratic_form(const SparseMatrix& m, const Vector& x);

}  // namespace cflab
