#include "cflab/graph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "cflab/error.hpp"

namespace cflab {

SparseMatrix SparseMatrix::from_triplets(Index rows, Index cols, std::vector<Triplet> triplets) {
  if (rows < 0 || cols < 0) throw std::invalid_argument("sparse dimensions must be nonnegative");
  for (const auto& t : triplets) {
    if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols) {
      throw std::invalid_argument("triplet index out of range");
    }
    if (!std::isfinite(t.value)) throw std::invalid_argument("non-finite sparse value");
  }
  std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });

  SparseMatrix m;
  m.rows_ = rows;
  m.cols_ = cols;
  m.row_ptr_.assign(static_cast<std::size_t>(rows) + 1, 0);
  m.col_index_.reserve(triplets.size());
  m.values_.reserve(triplets.size());
  for (std::size_t k = 0; k < triplets.size(); ++k) {
    const auto& t = triplets[k];
    if (k > 0 && triplets[k - 1].row == t.row && triplets[k - 1].col == t.col) {
      throw std::invalid_argument("duplicate sparse entry (" + std::to_string(t.row) + ", " +
                                  std::to_string(t.col) + ")");
    }
    ++m.row_ptr_[static_cast<std::size_t>(t.row) + 1];
    m.col_index_.push_back(t.col);
    m.values_.push_back(t.value);
  }
  for (std::size_t r = 0; r < static_cast<std::size_t>(rows); ++r) {
    m.row_ptr_[r + 1] += m.row_ptr_[r];
  }
  return m;
}

SparseMatrix SparseMatrix::identity(Index n) {
  std::vector<Triplet> diag;
  diag.reserve(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) diag.push_back({i, i, 1.0});
  return from_triplets(n, n, std::move(diag));
}

double SparseMatrix::coeff(Index row, Index col) const {
  if (row < 0 || row >= rows_ || col < 0 || col >= cols_) {
    throw std::out_of_range("sparse coefficient out of range");
  }
  const auto begin = col_index_.begin() + row_ptr_[static_cast<std::size_t>(row)];
  const auto end = col_index_.begin() + row_ptr_[static_cast<std::size_t>(row) + 1];
  const auto it = std::lower_bound(begin, end, col);
  if (it == end || *it != col) return 0.0;
  return values_[static_cast<std::size_t>(it - col_index_.begin())];
}

Matrix SparseMatrix::to_dense() const {
  Matrix out = Matrix::Zero(rows_, cols_);
  for (Index r = 0; r < rows_; ++r) {
    for (Index k = row_ptr_[static_cast<std::size_t>(r)]; k < row_ptr_[static_cast<std::size_t>(r) + 1]; ++k) {
      out(r, col_index_[static_cast<std::size_t>(k)]) = values_[static_cast<std::size_t>(k)];
    }
  }
  return out;
}

bool SparseMatrix::is_symmetric(double tol) const {
  if (rows_ != cols_) return false;
  for (Index r = 0; r < rows_; ++r) {
    for (Index k = row_ptr_[static_cast<std::size_t>(r)]; k < row_ptr_[static_cast<std::size_t>(r) + 1]; ++k) {
      const Index c = col_index_[static_cast<std::size_t>(k)];
      if (std::abs(values_[static_cast<std::size_t>(k)] - coeff(c, r)) > tol) return false;
    }
  }
  return true;
}

Matrix spmm(const SparseMatrix& m, const Matrix& dense) {
  if (m.cols() != dense.rows()) {
    throw std::invalid_argument("spmm: " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                                " times " + std::to_string(dense.rows()) + "x" +
                                std::to_string(dense.cols()));
  }
  Matrix out = Matrix::Zero(m.rows(), dense.cols());
  const auto& ptr = m.row_ptr();
  const auto& col = m.col_index();
  const auto& val = m.values();
  for (Index r = 0; r < m.rows(); ++r) {
    auto out_row = out.row(r);
    for (Index k = ptr[static_cast<std::size_t>(r)]; k < ptr[static_cast<std::size_t>(r) + 1]; ++k) {
      out_row.noalias() += val[static_cast<std::size_t>(k)] * dense.row(col[static_cast<std::size_t>(k)]);
    }
  }
  return out;
}

Vector spmv(const SparseMatrix& m, const Vector& x) {
  if (m.cols() != x.size()) throw std::invalid_argument("spmv: dimension mismatch");
  Vector out = Vector::Zero(m.rows());
  const auto& ptr = m.row_ptr();
  const auto& col = m.col_index();
  const auto& val = m.values();
  for (Index r = 0; r < m.rows(); ++r) {
    double acc = 0.0;
    for (Index k = ptr[static_cast<std::size_t>(r)]; k < ptr[static_cast<std::size_t>(r) + 1]; ++k) {
      acc += val[static_cast<std::size_t>(k)] * x[col[static_cast<std::size_t>(k)]];
    }
    out[r] = acc;
  }
  return out;
}

BipartiteGraph::BipartiteGraph(Index n_users, Index n_items, SparseMatrix adjacency, Vector degree)
    : n_users_(n_users), n_items_(n_items), adjacency_(std::move(adjacency)), degree_(std::move(degree)) {
  if (adjacency_.rows() != n_nodes() || adjacency_.cols() != n_nodes() || degree_.size() != n_nodes()) {
    throw std::invalid_argument("bipartite graph dimensions are inconsistent");
  }
}

BipartiteGraph build_graph(const InteractionDataset& train) {
  if (train.empty()) throw EmptyDatasetError("cannot build a graph from an empty training set");
  const Index n = train.n_users() + train.n_items();
  std::vector<Triplet> entries;
  entries.reserve(2 * train.pairs().size());
  Vector degree = Vector::Zero(n);
  for (const auto& p : train.pairs()) {
    const Index item = train.n_users() + p.item;
    entries.push_back({p.user, item, 1.0});
    entries.push_back({item, p.user, 1.0});
    degree[p.user] += 1.0;
    degree[item] += 1.0;
  }
  return {train.n_users(), train.n_items(), SparseMatrix::from_triplets(n, n, std::move(entries)),
          std::move(degree)};
}

SparseMatrix laplacian(const BipartiteGraph& g) {
  const auto& a = g.adjacency();
  std::vector<Triplet> entries;
  entries.reserve(static_cast<std::size_t>(a.nnz() + g.n_nodes()));
  for (Index r = 0; r < a.rows(); ++r) {
    entries.push_back({r, r, g.degree()[r]});
    for (Index k = a.row_ptr()[static_cast<std::size_t>(r)]; k < a.row_ptr()[static_cast<std::size_t>(r) + 1]; ++k) {
      entries.push_back({r, a.col_index()[static_cast<std::size_t>(k)], -a.values()[static_cast<std::size_t>(k)]});
    }
  }
  return SparseMatrix::from_triplets(a.rows(), a.cols(), std::move(entries));
}

SparseMatrix normalized_adjacency(const BipartiteGraph& g) {
  const auto& a = g.adjacency();
  Vector inv_sqrt = Vector::Zero(g.n_nodes());
  for (Index v = 0; v < g.n_nodes(); ++v) {
    if (g.degree()[v] > 0) inv_sqrt[v] = 1.0 / std::sqrt(g.degree()[v]);
  }
  std::vector<Triplet> entries;
  entries.reserve(static_cast<std::size_t>(a.nnz()));
  for (Index r = 0; r < a.rows(); ++r) {
    for (Index k = a.row_ptr()[static_cast<std::size_t>(r)]; k < a.row_ptr()[static_cast<std::size_t>(r) + 1]; ++k) {
      const Index c = a.col_index()[static_cast<std::size_t>(k)];
      entries.push_back({r, c, inv_sqrt[r] * a.values()[static_cast<std::size_t>(k)] * inv_sqrt[c]});
    }
  }
  return SparseMatrix::from_triplets(a.rows(), a.cols(), std::move(entries));
}

double quadratic_form(const SparseMatrix& m, const Vector& x) { return x.dot(spmv(m, x)); }

}  // namespace cflab
