#include <doctest.h>

#include <cmath>

#include "cflab/error.hpp"
#include "cflab/graph.hpp"
#include "support/oracles.hpp"

using namespace cflab;

namespace {

Matrix random_dense(Index rows, Index cols, Rng& rng) { return testing::random_matrix(rows, cols, rng); }

SparseMatrix random_sparse(Index rows, Index cols, double density, Rng& rng) {
  std::bernoulli_distribution keep(density);
  std::normal_distribution<double> normal;
  std::vector<Triplet> t;
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) {
      if (keep(rng)) t.push_back({r, c, normal(rng)});
    }
  }
  return SparseMatrix::from_triplets(rows, cols, t);
}

}  // namespace

TEST_CASE("from_triplets sorts and validates") {
  const auto m = SparseMatrix::from_triplets(2, 3, {{1, 2, 4.0}, {0, 1, 2.0}, {1, 0, 3.0}});
  CHECK(m.nnz() == 3);
  CHECK(m.coeff(0, 1) == 2.0);
  CHECK(m.coeff(1, 0) == 3.0);
  CHECK(m.coeff(1, 2) == 4.0);
  CHECK(m.coeff(0, 0) == 0.0);
  CHECK(m.col_index() == std::vector<Index>{1, 0, 2});
  CHECK_THROWS_AS(SparseMatrix::from_triplets(2, 2, {{0, 0, 1.0}, {0, 0, 2.0}}), std::invalid_argument);
  CHECK_THROWS_AS(SparseMatrix::from_triplets(2, 2, {{2, 0, 1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(SparseMatrix::from_triplets(2, 2, {{0, 0, std::nan("")}}), std::invalid_argument);
}

TEST_CASE("spmm agrees with a dense product") {
  auto rng = make_rng({21});
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = random_sparse(4 + trial % 5, 4 + trial % 3, 0.4, rng);
    const auto x = random_dense(s.cols(), 3, rng);
    const Matrix expected = s.to_dense() * x;
    CHECK((spmm(s, x) - expected).cwiseAbs().maxCoeff() < 1e-12);
    const Vector v = x.col(0);
    CHECK((spmv(s, v) - s.to_dense() * v).cwiseAbs().maxCoeff() < 1e-12);
  }
  const auto s = random_sparse(3, 4, 0.5, rng);
  CHECK_THROWS_AS(spmm(s, Matrix::Zero(3, 2)), std::invalid_argument);
}

TEST_CASE("identity times E is E") {
  auto rng = make_rng({22});
  const auto e = random_dense(6, 3, rng);
  CHECK(spmm(SparseMatrix::identity(6), e) == e);
}

TEST_CASE("tiny graph structure") {
  const auto g = build_graph(testing::tiny_dataset());
  CHECK(g.n_nodes() == 4);
  CHECK(g.degree()(0) == 2);
  CHECK(g.degree()(1) == 1);
  CHECK(g.degree()(2) == 1);
  CHECK(g.degree()(3) == 2);
  CHECK(g.adjacency().nnz() == 6);

  const Matrix l = laplacian(g).to_dense();
  Matrix expected(4, 4);
  expected << 2, 0, -1, -1,
              0, 1, 0, -1,
              -1, 0, 1, 0,
              -1, -1, 0, 2;
  CHECK(l == expected);
  CHECK(spmm(laplacian(g), Matrix::Ones(4, 1)).cwiseAbs().maxCoeff() == 0.0);

  const auto na = normalized_adjacency(g);
  CHECK(na.coeff(0, 2) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
  CHECK(na.coeff(3, 0) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("empty training set is rejected") {
  CHECK_THROWS_AS(build_graph(InteractionDataset(2, 2, {})), EmptyDatasetError);
}

TEST_CASE("random graphs: structure, quadratic form, normalized entries") {
  auto rng = make_rng({23});
  for (int trial = 0; trial < 20; ++trial) {
    const auto ds = testing::random_dataset(5 + trial % 7, 6 + trial % 4, 0.25, rng);
    const auto g = build_graph(ds);
    const auto& a = g.adjacency();
    CHECK(a.is_symmetric());
    CHECK(a.nnz() == 2 * ds.n_interactions());
    const Matrix ad = a.to_dense();
    CHECK(ad.topLeftCorner(g.n_users(), g.n_users()).isZero());
    CHECK(ad.bottomRightCorner(g.n_items(), g.n_items()).isZero());
    CHECK(ad.diagonal().isZero());
    for (Index v = 0; v < g.n_nodes(); ++v) CHECK(ad.row(v).sum() == g.degree()(v));

    const auto l = laplacian(g);
    for (int s = 0; s < 5; ++s) {
      const Vector x = testing::random_matrix(g.n_nodes(), 1, rng).col(0);
      double edgewise = 0.0;
      for (Index r = 0; r < g.n_nodes(); ++r) {
        for (Index c = 0; c < g.n_nodes(); ++c) edgewise += 0.5 * ad(r, c) * (x(r) - x(c)) * (x(r) - x(c));
      }
      const double q = quadratic_form(l, x);
      CHECK(q >= 0.0);
      CHECK(std::abs(q - edgewise) <= 1e-10 * std::max(1.0, edgewise));
      CHECK(std::abs(q - x.dot(l.to_dense() * x)) <= 1e-10 * std::max(1.0, q));
    }

    const Matrix na = normalized_adjacency(g).to_dense();
    for (Index r = 0; r < g.n_nodes(); ++r) {
      for (Index c = 0; c < g.n_nodes(); ++c) {
        const double dr = g.degree()(r), dc = g.degree()(c);
        const double expected = ad(r, c) == 0.0 ? 0.0 : 1.0 / std::sqrt(dr * dc);
        CHECK(na(r, c) == doctest::Approx(expected).epsilon(1e-14));
      }
    }
  }
}

TEST_CASE("isolated nodes keep zero rows in the normalized adjacency") {
  const InteractionDataset ds(3, 3, {{0, 0}, {1, 0}});
  const Matrix na = normalized_adjacency(build_graph(ds)).to_dense();
  CHECK(na.allFinite());
  CHECK(na.row(2).isZero());
  CHECK(na.row(3 + 2).isZero());
  CHECK(na.col(3 + 1).isZero());
}
