#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <set>
#include <vector>

#include "cflab/dataset.hpp"
#include "cflab/random.hpp"
#include "cflab/types.hpp"

namespace cflab::testing {

// The path i0 - u0 - i1 - u1 as a two-user, two-item dataset.
inline InteractionDataset tiny_dataset() {
  return InteractionDataset(2, 2, {{0, 0}, {0, 1}, {1, 1}});
}

inline EmbeddingMatrix random_matrix(Index rows, Index cols, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  EmbeddingMatrix m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) m(r, c) = normal(rng);
  }
  return m;
}

// Every user gets at least one item; extra edges appear with probability p.
inline InteractionDataset random_dataset(Index n_users, Index n_items, double p, Rng& rng) {
  std::set<Interaction> pairs;
  for (Index u = 0; u < n_users; ++u) {
    pairs.insert({u, static_cast<Index>(uniform_index(rng, static_cast<std::uint64_t>(n_items)))});
  }
  std::bernoulli_distribution coin(p);
  for (Index u = 0; u < n_users; ++u) {
    for (Index i = 0; i < n_items; ++i) {
      if (coin(rng)) pairs.insert({u, i});
    }
  }
  return InteractionDataset(n_users, n_items, {pairs.begin(), pairs.end()});
}

// Like random_dataset, but every item is guaranteed an edge as well.
inline InteractionDataset random_connected_items(Index n_users, Index n_items, double p, Rng& rng) {
  auto ds = random_dataset(n_users, n_items, p, rng);
  std::set<Interaction> pairs(ds.pairs().begin(), ds.pairs().end());
  for (Index i = 0; i < n_items; ++i) {
    if (ds.item_degree()[static_cast<std::size_t>(i)] == 0) {
      pairs.insert({static_cast<Index>(uniform_index(rng, static_cast<std::uint64_t>(n_users))), i});
    }
  }
  return InteractionDataset(n_users, n_items, {pairs.begin(), pairs.end()});
}

// Central differences, one entry at a time.
inline EmbeddingMatrix numeric_gradient(const std::function<double(const EmbeddingMatrix&)>& f,
                                        const EmbeddingMatrix& x, double h = 1e-5) {
  EmbeddingMatrix grad(x.rows(), x.cols());
  EmbeddingMatrix probe = x;
  for (Index r = 0; r < x.rows(); ++r) {
    for (Index c = 0; c < x.cols(); ++c) {
      const double saved = probe(r, c);
      probe(r, c) = saved + h;
      const double up = f(probe);
      probe(r, c) = saved - h;
      const double down = f(probe);
      probe(r, c) = saved;
      grad(r, c) = (up - down) / (2.0 * h);
    }
  }
  return grad;
}

// ||a - b|| / max(||a||, ||b||), with a floor so that two zero gradients agree.
inline double relative_error(const EmbeddingMatrix& a, const EmbeddingMatrix& b) {
  const double scale = std::max({a.norm(), b.norm(), 1e-10});
  return (a - b).norm() / scale;
}

}  // namespace cflab::testing
