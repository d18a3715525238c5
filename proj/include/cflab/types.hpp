#pragma once

#include <cstddef>
#include <cstdint>

#include <Eigen/Dense>

namespace cflab {

using Index = std::ptrdiff_t;

// Row-major so that an entity's embedding is a contiguous row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// Embedding table over the bipartite node set: rows [0, n_users) are users,
// rows [n_users, n_users + n_items) are items.
using EmbeddingMatrix = Matrix;

struct Interaction {
  Index user = 0;
  Index item = 0;

  friend bool operator==(const Interaction&, const Interaction&) = default;
  friend auto operator<=>(const Interaction&, const Interaction&) = default;
};

}  // namespace cflab
