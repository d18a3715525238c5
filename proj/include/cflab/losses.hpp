#pragma once

#include <vector>

#include "cflab/dataset.hpp"
#include "cflab/random.hpp"
#include "cflab/types.hpp"

// Training objectives with analytic gradients. Batch losses take the
// embedding table in the users-then-items layout and the number of users, so
// item i lives in row n_users + i. Gradients have the table's shape and are
// zero on rows the batch does not touch.
namespace cflab {

// In-batch negatives are every user-item crossing of the batch pairs.
struct Batch {
  std::vector<Interaction> pairs;
};

struct LossValueAndGrad {
  double value = 0.0;
  EmbeddingMatrix grad;
};

enum class Similarity { cosine, inner_product };

// Norms below this are clamped when normalizing.
inline constexpr double kNormEpsilon = 1e-12;

// Sampled softmax with the batch items as the candidate set:
// mean over pairs of -log softmax_j(e_u . e_j)[i].
LossValueAndGrad ssm_loss(const EmbeddingMatrix& e, Index n_users, const Batch& batch);

struct JointLossParts {
  double alignment = 0.0;   // -(1/|D|) sum_{(u,i) in D} e_u . e_i
  double uniformity = 0.0;  // log sum_{U x I} d_u d_i exp(e_u . e_i)
};

// Full-data joint contrastive loss (alignment + uniformity). Degrees come
// from `ds`. Throws std::invalid_argument when |U| * |I| > 1e7.
JointLossParts joint_contrastive_parts(const EmbeddingMatrix& e, const InteractionDataset& ds);
LossValueAndGrad joint_contrastive_loss(const EmbeddingMatrix& e, const InteractionDataset& ds);

// DirectAU on L2-normalized embeddings: mean ||e_u - e_i||^2 plus beta times
// the user and item uniformity terms log mean_{a<b} exp(-2 ||x_a - x_b||^2)
// over batch positions. A side with fewer than two positions contributes 0.
LossValueAndGrad directau_loss(const EmbeddingMatrix& e, Index n_users, const Batch& batch,
                               double beta);

struct BprTriplet {
  Index user = 0;
  Index positive = 0;
  Index negative = 0;
};

// mean -log sigmoid(e_u . e_pos - e_u . e_neg).
LossValueAndGrad bpr_loss(const EmbeddingMatrix& e, Index n_users,
                          const std::vector<BprTriplet>& triplets);

// One uniformly drawn non-interacted item per batch pair. `user_items` must be
// sorted per user. Throws std::runtime_error after 100 rejected draws.
std::vector<BprTriplet> sample_bpr_triplets(const Batch& batch,
                                            const std::vector<std::vector<Index>>& user_items,
                                            Index n_items, Rng& rng);

struct SccfOptions {
  double tau = 0.25;
  bool squared_term = true;  // include exp(c^2 / tau)
  Similarity similarity = Similarity::cosine;
};

// exp(c / tau) + exp(c^2 / tau) for c the cosine of the two vectors.
double sccf_similarity(const Eigen::Ref<const Eigen::RowVectorXd>& a,
                       const Eigen::Ref<const Eigen::RowVectorXd>& b, double tau,
                       bool squared_term = true);

// -(1/m) sum_B log sim(u, i) + log((1/m^2) sum_{B x B} sim(u', i')).
LossValueAndGrad sccf_loss(const EmbeddingMatrix& e, Index n_users, const Batch& batch,
                           const SccfOptions& options);

}  // namespace cflab
