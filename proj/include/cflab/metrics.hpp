#pragma once

#include <optional>
#include <span>
#include <vector>

#include "cflab/dataset.hpp"
#include "cflab/losses.hpp"
#include "cflab/types.hpp"

namespace cflab {

// Top-k item indices by descending score, ties to the lower index. Items in
// `excluded` (sorted ascending) are skipped; the list is shorter than k when
// fewer items remain.
std::vector<Index> top_k_from_scores(std::span<const double> scores, int k,
                                     std::span<const Index> excluded);

// Ranks every item for `user` using the inference embeddings.
std::vector<Index> rank_topk(const EmbeddingMatrix& embeddings, Index n_users, Index user, int k,
                             std::span<const Index> excluded, Similarity similarity);

// |top-k ∩ truth| / |truth|; nullopt for empty truth.
std::optional<double> recall_at_k(std::span<const Index> ranked, std::span<const Index> truth, int k);

// Binary-relevance NDCG with log2(rank + 1) discounts; nullopt for empty truth.
std::optional<double> ndcg_at_k(std::span<const Index> ranked, std::span<const Index> truth, int k);

struct MetricsAtK {
  int k = 0;
  double recall = 0.0;
  double ndcg = 0.0;
};

struct EvalReport {
  std::vector<MetricsAtK> metrics;  // ascending k
  Index n_users = 0;  // users with non-empty ground truth
  int epoch = 0;
  double seconds = 0.0;

  // Throws std::out_of_range if k was not evaluated.
  const MetricsAtK& at(int k) const;
};

enum class EvalTarget { validation, test };

// Full-ranking evaluation macro-averaged over users with ground truth.
// Validation excludes training items; test also excludes validation items.
EvalReport evaluate(const EmbeddingMatrix& embeddings, const SplitDataset& split, EvalTarget target,
                    std::span<const int> ks, Similarity similarity);

}  // namespace cflab
