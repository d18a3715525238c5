#include "cflab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace cflab {

namespace {

constexpr Index kUserBlock = 256;

Matrix normalized(const Matrix& x) {
  Matrix out = x;
  for (Index r = 0; r < out.rows(); ++r) out.row(r) /= std::max(out.row(r).norm(), kNormEpsilon);
  return out;
}

std::vector<std::vector<Index>> group_by_user(Index n_users, const std::vector<Interaction>& pairs) {
  std::vector<std::vector<Index>> out(static_cast<std::size_t>(n_users));
  for (const auto& p : pairs) out[static_cast<std::size_t>(p.user)].push_back(p.item);
  for (auto& items : out) std::sort(items.begin(), items.end());
  return out;
}

std::size_t count_hits(std::span<const Index> ranked, std::span<const Index> truth, int k) {
  const std::unordered_set<Index> wanted(truth.begin(), truth.end());
  const auto limit = std::min(ranked.size(), static_cast<std::size_t>(std::max(k, 0)));
  std::size_t hits = 0;
  for (std::size_t r = 0; r < limit; ++r) hits += wanted.count(ranked[r]);
  return hits;
}

}  // namespace

std::vector<Index> top_k_from_scores(std::span<const double> scores, int k,
                                     std::span<const Index> excluded) {
  std::vector<Index> candidates;
  candidates.reserve(scores.size());
  std::size_t next_excluded = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const auto item = static_cast<Index>(i);
    while (next_excluded < excluded.size() && excluded[next_excluded] < item) ++next_excluded;
    if (next_excluded < excluded.size() && excluded[next_excluded] == item) continue;
    candidates.push_back(item);
  }
  const auto keep = std::min(candidates.size(), static_cast<std::size_t>(std::max(k, 0)));
  const auto better = [&](Index a, Index b) {
    const double sa = scores[static_cast<std::size_t>(a)];
    const double sb = scores[static_cast<std::size_t>(b)];
    return sa != sb ? sa > sb : a < b;
  };
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep),
                    candidates.end(), better);
  candidates.resize(keep);
  return candidates;
}

std::vector<Index> rank_topk(const EmbeddingMatrix& embeddings, Index n_users, Index user, int k,
                             std::span<const Index> excluded, Similarity similarity) {
  if (user < 0 || user >= n_users) throw std::invalid_argument("user index out of range");
  const Index n_items = embeddings.rows() - n_users;
  Eigen::RowVectorXd u = embeddings.row(user);
  Matrix items = embeddings.bottomRows(n_items);
  if (similarity == Similarity::cosine) {
    u /= std::max(u.norm(), kNormEpsilon);
    items = normalized(items);
  }
  const Vector scores = items * u.transpose();
  return top_k_from_scores(std::span<const double>(scores.data(), static_cast<std::size_t>(scores.size())), k,
                           excluded);
}

std::optional<double> recall_at_k(std::span<const Index> ranked, std::span<const Index> truth, int k) {
  if (truth.empty()) return std::nullopt;
  return static_cast<double>(count_hits(ranked, truth, k)) / static_cast<double>(truth.size());
}

std::optional<double> ndcg_at_k(std::span<const Index> ranked, std::span<const Index> truth, int k) {
  if (truth.empty()) return std::nullopt;
  const std::unordered_set<Index> wanted(truth.begin(), truth.end());
  const auto limit = std::min(ranked.size(), static_cast<std::size_t>(std::max(k, 0)));
  double dcg = 0.0;
  for (std::size_t r = 0; r < limit; ++r) {
    if (wanted.count(ranked[r])) dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  }
  const auto ideal_hits = std::min(wanted.size(), static_cast<std::size_t>(std::max(k, 0)));
  double idcg = 0.0;
  for (std::size_t r = 0; r < ideal_hits; ++r) idcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  return idcg > 0.0 ? dcg / idcg : 0.0;
}

const MetricsAtK& EvalReport::at(int k) const {
  for (const auto& m : metrics) {
    if (m.k == k) return m;
  }
  throw std::out_of_range("metrics at k=" + std::to_string(k) + " were not evaluated");
}

EvalReport evaluate(const EmbeddingMatrix& embeddings, const SplitDataset& split, EvalTarget target,
                    std::span<const int> ks, Similarity similarity) {
  const Index n_users = split.n_users();
  const Index n_items = split.n_items();
  if (embeddings.rows() != n_users + n_items) throw std::invalid_argument("embedding rows do not match split");
  if (ks.empty()) throw std::invalid_argument("need at least one cutoff");

  std::vector<int> cutoffs(ks.begin(), ks.end());
  std::sort(cutoffs.begin(), cutoffs.end());
  cutoffs.erase(std::unique(cutoffs.begin(), cutoffs.end()), cutoffs.end());
  const int max_k = cutoffs.back();

  auto excluded = group_by_user(n_users, split.train.pairs());
  const auto& truth_pairs = target == EvalTarget::validation ? split.validation : split.test;
  const auto truth = group_by_user(n_users, truth_pairs);
  if (target == EvalTarget::test) {
    const auto held = group_by_user(n_users, split.validation);
    for (std::size_t u = 0; u < excluded.size(); ++u) {
      auto& ex = excluded[u];
      ex.insert(ex.end(), held[u].begin(), held[u].end());
      std::sort(ex.begin(), ex.end());
    }
  }

  Matrix users = embeddings.topRows(n_users);
  Matrix items = embeddings.bottomRows(n_items);
  if (similarity == Similarity::cosine) {
    users = normalized(users);
    items = normalized(items);
  }

  EvalReport report;
  report.metrics.reserve(cutoffs.size());
  for (int k : cutoffs) report.metrics.push_back({k, 0.0, 0.0});

  for (Index u0 = 0; u0 < n_users; u0 += kUserBlock) {
    const Index b = std::min(kUserBlock, n_users - u0);
    const Matrix scores = users.middleRows(u0, b) * items.transpose();
    for (Index r = 0; r < b; ++r) {
      const auto u = static_cast<std::size_t>(u0 + r);
      if (truth[u].empty()) continue;
      const auto ranked = top_k_from_scores(
          std::span<const double>(scores.row(r).data(), static_cast<std::size_t>(n_items)), max_k, excluded[u]);
      for (auto& m : report.metrics) {
        m.recall += *recall_at_k(ranked, truth[u], m.k);
        m.ndcg += *ndcg_at_k(ranked, truth[u], m.k);
      }
      ++report.n_users;
    }
  }
  if (report.n_users > 0) {
    for (auto& m : report.metrics) {
      m.recall /= static_cast<double>(report.n_users);
      m.ndcg /= static_cast<double>(report.n_users);
    }
  }
  return report;
}

}  // namespace cflab
