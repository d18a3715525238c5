#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "cflab/types.hpp"

namespace cflab {

// Deduplicated implicit-feedback interactions with dense 0-based ids.
class InteractionDataset {
 public:
  InteractionDataset() = default;

  // Throws std::invalid_argument on out-of-range indices or duplicate pairs.
  InteractionDataset(Index n_users, Index n_items, std::vector<Interaction> pairs);

  Index n_users() const noexcept { return n_users_; }
  Index n_items() const noexcept { return n_items_; }
  Index n_interactions() const noexcept { return static_cast<Index>(pairs_.size()); }
  bool empty() const noexcept { return pairs_.empty(); }

  const std::vector<Interaction>& pairs() const noexcept { return pairs_; }
  const std::vector<Index>& user_degree() const noexcept { return user_degree_; }
  const std::vector<Index>& item_degree() const noexcept { return item_degree_; }

  // Raw ids in index order; empty for datasets built in memory.
  const std::vector<std::string>& user_ids() const noexcept { return user_ids_; }
  const std::vector<std::string>& item_ids() const noexcept { return item_ids_; }
  void set_raw_ids(std::vector<std::string> users, std::vector<std::string> items);

  // Items of each user, in pair order.
  std::vector<std::vector<Index>> items_by_user() const;

 private:
  Index n_users_ = 0;
  Index n_items_ = 0;
  std::vector<Interaction> pairs_;
  std::vector<Index> user_degree_;
  std::vector<Index> item_degree_;
  std::vector<std::string> user_ids_;
  std::vector<std::string> item_ids_;
};

// Reads "raw_user raw_item" lines. Blank lines and '#' comments are skipped,
// ids are remapped in first-seen order and repeated pairs collapse to one.
// Throws ParseError (with 1-based line number) or EmptyDatasetError.
InteractionDataset load_interactions(const std::filesystem::path& path);
InteractionDataset parse_interactions(std::istream& in);

struct SplitRatios {
  double train = 0.8;
  double validation = 0.1;
  double test = 0.1;
};

struct SplitDataset {
  InteractionDataset train;
  std::vector<Interaction> validation;
  std::vector<Interaction> test;
  std::uint64_t split_seed = 0;

  Index n_users() const noexcept { return train.n_users(); }
  Index n_items() const noexcept { return train.n_items(); }
};

// Each user's interactions are shuffled with a generator keyed on
// (seed, user), then cut: validation and test get floor(n * ratio) each and
// the remainder goes to train.
SplitDataset split_per_user(const InteractionDataset& ds, SplitRatios ratios, std::uint64_t seed);

// Manifest: a "# cflab-split <n_users> <n_items> <seed>" header followed by
// "u i tag" lines with tag in {train, valid, test}.
void write_split_manifest(std::ostream& out, const SplitDataset& split);
void write_split_manifest(const std::filesystem::path& path, const SplitDataset& split);
SplitDataset read_split_manifest(std::istream& in);
SplitDataset read_split_manifest(const std::filesystem::path& path);

// "raw_id index" lines.
void write_id_map(const std::filesystem::path& path, const std::vector<std::string>& ids);
std::vector<std::string> read_id_map(const std::filesystem::path& path);

}  // namespace cflab
