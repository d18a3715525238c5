#include "cflab/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "cflab/error.hpp"
#include "cflab/random.hpp"

namespace cflab {

namespace {

struct PairHash {
  std::size_t operator()(const Interaction& p) const noexcept {
    const auto u = static_cast<std::uint64_t>(p.user);
    const auto i = static_cast<std::uint64_t>(p.item);
    return std::hash<std::uint64_t>{}(u * 0x9E3779B97F4A7C15ULL ^ i);
  }
};

class IdRemapper {
 public:
  Index add(const std::string& raw) {
    auto [it, inserted] = index_.try_emplace(raw, static_cast<Index>(ids_.size()));
    if (inserted) ids_.push_back(raw);
    return it->second;
  }

  Index size() const { return static_cast<Index>(ids_.size()); }
  std::vector<std::string> take() { return std::move(ids_); }

 private:
  std::unordered_map<std::string, Index> index_;
  std::vector<std::string> ids_;
};

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

bool is_skippable(const std::string& line) {
  const auto pos = line.find_first_not_of(" \t\r");
  return pos == std::string::npos || line[pos] == '#';
}

// Number of entries assigned to a held-out part; the small offset keeps
// exact products such as 10 * 0.1 from rounding below the integer.
Index held_out_count(Index n, double ratio) {
  return static_cast<Index>(std::floor(static_cast<double>(n) * ratio + 1e-9));
}

}  // namespace

InteractionDataset::InteractionDataset(Index n_users, Index n_items,
                                       std::vector<Interaction> pairs)
    : n_users_(n_users),
      n_items_(n_items),
      pairs_(std::move(pairs)),
      user_degree_(static_cast<std::size_t>(std::max<Index>(n_users, 0)), 0),
      item_degree_(static_cast<std::size_t>(std::max<Index>(n_items, 0)), 0) {
  if (n_users < 0 || n_items < 0) {
    throw std::invalid_argument("dataset sizes must be nonnegative");
  }
  std::unordered_set<Interaction, PairHash> seen;
  seen.reserve(pairs_.size());
  for (const auto& p : pairs_) {
    if (p.user < 0 || p.user >= n_users_ || p.item < 0 || p.item >= n_items_) {
      throw std::invalid_argument("interaction index out of range");
    }
    if (!seen.insert(p).second) {
      throw std::invalid_argument("duplicate interaction (" + std::to_string(p.user) + ", " +
                                  std::to_string(p.item) + ")");
    }
    ++user_degree_[static_cast<std::size_t>(p.user)];
    ++item_degree_[static_cast<std::size_t>(p.item)];
  }
}

void InteractionDataset::set_raw_ids(std::vector<std::string> users,
                                     std::vector<std::string> items) {
  if (static_cast<Index>(users.size()) != n_users_ ||
      static_cast<Index>(items.size()) != n_items_) {
    throw std::invalid_argument("raw id map size does not match dataset");
  }
  user_ids_ = std::move(users);
  item_ids_ = std::move(items);
}

std::vector<std::vector<Index>> InteractionDataset::items_by_user() const {
  std::vector<std::vector<Index>> out(static_cast<std::size_t>(n_users_));
  for (std::size_t u = 0; u < out.size(); ++u) out[u].reserve(static_cast<std::size_t>(user_degree_[u]));
  for (const auto& p : pairs_) out[static_cast<std::size_t>(p.user)].push_back(p.item);
  return out;
}

InteractionDataset parse_interactions(std::istream& in) {
  IdRemapper users;
  IdRemapper items;
  std::vector<Interaction> pairs;
  std::unordered_set<Interaction, PairHash> seen;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_skippable(line)) continue;
    std::istringstream fields(line);
    std::string raw_user;
    std::string raw_item;
    std::string extra;
    if (!(fields >> raw_user >> raw_item)) {
      throw ParseError(line_no, "expected two whitespace-separated ids");
    }
    if (fields >> extra) {
      throw ParseError(line_no, "unexpected third field '" + extra + "'");
    }
    const Interaction p{users.add(raw_user), items.add(raw_item)};
    if (seen.insert(p).second) pairs.push_back(p);
  }
  if (pairs.empty()) throw EmptyDatasetError("no interactions found");

  InteractionDataset ds(users.size(), items.size(), std::move(pairs));
  ds.set_raw_ids(users.take(), items.take());
  return ds;
}

InteractionDataset load_interactions(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_interactions(in);
}

SplitDataset split_per_user(const InteractionDataset& ds, SplitRatios ratios,
                            std::uint64_t seed) {
  if (ratios.train < 0 || ratios.validation < 0 || ratios.test < 0 ||
      std::abs(ratios.train + ratios.validation + ratios.test - 1.0) > 1e-9) {
    throw std::invalid_argument("split ratios must be nonnegative and sum to 1");
  }
  auto by_user = ds.items_by_user();

  std::vector<Interaction> train;
  SplitDataset split;
  split.split_seed = seed;
  train.reserve(static_cast<std::size_t>(ds.n_interactions()));

  for (std::size_t u = 0; u < by_user.size(); ++u) {
    auto& items = by_user[u];
    auto rng = make_rng({seed, static_cast<std::uint64_t>(u)});
    shuffle(std::span<Index>(items), rng);

    const auto n = static_cast<Index>(items.size());
    const Index n_valid = held_out_count(n, ratios.validation);
    const Index n_test = held_out_count(n, ratios.test);
    const Index n_train = n - n_valid - n_test;

    const auto user = static_cast<Index>(u);
    Index k = 0;
    for (; k < n_train; ++k) train.push_back({user, items[static_cast<std::size_t>(k)]});
    for (; k < n_train + n_valid; ++k) split.validation.push_back({user, items[static_cast<std::size_t>(k)]});
    for (; k < n; ++k) split.test.push_back({user, items[static_cast<std::size_t>(k)]});
  }

  split.train = InteractionDataset(ds.n_users(), ds.n_items(), std::move(train));
  if (!ds.user_ids().empty()) split.train.set_raw_ids(ds.user_ids(), ds.item_ids());
  return split;
}

void write_split_manifest(std::ostream& out, const SplitDataset& split) {
  out << "# cflab-split " << split.n_users() << ' ' << split.n_items() << ' '
      << split.split_seed << '\n';
  for (const auto& p : split.train.pairs()) out << p.user << ' ' << p.item << " train\n";
  for (const auto& p : split.validation) out << p.user << ' ' << p.item << " valid\n";
  for (const auto& p : split.test) out << p.user << ' ' << p.item << " test\n";
}

void write_split_manifest(const std::filesystem::path& path, const SplitDataset& split) {
  auto out = open_output(path);
  write_split_manifest(out, split);
}

SplitDataset read_split_manifest(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  Index n_users = -1;
  Index n_items = -1;
  SplitDataset split;
  std::vector<Interaction> train;

  while (std::getline(in, line)) {
    ++line_no;
    if (line.rfind("# cflab-split", 0) == 0) {
      std::istringstream header(line.substr(13));
      if (!(header >> n_users >> n_items >> split.split_seed)) {
        throw ParseError(line_no, "malformed split header");
      }
      continue;
    }
    if (is_skippable(line)) continue;
    if (n_users < 0) throw ParseError(line_no, "missing split header");

    std::istringstream fields(line);
    Interaction p;
    std::string tag;
    if (!(fields >> p.user >> p.item >> tag)) throw ParseError(line_no, "expected 'u i tag'");
    if (tag == "train") {
      train.push_back(p);
    } else if (tag == "valid") {
      split.validation.push_back(p);
    } else if (tag == "test") {
      split.test.push_back(p);
    } else {
      throw ParseError(line_no, "unknown split tag '" + tag + "'");
    }
  }
  if (n_users < 0) throw EmptyDatasetError("split manifest has no header");
  split.train = InteractionDataset(n_users, n_items, std::move(train));
  return split;
}

SplitDataset read_split_manifest(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_split_manifest(in);
}

void write_id_map(const std::filesystem::path& path, const std::vector<std::string>& ids) {
  auto out = open_output(path);
  for (std::size_t i = 0; i < ids.size(); ++i) out << ids[i] << ' ' << i << '\n';
}

std::vector<std::string> read_id_map(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::vector<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_skippable(line)) continue;
    std::istringstream fields(line);
    std::string raw;
    std::size_t index = 0;
    if (!(fields >> raw >> index)) throw ParseError(line_no, "expected 'raw_id index'");
    if (index != ids.size()) throw ParseError(line_no, "id map indices must be contiguous");
    ids.push_back(raw);
  }
  return ids;
}

}  // namespace cflab
