#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "cflab/dataset.hpp"
#include "cflab/error.hpp"
#include "support/oracles.hpp"

using namespace cflab;

namespace {

InteractionDataset parse(const std::string& text) {
  std::istringstream in(text);
  return parse_interactions(in);
}

std::set<Interaction> as_set(const std::vector<Interaction>& v) { return {v.begin(), v.end()}; }

std::string manifest_text(const SplitDataset& split) {
  std::ostringstream out;
  write_split_manifest(out, split);
  return out.str();
}

}  // namespace

TEST_CASE("parse remaps ids in first-seen order and counts degrees") {
  const auto ds = parse("a x\na y\nb y\n");
  CHECK(ds.n_users() == 2);
  CHECK(ds.n_items() == 2);
  CHECK(ds.n_interactions() == 3);
  CHECK(ds.user_degree() == std::vector<Index>{2, 1});
  CHECK(ds.item_degree() == std::vector<Index>{1, 2});
  CHECK(ds.user_ids() == std::vector<std::string>{"a", "b"});
  CHECK(ds.item_ids() == std::vector<std::string>{"x", "y"});
}

TEST_CASE("duplicate lines collapse") {
  const auto ds = parse("a x\na x\n");
  CHECK(ds.n_interactions() == 1);
}

TEST_CASE("comments, blank lines and tabs") {
  const auto ds = parse("# header\n\nu1\ti1\n  \nu2 i1\n");
  CHECK(ds.n_users() == 2);
  CHECK(ds.n_items() == 1);
  CHECK(ds.n_interactions() == 2);
}

TEST_CASE("malformed lines report their line number") {
  try {
    parse("a x\nb\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(parse("a x y\n"), ParseError);
}

TEST_CASE("empty input is rejected") {
  CHECK_THROWS_AS(parse(""), EmptyDatasetError);
  CHECK_THROWS_AS(parse("# only a comment\n\n"), EmptyDatasetError);
  CHECK_THROWS_AS(load_interactions("/nonexistent/cflab/file.txt"), std::runtime_error);
}

TEST_CASE("in-memory construction validates pairs") {
  CHECK_THROWS_AS(InteractionDataset(2, 2, {{0, 0}, {0, 0}}), std::invalid_argument);
  CHECK_THROWS_AS(InteractionDataset(2, 2, {{2, 0}}), std::invalid_argument);
  CHECK_THROWS_AS(InteractionDataset(2, 2, {{0, -1}}), std::invalid_argument);
}

TEST_CASE("degrees match the pairs on random datasets") {
  auto rng = make_rng({11});
  for (int trial = 0; trial < 20; ++trial) {
    const auto ds = testing::random_dataset(3 + trial, 4 + trial / 2, 0.2, rng);
    std::vector<Index> du(static_cast<std::size_t>(ds.n_users())), di(static_cast<std::size_t>(ds.n_items()));
    for (const auto& p : ds.pairs()) {
      ++du[static_cast<std::size_t>(p.user)];
      ++di[static_cast<std::size_t>(p.item)];
    }
    CHECK(du == ds.user_degree());
    CHECK(di == ds.item_degree());
    CHECK(std::accumulate(du.begin(), du.end(), Index{0}) == ds.n_interactions());
    CHECK(std::accumulate(di.begin(), di.end(), Index{0}) == ds.n_interactions());
  }
}

TEST_CASE("per-user split counts") {
  std::vector<Interaction> pairs;
  for (Index i = 0; i < 10; ++i) pairs.push_back({0, i});
  pairs.push_back({1, 3});
  for (Index i = 0; i < 3; ++i) pairs.push_back({2, i});
  const InteractionDataset ds(3, 10, pairs);
  const auto split = split_per_user(ds, {}, 7);

  auto count = [](const std::vector<Interaction>& v, Index u) {
    return std::count_if(v.begin(), v.end(), [u](const Interaction& p) { return p.user == u; });
  };
  CHECK(count(split.train.pairs(), 0) == 8);
  CHECK(count(split.validation, 0) == 1);
  CHECK(count(split.test, 0) == 1);
  CHECK(count(split.train.pairs(), 1) == 1);
  CHECK(count(split.validation, 1) == 0);
  CHECK(count(split.test, 1) == 0);
  // floor(3 * 0.1) = 0, so a three-interaction user keeps everything in train.
  CHECK(count(split.train.pairs(), 2) == 3);
}

TEST_CASE("split partitions the source pairs and is deterministic") {
  auto rng = make_rng({12});
  for (int trial = 0; trial < 10; ++trial) {
    const auto ds = testing::random_dataset(20, 30, 0.3, rng);
    const auto a = split_per_user(ds, {}, 100 + static_cast<std::uint64_t>(trial));
    const auto b = split_per_user(ds, {}, 100 + static_cast<std::uint64_t>(trial));
    CHECK(manifest_text(a) == manifest_text(b));

    const auto train = as_set(a.train.pairs());
    const auto valid = as_set(a.validation);
    const auto test = as_set(a.test);
    CHECK(train.size() + valid.size() + test.size() == ds.pairs().size());
    std::set<Interaction> all = train;
    all.insert(valid.begin(), valid.end());
    all.insert(test.begin(), test.end());
    CHECK(all == as_set(ds.pairs()));
    CHECK(a.train.n_users() == ds.n_users());
    CHECK(a.train.n_items() == ds.n_items());
  }
}

TEST_CASE("different seeds give different splits") {
  auto rng = make_rng({13});
  const auto ds = testing::random_dataset(30, 40, 0.4, rng);
  CHECK(manifest_text(split_per_user(ds, {}, 1)) != manifest_text(split_per_user(ds, {}, 2)));
}

TEST_CASE("manifest round trip") {
  auto rng = make_rng({14});
  const auto ds = testing::random_dataset(15, 25, 0.3, rng);
  const auto split = split_per_user(ds, {}, 5);
  std::istringstream in(manifest_text(split));
  const auto back = read_split_manifest(in);
  CHECK(back.split_seed == split.split_seed);
  CHECK(back.n_users() == split.n_users());
  CHECK(back.n_items() == split.n_items());
  CHECK(as_set(back.train.pairs()) == as_set(split.train.pairs()));
  CHECK(as_set(back.validation) == as_set(split.validation));
  CHECK(as_set(back.test) == as_set(split.test));
  CHECK(manifest_text(back) == manifest_text(split));
}

TEST_CASE("manifest rejects bad tags") {
  std::istringstream in("# cflab-split 1 1 0\n0 0 holdout\n");
  CHECK_THROWS(read_split_manifest(in));
}

TEST_CASE("id map round trip") {
  const auto path = std::filesystem::temp_directory_path() / "cflab_test_ids.txt";
  const std::vector<std::string> ids{"alpha", "B0001", "x-y"};
  write_id_map(path, ids);
  CHECK(read_id_map(path) == ids);
  std::filesystem::remove(path);
}
