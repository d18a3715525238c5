#include <doctest.h>

#include <cmath>
#include <numbers>

#include "cflab/error.hpp"
#include "cflab/losses.hpp"
#include "support/oracles.hpp"

using namespace cflab;

namespace {

constexpr int kInstances = 20;
constexpr double kGradTol = 1e-5;

Batch random_batch(Index n_users, Index n_items, Index m, Rng& rng) {
  Batch b;
  for (Index k = 0; k < m; ++k) {
    b.pairs.push_back({static_cast<Index>(uniform_index(rng, static_cast<std::uint64_t>(n_users))),
                       static_cast<Index>(uniform_index(rng, static_cast<std::uint64_t>(n_items)))});
  }
  return b;
}

struct Instance {
  Index n_users, n_items;
  EmbeddingMatrix e;
  Batch batch;
};

Instance random_instance(Index m, Rng& rng, double scale = 1.0) {
  const Index n_users = 3 + static_cast<Index>(uniform_index(rng, 5));
  const Index n_items = 3 + static_cast<Index>(uniform_index(rng, 5));
  const Index d = 2 + static_cast<Index>(uniform_index(rng, 4));
  return {n_users, n_items, testing::random_matrix(n_users + n_items, d, rng, scale),
          random_batch(n_users, n_items, m, rng)};
}

template <typename F>
double gradient_error(F&& loss, const EmbeddingMatrix& e) {
  const auto analytic = loss(e);
  const auto numeric = testing::numeric_gradient([&](const EmbeddingMatrix& x) { return loss(x).value; }, e);
  return testing::relative_error(analytic.grad, numeric);
}

bool untouched_rows_zero(const EmbeddingMatrix& grad, Index n_users, const Batch& batch) {
  std::vector<bool> touched(static_cast<std::size_t>(grad.rows()), false);
  for (const auto& p : batch.pairs) {
    touched[static_cast<std::size_t>(p.user)] = true;
    touched[static_cast<std::size_t>(n_users + p.item)] = true;
  }
  for (Index r = 0; r < grad.rows(); ++r) {
    if (!touched[static_cast<std::size_t>(r)] && !grad.row(r).isZero()) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("ssm values") {
  const EmbeddingMatrix zero = EmbeddingMatrix::Zero(6, 2);
  CHECK(ssm_loss(zero, 3, {{{0, 0}, {1, 1}, {2, 2}}}).value == doctest::Approx(std::log(3.0)).epsilon(1e-15));
  auto rng = make_rng({41});
  const auto e = testing::random_matrix(6, 3, rng);
  CHECK(ssm_loss(e, 3, {{{1, 2}}}).value == doctest::Approx(0.0));
}

TEST_CASE("ssm gradient") {
  auto rng = make_rng({42});
  for (int t = 0; t < kInstances; ++t) {
    const auto inst = random_instance(4 + t % 5, rng);
    auto f = [&](const EmbeddingMatrix& x) { return ssm_loss(x, inst.n_users, inst.batch); };
    CHECK(gradient_error(f, inst.e) <= kGradTol);
    CHECK(untouched_rows_zero(f(inst.e).grad, inst.n_users, inst.batch));
  }
}

TEST_CASE("joint loss values and gradient") {
  const auto tiny = testing::tiny_dataset();
  const EmbeddingMatrix zero = EmbeddingMatrix::Zero(4, 3);
  const auto parts = joint_contrastive_parts(zero, tiny);
  CHECK(parts.alignment == 0.0);
  CHECK(parts.uniformity == doctest::Approx(std::log(9.0)).epsilon(1e-15));
  CHECK(joint_contrastive_loss(zero, tiny).value == doctest::Approx(std::log(9.0)).epsilon(1e-15));

  auto rng = make_rng({43});
  for (int t = 0; t < kInstances; ++t) {
    const auto ds = t == 0 ? tiny : testing::random_dataset(2 + t % 5, 2 + t % 4, 0.4, rng);
    const auto e = testing::random_matrix(ds.n_users() + ds.n_items(), 2 + t % 3, rng);
    auto f = [&](const EmbeddingMatrix& x) { return joint_contrastive_loss(x, ds); };
    CHECK(gradient_error(f, e) <= kGradTol);
    const auto p = joint_contrastive_parts(e, ds);
    CHECK(f(e).value == p.alignment + p.uniformity);
  }
}

TEST_CASE("joint loss rejects oversized instances") {
  const InteractionDataset big(10001, 1001, {{0, 0}});
  CHECK_THROWS_AS(joint_contrastive_loss(EmbeddingMatrix::Zero(11002, 1), big), std::invalid_argument);
}

TEST_CASE("directau values") {
  EmbeddingMatrix e(4, 2);
  e << 1, 0,
       0, 1,
       2, 0,
       0, 3;
  const Batch batch{{{0, 0}, {1, 1}}};
  // Normalized pairs coincide: zero alignment. Uniformity: users and items
  // each sit at squared distance 2, so each side gives log exp(-4) = -4.
  CHECK(directau_loss(e, 2, batch, 0.0).value == doctest::Approx(0.0).scale(1.0));
  CHECK(directau_loss(e, 2, batch, 1.0).value == doctest::Approx(-8.0).epsilon(1e-14));

  EmbeddingMatrix same(4, 2);
  same << 1, 1,
          2, 2,
          1, 0,
          1, 0;
  // Identical users: user uniformity log exp(0) = 0; items identical too.
  CHECK(directau_loss(same, 2, batch, 1.0).value ==
        doctest::Approx(directau_loss(same, 2, batch, 0.0).value).epsilon(1e-14));
}

TEST_CASE("directau gradient") {
  auto rng = make_rng({44});
  for (int t = 0; t < kInstances; ++t) {
    const auto inst = random_instance(8, rng);
    const double beta = t % 2 == 0 ? 1.0 : 0.5;
    auto f = [&](const EmbeddingMatrix& x) { return directau_loss(x, inst.n_users, inst.batch, beta); };
    CHECK(gradient_error(f, inst.e) <= kGradTol);
  }
}

TEST_CASE("bpr values") {
  EmbeddingMatrix e(3, 2);
  e << 1, 2,
       0.5, 0.5,
       0.5, 0.5;
  CHECK(bpr_loss(e, 1, {{0, 0, 1}}).value == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  EmbeddingMatrix far(3, 1);
  far << 1, 1000, -1000;
  CHECK(bpr_loss(far, 1, {{0, 0, 1}}).value < 1e-300);
  CHECK(bpr_loss(far, 1, {{0, 1, 0}}).value == doctest::Approx(2000.0));
}

TEST_CASE("bpr gradient") {
  auto rng = make_rng({45});
  for (int t = 0; t < kInstances; ++t) {
    const auto inst = random_instance(6, rng);
    std::vector<BprTriplet> triplets;
    for (const auto& p : inst.batch.pairs) {
      Index neg = static_cast<Index>(uniform_index(rng, static_cast<std::uint64_t>(inst.n_items)));
      if (neg == p.item) neg = (neg + 1) % inst.n_items;
      triplets.push_back({p.user, p.item, neg});
    }
    auto f = [&](const EmbeddingMatrix& x) { return bpr_loss(x, inst.n_users, triplets); };
    CHECK(gradient_error(f, inst.e) <= kGradTol);
  }
}

TEST_CASE("bpr negative sampling") {
  auto rng = make_rng({46});
  const std::vector<std::vector<Index>> user_items{{0, 2}, {0, 1, 2, 3}};
  const Batch batch{{{0, 0}, {0, 2}}};
  for (int rep = 0; rep < 200; ++rep) {
    for (const auto& t : sample_bpr_triplets(batch, user_items, 4, rng)) {
      CHECK((t.negative == 1 || t.negative == 3));
    }
  }
  CHECK_THROWS_AS(sample_bpr_triplets({{{1, 0}}}, user_items, 4, rng), std::runtime_error);
}

TEST_CASE("sccf similarity") {
  Eigen::RowVectorXd a(2), b(2), c(2), d(2);
  a << 1, 0;
  b << 3, 0;
  c << 0, 2;
  d << -0.5, 0;
  CHECK(sccf_similarity(a, b, 1.0) == doctest::Approx(2.0 * std::numbers::e).epsilon(1e-15));
  CHECK(sccf_similarity(a, c, 1.0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(sccf_similarity(a, d, 1.0) == doctest::Approx(std::exp(-1.0) + std::numbers::e).epsilon(1e-15));
  CHECK(sccf_similarity(a, b, 1.0, false) == doctest::Approx(std::numbers::e).epsilon(1e-15));

  auto rng = make_rng({47});
  for (int t = 0; t < 50; ++t) {
    const Eigen::RowVectorXd x = testing::random_matrix(1, 4, rng).row(0);
    const Eigen::RowVectorXd y = testing::random_matrix(1, 4, rng).row(0);
    const double tau = 0.1 + 0.1 * t;
    const double s = sccf_similarity(x, y, tau);
    CHECK(s == sccf_similarity(y, x, tau));
    CHECK(s >= std::exp(-1.0 / tau) + 1.0 - 1e-12);
    CHECK(s <= 2.0 * std::exp(1.0 / tau) * (1.0 + 1e-12));
  }
}

TEST_CASE("sccf values") {
  auto rng = make_rng({48});
  const auto e = testing::random_matrix(8, 3, rng);
  CHECK(std::abs(sccf_loss(e, 4, {{{2, 1}}}, {}).value) < 1e-14);

  EmbeddingMatrix same(8, 3);
  same.rowwise() = Eigen::RowVector3d(0.3, -1.0, 2.0);
  const Batch batch{{{0, 0}, {1, 2}, {3, 3}, {2, 1}}};
  for (const double tau : {0.1, 0.25, 1.0}) CHECK(std::abs(sccf_loss(same, 4, batch, {tau, true, Similarity::cosine}).value) < 1e-12);

  // Direct evaluation of the objective as written.
  const auto r = testing::random_matrix(8, 3, rng);
  const double tau = 0.25;
  double positives = 0.0, crossings = 0.0;
  for (const auto& p : batch.pairs) positives += std::log(sccf_similarity(r.row(p.user), r.row(4 + p.item), tau));
  for (const auto& p : batch.pairs) {
    for (const auto& q : batch.pairs) crossings += sccf_similarity(r.row(p.user), r.row(4 + q.item), tau);
  }
  const double expected = -positives / 4.0 + std::log(crossings / 16.0);
  CHECK(sccf_loss(r, 4, batch, {tau, true, Similarity::cosine}).value == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("sccf gradient, all toggles") {
  auto rng = make_rng({49});
  for (int t = 0; t < kInstances; ++t) {
    const auto inst = random_instance(8, rng);
    for (const bool squared : {true, false}) {
      for (const auto sim : {Similarity::cosine, Similarity::inner_product}) {
        const SccfOptions options{sim == Similarity::cosine ? 0.25 : 1.0, squared, sim};
        auto f = [&](const EmbeddingMatrix& x) { return sccf_loss(x, inst.n_users, inst.batch, options); };
        CHECK(gradient_error(f, inst.e) <= kGradTol);
        CHECK(untouched_rows_zero(f(inst.e).grad, inst.n_users, inst.batch));
      }
    }
  }
}

TEST_CASE("sccf is invariant to rescaling one embedding") {
  auto rng = make_rng({50});
  for (int t = 0; t < 10; ++t) {
    const auto inst = random_instance(8, rng);
    EmbeddingMatrix scaled = inst.e;
    const Index k = static_cast<Index>(uniform_index(rng, static_cast<std::uint64_t>(scaled.rows())));
    scaled.row(k) *= 3.0;
    const double a = sccf_loss(inst.e, inst.n_users, inst.batch, {}).value;
    const double b = sccf_loss(scaled, inst.n_users, inst.batch, {}).value;
    CHECK(std::abs(a - b) < 1e-8);
  }
}

TEST_CASE("sccf blocks agree with a small batch across the block boundary") {
  // 600 pairs span two row blocks; compare against the direct formula.
  auto rng = make_rng({51});
  const Index n_users = 40, n_items = 50;
  const auto e = testing::random_matrix(n_users + n_items, 4, rng);
  const auto batch = random_batch(n_users, n_items, 600, rng);
  const double tau = 0.25;
  double positives = 0.0, crossings = 0.0;
  for (const auto& p : batch.pairs) positives += std::log(sccf_similarity(e.row(p.user), e.row(n_users + p.item), tau));
  for (const auto& p : batch.pairs) {
    for (const auto& q : batch.pairs) crossings += sccf_similarity(e.row(p.user), e.row(n_users + q.item), tau);
  }
  const double m = 600.0;
  const double expected = -positives / m + std::log(crossings / (m * m));
  CHECK(sccf_loss(e, n_users, batch, {}).value == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("sccf with large temperature-scaled inner products stays finite") {
  EmbeddingMatrix e(4, 2);
  e << 40, 0,
       0, 40,
       40, 1,
       -40, 0;
  const auto r = sccf_loss(e, 2, {{{0, 0}, {1, 1}}}, {0.01, true, Similarity::inner_product});
  CHECK(std::isfinite(r.value));
  CHECK(r.grad.allFinite());
}

TEST_CASE("zero embeddings do not produce NaN under cosine") {
  const EmbeddingMatrix zero = EmbeddingMatrix::Zero(4, 3);
  const auto r = sccf_loss(zero, 2, {{{0, 0}, {1, 1}}}, {});
  CHECK(std::isfinite(r.value));
  CHECK(r.grad.allFinite());
}
