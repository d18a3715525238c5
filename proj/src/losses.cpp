#include "cflab/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "cflab/error.hpp"

namespace cflab {

namespace {

// Rows of the m x m in-batch score matrix processed at a time.
constexpr Index kBlockRows = 64;

struct BatchRows {
  Matrix users;  // m x d
  Matrix items;  // m x d
};

void require_batch(const EmbeddingMatrix& e, Index n_users, const std::vector<Interaction>& pairs) {
  if (pairs.empty()) throw std::invalid_argument("batch must not be empty");
  const Index n_items = e.rows() - n_users;
  for (const auto& p : pairs) {
    if (p.user < 0 || p.user >= n_users || p.item < 0 || p.item >= n_items) {
      throw std::invalid_argument("batch index out of range");
    }
  }
}

BatchRows gather(const EmbeddingMatrix& e, Index n_users, const std::vector<Interaction>& pairs) {
  const auto m = static_cast<Index>(pairs.size());
  BatchRows rows{Matrix(m, e.cols()), Matrix(m, e.cols())};
  for (Index k = 0; k < m; ++k) {
    rows.users.row(k) = e.row(pairs[static_cast<std::size_t>(k)].user);
    rows.items.row(k) = e.row(n_users + pairs[static_cast<std::size_t>(k)].item);
  }
  return rows;
}

void scatter_add(EmbeddingMatrix& grad, Index n_users, const std::vector<Interaction>& pairs,
                 const Matrix& d_users, const Matrix& d_items) {
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    grad.row(pairs[k].user) += d_users.row(static_cast<Index>(k));
    grad.row(n_users + pairs[k].item) += d_items.row(static_cast<Index>(k));
  }
}

// x / max(||x||, eps) row by row; returns the clamped norms.
Vector normalize_rows(Matrix& x) {
  Vector norms(x.rows());
  for (Index r = 0; r < x.rows(); ++r) {
    norms[r] = std::max(x.row(r).norm(), kNormEpsilon);
    x.row(r) /= norms[r];
  }
  return norms;
}

// Chain rule through x -> x / max(||x||, eps). Above the clamp the Jacobian
// is (I - x_hat x_hat^T) / ||x||; below it the map is linear with slope 1/eps.
Matrix normalize_backward(const Matrix& normalized, const Vector& norms, const Matrix& d_normalized) {
  Matrix out(d_normalized.rows(), d_normalized.cols());
  for (Index r = 0; r < out.rows(); ++r) {
    if (norms[r] > kNormEpsilon) {
      const double radial = normalized.row(r).dot(d_normalized.row(r));
      out.row(r) = (d_normalized.row(r) - radial * normalized.row(r)) / norms[r];
    } else {
      out.row(r) = d_normalized.row(r) / kNormEpsilon;
    }
  }
  return out;
}

double log_add_exp(double a, double b) {
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

void require_finite(const LossValueAndGrad& out, const char* name) {
  if (!std::isfinite(out.value) || !out.grad.allFinite()) {
    throw NumericError(std::string(name) + " loss produced a non-finite value or gradient");
  }
}

// Sum over one side of the DirectAU uniformity: log mean_{a<b} exp(-2 |x_a - x_b|^2).
// Writes d/dx into `grad`.
double uniformity_term(const Matrix& x, Matrix& grad) {
  const Index m = x.rows();
  grad.setZero(m, x.cols());
  if (m < 2) return 0.0;
  const Vector sq = x.rowwise().squaredNorm();
  double total = 0.0;
  Matrix weighted(m, x.cols());
  Vector row_sum(m);
  for (Index r0 = 0; r0 < m; r0 += kBlockRows) {
    const Index b = std::min(kBlockRows, m - r0);
    Matrix dist = -2.0 * (x.middleRows(r0, b) * x.transpose());
    dist.colwise() += sq.segment(r0, b);
    dist.rowwise() += sq.transpose();
    Matrix w = (-2.0 * dist.array()).exp().matrix();
    for (Index k = 0; k < b; ++k) w(k, r0 + k) = 0.0;
    total += w.sum();
    row_sum.segment(r0, b) = w.rowwise().sum();
    weighted.middleRows(r0, b) = w * x;
  }
  // Each unordered pair appears twice in the full matrix.
  total *= 0.5;
  const double pairs = 0.5 * static_cast<double>(m) * static_cast<double>(m - 1);
  // d/dx_a exp(-2|x_a - x_b|^2) = -4 w_ab (x_a - x_b)
  for (Index a = 0; a < m; ++a) {
    grad.row(a) = (-4.0 / total) * (row_sum[a] * x.row(a) - weighted.row(a));
  }
  return std::log(total / pairs);
}

}  // namespace

LossValueAndGrad ssm_loss(const EmbeddingMatrix& e, Index n_users, const Batch& batch) {
  require_batch(e, n_users, batch.pairs);
  const auto rows = gather(e, n_users, batch.pairs);
  const Index m = rows.users.rows();
  const double inv_m = 1.0 / static_cast<double>(m);

  Matrix d_users(m, e.cols());
  Matrix d_items = Matrix::Zero(m, e.cols());
  double value = 0.0;
  for (Index r0 = 0; r0 < m; r0 += kBlockRows) {
    const Index b = std::min(kBlockRows, m - r0);
    Matrix logits = rows.users.middleRows(r0, b) * rows.items.transpose();
    // d/dc_kj of (-c_kk + lse_j c_kj) is softmax_kj - [j == k].
    for (Index k = 0; k < b; ++k) {
      auto row = logits.row(k);
      const double shift = row.maxCoeff();
      row.array() = (row.array() - shift).exp();
      const double total = row.sum();
      value += shift + std::log(total) - rows.users.row(r0 + k).dot(rows.items.row(r0 + k));
      row /= total;
      row[r0 + k] -= 1.0;
    }
    logits *= inv_m;
    d_users.middleRows(r0, b) = logits * rows.items;
    d_items.noalias() += logits.transpose() * rows.users.middleRows(r0, b);
  }

  LossValueAndGrad out{value * inv_m, EmbeddingMatrix::Zero(e.rows(), e.cols())};
  scatter_add(out.grad, n_users, batch.pairs, d_users, d_items);
  require_finite(out, "ssm");
  return out;
}

namespace {

struct JointTerms {
  JointLossParts parts;
  Matrix probabilities;  // |U| x |I| Boltzmann weights d_u d_i exp(s_ui) / Z
};

JointTerms joint_terms(const EmbeddingMatrix& e, const InteractionDataset& ds) {
  const Index nu = ds.n_users();
  const Index ni = ds.n_items();
  if (e.rows() != nu + ni) throw std::invalid_argument("embedding rows do not match |U| + |I|");
  if (static_cast<double>(nu) * static_cast<double>(ni) > 1e7) {
    throw std::invalid_argument("joint contrastive loss is limited to |U| * |I| <= 1e7");
  }
  if (ds.empty()) throw std::invalid_argument("joint contrastive loss needs interactions");

  JointTerms terms;
  const double n = static_cast<double>(ds.n_interactions());
  for (const auto& p : ds.pairs()) {
    terms.parts.alignment -= e.row(p.user).dot(e.row(nu + p.item));
  }
  terms.parts.alignment /= n;

  Matrix& w = terms.probabilities;
  w = e.topRows(nu) * e.bottomRows(ni).transpose();
  double shift = -std::numeric_limits<double>::infinity();
  for (Index u = 0; u < nu; ++u) {
    const double du = static_cast<double>(ds.user_degree()[static_cast<std::size_t>(u)]);
    for (Index i = 0; i < ni; ++i) {
      const double di = static_cast<double>(ds.item_degree()[static_cast<std::size_t>(i)]);
      w(u, i) = (du > 0 && di > 0) ? w(u, i) + std::log(du) + std::log(di)
                                   : -std::numeric_limits<double>::infinity();
      shift = std::max(shift, w(u, i));
    }
  }
  w = (w.array() - shift).exp().matrix();
  const double total = w.sum();
  terms.parts.uniformity = shift + std::log(total);
  w /= total;
  return terms;
}

}  // namespace

JointLossParts joint_contrastive_parts(const EmbeddingMatrix& e, const InteractionDataset& ds) {
  return joint_terms(e, ds).parts;
}

LossValueAndGrad joint_contrastive_loss(const EmbeddingMatrix& e, const InteractionDataset& ds) {
  const auto terms = joint_terms(e, ds);
  const Index nu = ds.n_users();
  const Index ni = ds.n_items();
  const double inv_n = 1.0 / static_cast<double>(ds.n_interactions());

  LossValueAndGrad out{terms.parts.alignment + terms.parts.uniformity,
                       EmbeddingMatrix::Zero(e.rows(), e.cols())};
  // Alignment: d/de_u = -(1/|D|) sum_{i in N(u)} e_i and symmetrically for items.
  for (const auto& p : ds.pairs()) {
    out.grad.row(p.user) -= inv_n * e.row(nu + p.item);
    out.grad.row(nu + p.item) -= inv_n * e.row(p.user);
  }
  // Uniformity: d/de_u = sum_i P(u, i) e_i, d/de_i = sum_u P(u, i) e_u.
  out.grad.topRows(nu) += terms.probabilities * e.bottomRows(ni);
  out.grad.bottomRows(ni) += terms.probabilities.transpose() * e.topRows(nu);
  require_finite(out, "joint");
  return out;
}

LossValueAndGrad directau_loss(const EmbeddingMatrix& e, Index n_users, const Batch& batch,
                               double beta) {
  if (beta < 0.0) throw std::invalid_argument("DirectAU beta must be nonnegative");
  require_batch(e, n_users, batch.pairs);
  auto rows = gather(e, n_users, batch.pairs);
  const Vector user_norms = normalize_rows(rows.users);
  const Vector item_norms = normalize_rows(rows.items);
  const Index m = rows.users.rows();
  const double inv_m = 1.0 / static_cast<double>(m);

  const Matrix diff = rows.users - rows.items;
  const double align = diff.rowwise().squaredNorm().sum() * inv_m;
  Matrix d_users = (2.0 * inv_m) * diff;
  Matrix d_items = -d_users;

  Matrix grad_side;
  const double uniform_users = uniformity_term(rows.users, grad_side);
  d_users += beta * grad_side;
  const double uniform_items = uniformity_term(rows.items, grad_side);
  d_items += beta * grad_side;

  LossValueAndGrad out{align + beta * (uniform_users + uniform_items),
                       EmbeddingMatrix::Zero(e.rows(), e.cols())};
  scatter_add(out.grad, n_users, batch.pairs, normalize_backward(rows.users, user_norms, d_users),
              normalize_backward(rows.items, item_norms, d_items));
  require_finite(out, "directau");
  return out;
}

LossValueAndGrad bpr_loss(const EmbeddingMatrix& e, Index n_users,
                          const std::vector<BprTriplet>& triplets) {
  if (triplets.empty()) throw std::invalid_argument("BPR needs at least one triplet");
  const Index n_items = e.rows() - n_users;
  const double inv_m = 1.0 / static_cast<double>(triplets.size());
  LossValueAndGrad out{0.0, EmbeddingMatrix::Zero(e.rows(), e.cols())};
  for (const auto& t : triplets) {
    if (t.user < 0 || t.user >= n_users || t.positive < 0 || t.positive >= n_items ||
        t.negative < 0 || t.negative >= n_items) {
      throw std::invalid_argument("BPR triplet index out of range");
    }
    const auto eu = e.row(t.user);
    const auto ei = e.row(n_users + t.positive);
    const auto ej = e.row(n_users + t.negative);
    const double x = eu.dot(ei) - eu.dot(ej);
    // -log sigmoid(x) = log1p(exp(-x)), with derivative -sigmoid(-x).
    out.value += x > 0 ? std::log1p(std::exp(-x)) : -x + std::log1p(std::exp(x));
    const double g = -inv_m / (1.0 + std::exp(x));
    out.grad.row(t.user) += g * (ei - ej);
    out.grad.row(n_users + t.positive) += g * eu;
    out.grad.row(n_users + t.negative) -= g * eu;
  }
  out.value *= inv_m;
  require_finite(out, "bpr");
  return out;
}

std::vector<BprTriplet> sample_bpr_triplets(const Batch& batch,
                                            const std::vector<std::vector<Index>>& user_items,
                                            Index n_items, Rng& rng) {
  constexpr int kMaxTries = 100;
  std::vector<BprTriplet> out;
  out.reserve(batch.pairs.size());
  for (const auto& p : batch.pairs) {
    const auto& seen = user_items.at(static_cast<std::size_t>(p.user));
    Index negative = -1;
    for (int attempt = 0; attempt < kMaxTries; ++attempt) {
      const auto draw = static_cast<Index>(uniform_index(rng, static_cast<std::uint64_t>(n_items)));
      if (!std::binary_search(seen.begin(), seen.end(), draw)) {
        negative = draw;
        break;
      }
    }
    if (negative < 0) {
      throw std::runtime_error("could not sample a negative item for user " + std::to_string(p.user) +
                               " after " + std::to_string(kMaxTries) + " tries");
    }
    out.push_back({p.user, p.item, negative});
  }
  return out;
}

double sccf_similarity(const Eigen::Ref<const Eigen::RowVectorXd>& a,
                       const Eigen::Ref<const Eigen::RowVectorXd>& b, double tau, bool squared_term) {
  if (tau <= 0.0) throw std::invalid_argument("temperature must be positive");
  if (a.size() != b.size()) throw std::invalid_argument("vector sizes differ");
  const double c = a.dot(b) / (std::max(a.norm(), kNormEpsilon) * std::max(b.norm(), kNormEpsilon));
  double sim = std::exp(c / tau);
  if (squared_term) sim += std::exp(c * c / tau);
  return sim;
}

LossValueAndGrad sccf_loss(const EmbeddingMatrix& e, Index n_users, const Batch& batch,
                           const SccfOptions& options) {
  if (options.tau <= 0.0) throw std::invalid_argument("temperature must be positive");
  require_batch(e, n_users, batch.pairs);
  auto rows = gather(e, n_users, batch.pairs);
  const bool cosine = options.similarity == Similarity::cosine;
  Vector user_norms;
  Vector item_norms;
  if (cosine) {
    user_norms = normalize_rows(rows.users);
    item_norms = normalize_rows(rows.items);
  }
  const Index m = rows.users.rows();
  const double inv_m = 1.0 / static_cast<double>(m);
  const double inv_tau = 1.0 / options.tau;
  const bool sq = options.squared_term;

  // log sim(c) = logaddexp(c / tau, c^2 / tau)
  // d log sim / dc = softmax-weighted (1 / tau, 2c / tau)
  Matrix d_users(m, e.cols());
  Matrix d_items(m, e.cols());
  double positive = 0.0;
  for (Index k = 0; k < m; ++k) {
    const double c = rows.users.row(k).dot(rows.items.row(k));
    const double a = c * inv_tau;
    double dlog = inv_tau;
    if (sq) {
      const double b = c * c * inv_tau;
      const double log_sim = log_add_exp(a, b);
      positive += log_sim;
      dlog = inv_tau * std::exp(a - log_sim) + 2.0 * c * inv_tau * std::exp(b - log_sim);
    } else {
      positive += a;
    }
    const double g = -inv_m * dlog;
    d_users.row(k) = g * rows.items.row(k);
    d_items.row(k) = g * rows.users.row(k);
  }

  // Negative term over all m^2 crossings, computed in row blocks. Each block
  // keeps its own max shift; item gradients are accumulated under a running
  // shift and everything is rescaled to the global one at the end.
  std::vector<double> block_shift;
  std::vector<double> block_sum;
  Matrix block_user_grad(m, e.cols());
  Matrix item_grad = Matrix::Zero(m, e.cols());
  double running_shift = -std::numeric_limits<double>::infinity();
  Eigen::Array<double, 1, Eigen::Dynamic> lin_w(m);
  Eigen::Array<double, 1, Eigen::Dynamic> quad_w(m);
  for (Index r0 = 0; r0 < m; r0 += kBlockRows) {
    const Index b = std::min(kBlockRows, m - r0);
    Matrix c = rows.users.middleRows(r0, b) * rows.items.transpose();
    auto ca = c.array();
    const double c_max = ca.maxCoeff();
    double shift = c_max * inv_tau;
    if (sq) shift = std::max(shift, std::max(c_max * c_max, ca.minCoeff() * ca.minCoeff()) * inv_tau);
    // d sim / dc = exp(c / tau) / tau + (2c / tau) exp(c^2 / tau), written over c
    double weight_sum = 0.0;
    for (Index r = 0; r < b; ++r) {
      auto row = ca.row(r);
      lin_w = (row * inv_tau - shift).exp();
      weight_sum += lin_w.sum();
      if (sq) {
        quad_w = (row.square() * inv_tau - shift).exp();
        weight_sum += quad_w.sum();
        row = inv_tau * (lin_w + (2.0 * row) * quad_w);
      } else {
        row = inv_tau * lin_w;
      }
    }
    const Matrix& dsim_m = c;
    block_shift.push_back(shift);
    block_sum.push_back(weight_sum);
    block_user_grad.middleRows(r0, b).noalias() = dsim_m * rows.items;
    if (shift > running_shift) {
      if (std::isfinite(running_shift)) item_grad *= std::exp(running_shift - shift);
      running_shift = shift;
    }
    item_grad.noalias() +=
        std::exp(shift - running_shift) * (dsim_m.transpose() * rows.users.middleRows(r0, b));
  }
  double total = 0.0;
  for (std::size_t k = 0; k < block_sum.size(); ++k) {
    total += block_sum[k] * std::exp(block_shift[k] - running_shift);
  }
  const double negative = running_shift + std::log(total) - 2.0 * std::log(static_cast<double>(m));
  for (std::size_t k = 0; k < block_sum.size(); ++k) {
    const Index r0 = static_cast<Index>(k) * kBlockRows;
    const Index b = std::min(kBlockRows, m - r0);
    d_users.middleRows(r0, b) += (std::exp(block_shift[k] - running_shift) / total) *
                                 block_user_grad.middleRows(r0, b);
  }
  d_items += item_grad / total;

  LossValueAndGrad out{-inv_m * positive + negative, EmbeddingMatrix::Zero(e.rows(), e.cols())};
  if (cosine) {
    scatter_add(out.grad, n_users, batch.pairs, normalize_backward(rows.users, user_norms, d_users),
                normalize_backward(rows.items, item_norms, d_items));
  } else {
    scatter_add(out.grad, n_users, batch.pairs, d_users, d_items);
  }
  require_finite(out, "sccf");
  return out;
}

}  // namespace cflab
