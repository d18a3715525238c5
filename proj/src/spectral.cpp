#include "cflab/spectral.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "cflab/error.hpp"

namespace cflab::spectral {

namespace {

constexpr double kBoundaryEps = 1e-12;
constexpr double kMaxPairCount = 1e7;

void require_dense_size(Index n) {
  if (n > kMaxDenseNodes) {
    throw std::invalid_argument("dense spectral tools are capped at " +
                                std::to_string(kMaxDenseNodes) + " nodes, got " + std::to_string(n));
  }
}

void require_layout(const EmbeddingMatrix& embeddings, const InteractionDataset& ds) {
  if (embeddings.rows() != ds.n_users() + ds.n_items()) {
    throw std::invalid_argument("embedding rows do not match |U| + |I|");
  }
  if (static_cast<double>(ds.n_users()) * static_cast<double>(ds.n_items()) > kMaxPairCount) {
    throw std::invalid_argument("user-item block too large for dense evaluation");
  }
}

// Row-wise log(d) with -inf for zero degree, so exp() maps those pairs to 0.
Vector log_degrees(const std::vector<Index>& degree) {
  Vector out(static_cast<Index>(degree.size()));
  for (std::size_t k = 0; k < degree.size(); ++k) {
    out[static_cast<Index>(k)] =
        degree[k] > 0 ? std::log(static_cast<double>(degree[k])) : -std::numeric_limits<double>::infinity();
  }
  return out;
}

// Entries d_u d_i exp(e_u . e_i) expressed as logits.
Matrix weighted_logits(const EmbeddingMatrix& embeddings, const InteractionDataset& ds) {
  require_layout(embeddings, ds);
  const Index nu = ds.n_users();
  const Index ni = ds.n_items();
  Matrix logits = embeddings.topRows(nu) * embeddings.bottomRows(ni).transpose();
  const Vector log_du = log_degrees(ds.user_degree());
  const Vector log_di = log_degrees(ds.item_degree());
  logits.colwise() += log_du;
  logits.rowwise() += log_di.transpose();
  return logits;
}

double finite_max(const Matrix& m) {
  double best = -std::numeric_limits<double>::infinity();
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      if (m(r, c) > best) best = m(r, c);
    }
  }
  if (!std::isfinite(best)) throw NumericError("no finite user-item logit");
  return best;
}

bool at_boundary(const SmoothnessChange& c) {
  return std::abs(c.before) <= kBoundaryEps && std::abs(c.after) <= kBoundaryEps;
}

}  // namespace

Spectrum eigendecompose(const Matrix& symmetric) {
  if (symmetric.rows() != symmetric.cols()) throw std::invalid_argument("matrix is not square");
  require_dense_size(symmetric.rows());
  const double scale = std::max(1.0, symmetric.cwiseAbs().maxCoeff());
  if ((symmetric - symmetric.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw std::invalid_argument("matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver{Eigen::MatrixXd(symmetric)};
  if (solver.info() != Eigen::Success) throw NumericError("eigendecomposition did not converge");
  return {solver.eigenvalues(), Matrix(solver.eigenvectors())};
}

Spectrum eigendecompose(const SparseMatrix& laplacian) {
  if (laplacian.rows() != laplacian.cols()) throw std::invalid_argument("matrix is not square");
  require_dense_size(laplacian.rows());
  if (!laplacian.is_symmetric(1e-12)) throw std::invalid_argument("matrix is not symmetric");
  return eigendecompose(laplacian.to_dense());
}

Vector gft(const Vector& x, const Spectrum& s) {
  if (x.size() != s.eigenvectors.rows()) throw std::invalid_argument("gft: dimension mismatch");
  return s.eigenvectors.transpose() * x;
}

Vector inverse_gft(const Vector& coordinates, const Spectrum& s) {
  if (coordinates.size() != s.eigenvectors.cols()) {
    throw std::invalid_argument("inverse_gft: dimension mismatch");
  }
  return s.eigenvectors * coordinates;
}

double smoothness(const Vector& x, const SparseMatrix& laplacian) {
  const double energy = x.squaredNorm();
  if (energy == 0.0) throw NumericError("smoothness is undefined for the zero signal");
  return quadratic_form(laplacian, x) / energy;
}

double smoothness(const Vector& x, const Matrix& laplacian) {
  if (laplacian.rows() != x.size() || laplacian.cols() != x.size()) {
    throw std::invalid_argument("smoothness: dimension mismatch");
  }
  const double energy = x.squaredNorm();
  if (energy == 0.0) throw NumericError("smoothness is undefined for the zero signal");
  return x.dot(laplacian * x) / energy;
}

Matrix boltzmann_block(const EmbeddingMatrix& embeddings, const InteractionDataset& ds) {
  Matrix logits = weighted_logits(embeddings, ds);
  const double shift = finite_max(logits);
  Matrix p = (logits.array() - shift).exp().matrix();
  const double total = p.sum();
  if (!std::isfinite(total) || total <= 0.0) throw NumericError("Boltzmann normalizer is not finite");
  p /= total;
  if (!p.allFinite()) throw NumericError("Boltzmann block is not finite");
  return p;
}

double log_partition(const EmbeddingMatrix& embeddings, const InteractionDataset& ds) {
  const Matrix logits = weighted_logits(embeddings, ds);
  const double shift = finite_max(logits);
  const double total = (logits.array() - shift).exp().sum();
  return shift + std::log(total);
}

AffinityMatrix affinity_matrix(const EmbeddingMatrix& embeddings, const InteractionDataset& ds) {
  const Index nu = ds.n_users();
  const Index n = nu + ds.n_items();
  require_dense_size(n);
  const Matrix block = boltzmann_block(embeddings, ds);
  AffinityMatrix a{nu, Matrix::Zero(n, n)};
  a.values.topRightCorner(nu, ds.n_items()) = block;
  a.values.bottomLeftCorner(ds.n_items(), nu) = block.transpose();
  return a;
}

Matrix affinity_laplacian(const AffinityMatrix& affinity) {
  Matrix l = -affinity.values;
  l.diagonal() += affinity.values.rowwise().sum();
  return l;
}

Matrix combined_operator(const BipartiteGraph& g, const InteractionDataset& ds,
                         const EmbeddingMatrix& embeddings) {
  if (g.n_users() != ds.n_users() || g.n_items() != ds.n_items()) {
    throw std::invalid_argument("graph and dataset disagree on sizes");
  }
  Matrix op = g.adjacency().to_dense() / static_cast<double>(ds.n_interactions());
  op -= affinity_matrix(embeddings, ds).values;
  return op;
}

EmbeddingMatrix dynamics_step(const EmbeddingMatrix& embeddings, const BipartiteGraph& g,
                              const InteractionDataset& ds, double gamma, DynamicsMode mode) {
  if (embeddings.rows() != g.n_nodes()) throw std::invalid_argument("embedding rows do not match graph");
  switch (mode) {
    case DynamicsMode::full:
      return embeddings + gamma * (combined_operator(g, ds, embeddings) * embeddings);
    case DynamicsMode::alignment_only:
      return embeddings +
             (gamma / static_cast<double>(ds.n_interactions())) * spmm(g.adjacency(), embeddings);
    case DynamicsMode::uniformity_only:
      return embeddings - gamma * (affinity_matrix(embeddings, ds).values * embeddings);
  }
  throw std::invalid_argument("unknown dynamics mode");
}

Matrix apply_filter(const FilterSpec& filter, const Matrix& x, const FilterContext& context) {
  if (filter.coefficients.empty()) throw std::invalid_argument("filter needs at least one coefficient");
  for (double c : filter.coefficients) {
    if (!std::isfinite(c)) throw std::invalid_argument("filter coefficients must be finite");
  }
  if (x.rows() != context.graph.n_nodes()) throw std::invalid_argument("signal length does not match graph");

  SparseMatrix sparse_base;
  switch (filter.base) {
    case FilterBase::laplacian:
      sparse_base = laplacian(context.graph);
      break;
    case FilterBase::interaction_adjacency:
      sparse_base = context.graph.adjacency();
      break;
    case FilterBase::affinity:
      if (context.affinity == nullptr) throw std::invalid_argument("affinity filter needs an affinity matrix");
      break;
    default:
      throw std::invalid_argument("unknown filter base");
  }
  const auto apply_base = [&](const Matrix& y) -> Matrix {
    if (filter.base == FilterBase::affinity) return context.affinity->values * y;
    return spmm(sparse_base, y);
  };

  const auto& h = filter.coefficients;
  Matrix y = h.back() * x;
  for (std::size_t k = h.size() - 1; k-- > 0;) {
    y = apply_base(y);
    y += h[k] * x;
  }
  return y;
}

Vector apply_filter(const FilterSpec& filter, const Vector& x, const FilterContext& context) {
  Matrix column = Eigen::Map<const Matrix>(x.data(), x.size(), 1);
  Matrix out = apply_filter(filter, column, context);
  return Eigen::Map<const Vector>(out.data(), out.rows());
}

double smoothing_step_bound(const SparseMatrix& laplacian) {
  const Spectrum s = eigendecompose(laplacian);
  const double top = s.eigenvalues[s.eigenvalues.size() - 1];
  if (top <= 0.0) throw NumericError("graph has no edges");
  return 0.1 / top;
}

SmoothingReport smoothing_check(const Matrix& signals, const BipartiteGraph& g,
                                const InteractionDataset& ds, const EmbeddingMatrix& embeddings,
                                double gamma) {
  SmoothingReport report;
  report.n_signals = static_cast<std::size_t>(signals.cols());
  report.gamma = gamma;
  report.interaction_worst = -std::numeric_limits<double>::infinity();
  report.affinity_worst = -std::numeric_limits<double>::infinity();

  const SparseMatrix l = laplacian(g);
  const AffinityMatrix affinity = affinity_matrix(embeddings, ds);
  const Matrix l_affinity = affinity_laplacian(affinity);
  const FilterContext ctx{g, &affinity};
  const FilterSpec smoothing{FilterBase::interaction_adjacency,
                             {1.0, gamma / static_cast<double>(ds.n_interactions())}};
  const FilterSpec dispersing{FilterBase::affinity, {1.0, -gamma}};

  const Matrix smoothed = apply_filter(smoothing, Matrix(signals), ctx);
  const Matrix dispersed = apply_filter(dispersing, Matrix(signals), ctx);

  for (Index k = 0; k < signals.cols(); ++k) {
    const Vector x = signals.col(k);
    SmoothnessChange on_graph{smoothness(x, l), smoothness(Vector(smoothed.col(k)), l)};
    if (on_graph.after < on_graph.before || at_boundary(on_graph)) ++report.interaction_satisfied;
    report.interaction_worst = std::max(report.interaction_worst, on_graph.after - on_graph.before);
    report.interaction.push_back(on_graph);

    SmoothnessChange on_affinity{smoothness(x, l_affinity),
                                 smoothness(Vector(dispersed.col(k)), l_affinity)};
    if (on_affinity.after > on_affinity.before || at_boundary(on_affinity)) ++report.affinity_satisfied;
    report.affinity_worst = std::max(report.affinity_worst, on_affinity.before - on_affinity.after);
    report.affinity.push_back(on_affinity);
  }
  return report;
}

double equilibrium_residual(const EmbeddingMatrix& embeddings, const InteractionDataset& ds) {
  Matrix diff = boltzmann_block(embeddings, ds);
  const double empirical = 1.0 / static_cast<double>(ds.n_interactions());
  for (const auto& p : ds.pairs()) diff(p.user, p.item) -= empirical;
  return diff.cwiseAbs().maxCoeff();
}

double implicit_mf_residual(const EmbeddingMatrix& embeddings, const InteractionDataset& ds) {
  const double log_z = log_partition(embeddings, ds);
  const double n = static_cast<double>(ds.n_interactions());
  double worst = 0.0;
  for (const auto& p : ds.pairs()) {
    const double score = embeddings.row(p.user).dot(embeddings.row(ds.n_users() + p.item));
    const double du = static_cast<double>(ds.user_degree()[static_cast<std::size_t>(p.user)]);
    const double di = static_cast<double>(ds.item_degree()[static_cast<std::size_t>(p.item)]);
    const double target = std::log(1.0 / (n * du * di)) + log_z;
    worst = std::max(worst, std::abs(score - target));
  }
  return worst;
}

namespace {

std::vector<double> column_smoothness(const EmbeddingMatrix& e, const SparseMatrix& l) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(e.cols()));
  for (Index c = 0; c < e.cols(); ++c) {
    const Vector x = e.col(c);
    out.push_back(x.squaredNorm() > 0.0 ? smoothness(x, l) : std::numeric_limits<double>::quiet_NaN());
  }
  return out;
}

}  // namespace

Trajectory simulate_stacked(const EmbeddingMatrix& initial, const BipartiteGraph& g,
                            const InteractionDataset& ds, double gamma, int steps,
                            DynamicsMode mode) {
  if (steps < 1) throw std::invalid_argument("simulate_stacked needs at least one step");
  const SparseMatrix l = laplacian(g);
  Trajectory traj;
  traj.column_smoothness.push_back(column_smoothness(initial, l));
  EmbeddingMatrix current = initial;
  for (int t = 0; t < steps; ++t) {
    if (mode == DynamicsMode::full) {
      traj.combined_trace.push_back(combined_operator(g, ds, current).trace());
    }
    current = dynamics_step(current, g, ds, gamma, mode);
    if (!current.allFinite() || current.cwiseAbs().maxCoeff() > kDivergenceNorm) {
      traj.diverged = true;
      break;
    }
    traj.column_smoothness.push_back(column_smoothness(current, l));
    traj.states.push_back(current);
  }
  return traj;
}

DescentResult descend_full_batch(const EmbeddingMatrix& initial, const BipartiteGraph& g,
                                 const InteractionDataset& ds, double gamma, long max_steps,
                                 double gradient_tol) {
  DescentResult result{initial, 0, 0.0};
  const Matrix scaled_adjacency =
      g.adjacency().to_dense() / static_cast<double>(ds.n_interactions());
  for (;;) {
    const Matrix direction =
        scaled_adjacency * result.embeddings - affinity_matrix(result.embeddings, ds).values * result.embeddings;
    result.gradient_norm = direction.norm();
    if (result.gradient_norm < gradient_tol || result.steps >= max_steps) break;
    result.embeddings += gamma * direction;
    ++result.steps;
  }
  return result;
}

}  // namespace cflab::spectral
