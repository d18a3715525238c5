#pragma once

#include <cstddef>
#include <vector>

#include "cflab/dataset.hpp"
#include "cflab/graph.hpp"
#include "cflab/types.hpp"

// Dense spectral tooling for small bipartite graphs: eigendecomposition,
// graph Fourier transform, smoothness, polynomial filters and the
// contrastive-loss learning dynamics written as graph operators.
namespace cflab::spectral {

inline constexpr Index kMaxDenseNodes = 4096;

struct Spectrum {
  Vector eigenvalues;  // ascending
  Matrix eigenvectors;  // column i pairs with eigenvalues[i]
};

// Throws std::invalid_argument for non-symmetric input or n > kMaxDenseNodes.
Spectrum eigendecompose(const SparseMatrix& laplacian);
Spectrum eigendecompose(const Matrix& symmetric);

Vector gft(const Vector& x, const Spectrum& s);
Vector inverse_gft(const Vector& coordinates, const Spectrum& s);

// Rayleigh quotient x^T L x / x^T x. Throws NumericError for x = 0.
double smoothness(const Vector& x, const SparseMatrix& laplacian);
double smoothness(const Vector& x, const Matrix& laplacian);

// Boltzmann distribution over user-item pairs induced by the embeddings:
// P(u, i) = d_u d_i exp(e_u . e_i) / Z, evaluated with a max shift.
// Returns the |U| x |I| block; throws NumericError if it is not finite.
Matrix boltzmann_block(const EmbeddingMatrix& embeddings, const InteractionDataset& ds);

// log Z for Z = sum over U x I of d_u d_i exp(e_u . e_i).
double log_partition(const EmbeddingMatrix& embeddings, const InteractionDataset& ds);

struct AffinityMatrix {
  Index n_users = 0;
  Matrix values;  // n x n, symmetric, zero user-user and item-item blocks
};

AffinityMatrix affinity_matrix(const EmbeddingMatrix& embeddings, const InteractionDataset& ds);

// L' = D' - A' with D' the row sums of A'.
Matrix affinity_laplacian(const AffinityMatrix& affinity);

// A'' = A / |D| - A'.
Matrix combined_operator(const BipartiteGraph& g, const InteractionDataset& ds,
                         const EmbeddingMatrix& embeddings);

enum class DynamicsMode { full, alignment_only, uniformity_only };

// E + gamma * M E, where M is A'' (full), A / |D| or -A'.
EmbeddingMatrix dynamics_step(const EmbeddingMatrix& embeddings, const BipartiteGraph& g,
                              const InteractionDataset& ds, double gamma,
                              DynamicsMode mode = DynamicsMode::full);

enum class FilterBase { laplacian, interaction_adjacency, affinity };

// sum_k coefficients[k] * M^k for the chosen base matrix M.
struct FilterSpec {
  FilterBase base = FilterBase::laplacian;
  std::vector<double> coefficients{1.0};
};

struct FilterContext {
  const BipartiteGraph& graph;
  const AffinityMatrix* affinity = nullptr;  // needed for FilterBase::affinity
};

// Horner evaluation applied to every column of x.
Matrix apply_filter(const FilterSpec& filter, const Matrix& x, const FilterContext& context);
Vector apply_filter(const FilterSpec& filter, const Vector& x, const FilterContext& context);

// 0.1 / lambda_max(L): the step size used for the smoothing checks.
double smoothing_step_bound(const SparseMatrix& laplacian);

struct SmoothnessChange {
  double before = 0.0;
  double after = 0.0;
};

struct SmoothingReport {
  std::size_t n_signals = 0;
  double gamma = 0.0;
  // I + gamma A / |D| measured on L: expected after <= before.
  std::vector<SmoothnessChange> interaction;
  std::size_t interaction_satisfied = 0;
  double interaction_worst = 0.0;  // max(after - before)
  // I - gamma A' measured on L' = D' - A': expected after >= before.
  std::vector<SmoothnessChange> affinity;
  std::size_t affinity_satisfied = 0;
  double affinity_worst = 0.0;  // max(before - after)
};

// Columns of `signals` are graph signals; violations are counted, not thrown.
SmoothingReport smoothing_check(const Matrix& signals, const BipartiteGraph& g,
                                const InteractionDataset& ds, const EmbeddingMatrix& embeddings,
                                double gamma);

// max over U x I of |A'_{ui} - A_{ui} / |D||.
double equilibrium_residual(const EmbeddingMatrix& embeddings, const InteractionDataset& ds);

// max over observed (u, i) of |e_u . e_i - log(1 / (|D| d_u d_i)) - log Z|.
double implicit_mf_residual(const EmbeddingMatrix& embeddings, const InteractionDataset& ds);

struct Trajectory {
  std::vector<EmbeddingMatrix> states;  // E(1) .. E(T) (fewer if diverged)
  // column_smoothness[t][c]: smoothness of column c of E(t) on L, t = 0 is E(0).
  // Zero columns are recorded as NaN.
  std::vector<std::vector<double>> column_smoothness;
  std::vector<double> combined_trace;  // trace(A''(t)) for each step taken
  bool diverged = false;
};

inline constexpr double kDivergenceNorm = 1e6;

// Repeated dynamics_step; stops early once any entry exceeds kDivergenceNorm.
Trajectory simulate_stacked(const EmbeddingMatrix& initial, const BipartiteGraph& g,
                            const InteractionDataset& ds, double gamma, int steps,
                            DynamicsMode mode = DynamicsMode::full);

struct DescentResult {
  EmbeddingMatrix embeddings;
  long steps = 0;
  double gradient_norm = 0.0;
};

// Full-batch gradient descent on the joint contrastive loss via dynamics_step,
// until the Frobenius norm of the step direction A''E drops below
// gradient_tol or max_steps is reached.
DescentResult descend_full_batch(const EmbeddingMatrix& initial, const BipartiteGraph& g,
                                 const InteractionDataset& ds, double gamma, long max_steps,
                                 double gradient_tol);

}  // namespace cflab::spectral
