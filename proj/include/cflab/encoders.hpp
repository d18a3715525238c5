#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cflab/graph.hpp"
#include "cflab/types.hpp"

namespace cflab {

enum class EncoderKind { naive, lightgcn };

struct EncoderConfig {
  EncoderKind kind = EncoderKind::naive;
  int train_layers = 0;
  int infer_layers = 0;
  // Training-time weights alpha_0..alpha_K; empty means uniform 1 / (K + 1).
  std::vector<double> layer_weights;

  // Throws ConfigError when the naive kind has layers, counts are negative or
  // explicit weights do not have train_layers + 1 entries.
  void validate() const;
};

EncoderKind parse_encoder_kind(const std::string& name);
std::string to_string(EncoderKind kind);

// Xavier-normal entries N(0, 2 / (n + d)), deterministic per seed.
EmbeddingMatrix init_embeddings(Index n, Index d, std::uint64_t seed);

std::vector<double> uniform_layer_weights(int layers);

// sum_{k=0..K} alpha_k A_norm^k E0, built with E^(k+1) = A_norm E^(k).
EmbeddingMatrix lightgcn_forward(const EmbeddingMatrix& base, const SparseMatrix& norm_adjacency,
                                 int layers, std::span<const double> weights);

// Encoder output used by the training losses.
EmbeddingMatrix training_embeddings(const EmbeddingMatrix& base, const EncoderConfig& config,
                                    const SparseMatrix& norm_adjacency);

// Gradient with respect to the base table given the gradient with respect to
// training_embeddings(). The propagation polynomial is symmetric, so this is
// the same polynomial applied to the incoming gradient.
EmbeddingMatrix training_backward(const EmbeddingMatrix& grad_output, const EncoderConfig& config,
                                  const SparseMatrix& norm_adjacency);

// Encoder output used for ranking: infer_layers propagation with uniform
// weights (or the training weights when the layer counts agree).
EmbeddingMatrix inference_embeddings(const EmbeddingMatrix& base, const EncoderConfig& config,
                                     const SparseMatrix& norm_adjacency);

}  // namespace cflab
