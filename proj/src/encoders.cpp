#include "cflab/encoders.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "cflab/error.hpp"
#include "cflab/random.hpp"

namespace cflab {

void EncoderConfig::validate() const {
  if (train_layers < 0 || infer_layers < 0) throw ConfigError("layer counts must be nonnegative");
  if (kind == EncoderKind::naive && (train_layers != 0 || infer_layers != 0)) {
    throw ConfigError("the naive encoder has no propagation layers");
  }
  if (!layer_weights.empty() && layer_weights.size() != static_cast<std::size_t>(train_layers) + 1) {
    throw ConfigError("layer_weights needs train_layers + 1 entries");
  }
}

EncoderKind parse_encoder_kind(const std::string& name) {
  if (name == "naive") return EncoderKind::naive;
  if (name == "lightgcn") return EncoderKind::lightgcn;
  throw ConfigError("unknown encoder kind '" + name + "'");
}

std::string to_string(EncoderKind kind) {
  return kind == EncoderKind::naive ? "naive" : "lightgcn";
}

EmbeddingMatrix init_embeddings(Index n, Index d, std::uint64_t seed) {
  if (n < 1 || d < 1) throw std::invalid_argument("embedding shape must be positive");
  auto rng = make_rng({seed});
  std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / static_cast<double>(n + d)));
  EmbeddingMatrix e(n, d);
  for (Index r = 0; r < n; ++r) {
    for (Index c = 0; c < d; ++c) e(r, c) = normal(rng);
  }
  return e;
}

std::vector<double> uniform_layer_weights(int layers) {
  if (layers < 0) throw std::invalid_argument("layer count must be nonnegative");
  return std::vector<double>(static_cast<std::size_t>(layers) + 1, 1.0 / (layers + 1));
}

EmbeddingMatrix lightgcn_forward(const EmbeddingMatrix& base, const SparseMatrix& norm_adjacency,
                                 int layers, std::span<const double> weights) {
  if (layers < 0) throw std::invalid_argument("layer count must be nonnegative");
  if (weights.size() != static_cast<std::size_t>(layers) + 1) {
    throw std::invalid_argument("need one weight per layer plus the input");
  }
  if (layers > 0 && norm_adjacency.cols() != base.rows()) {
    throw std::invalid_argument("adjacency does not match embedding rows");
  }
  EmbeddingMatrix out = weights[0] * base;
  EmbeddingMatrix layer = base;
  for (int k = 1; k <= layers; ++k) {
    layer = spmm(norm_adjacency, layer);
    out += weights[static_cast<std::size_t>(k)] * layer;
  }
  return out;
}

namespace {

std::vector<double> training_weights(const EncoderConfig& config) {
  return config.layer_weights.empty() ? uniform_layer_weights(config.train_layers) : config.layer_weights;
}

}  // namespace

EmbeddingMatrix training_embeddings(const EmbeddingMatrix& base, const EncoderConfig& config,
                                    const SparseMatrix& norm_adjacency) {
  if (config.kind == EncoderKind::naive) return base;
  return lightgcn_forward(base, norm_adjacency, config.train_layers, training_weights(config));
}

EmbeddingMatrix training_backward(const EmbeddingMatrix& grad_output, const EncoderConfig& config,
                                  const SparseMatrix& norm_adjacency) {
  return training_embeddings(grad_output, config, norm_adjacency);
}

EmbeddingMatrix inference_embeddings(const EmbeddingMatrix& base, const EncoderConfig& config,
                                     const SparseMatrix& norm_adjacency) {
  if (config.kind == EncoderKind::naive) return base;
  const auto weights = config.infer_layers == config.train_layers
                           ? training_weights(config)
                           : uniform_layer_weights(config.infer_layers);
  return lightgcn_forward(base, norm_adjacency, config.infer_layers, weights);
}

}  // namespace cflab
