#pragma once

#include <string>
#include <vector>

#include "cflab/config.hpp"

namespace cflab {

enum class AblationGrid {
  similarity,     // train/infer similarity: all four combinations
  squared,        // SCCF with and without the squared-cosine kernel
  temperature,    // tau sweep
  layers,         // training vs inference propagation layers
  encoder,        // naive table vs LightGCN with 1, 2, 3 layers
  learning_rate,  // SGD step size grid
};

AblationGrid parse_ablation_grid(const std::string& name);
std::string to_string(AblationGrid grid);

struct AblationVariant {
  std::string label;
  ExperimentConfig config;
};

// Variants of `base` for one grid. `values` overrides the default sweep for
// the temperature and learning_rate grids and is ignored otherwise.
std::vector<AblationVariant> ablation_variants(const ExperimentConfig& base, AblationGrid grid,
                                               const std::vector<double>& values = {});

inline const std::vector<double> kDefaultTemperatures{0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.4, 0.5};
inline const std::vector<double> kDefaultLearningRates{0.1, 0.3, 1.0, 3.0, 10.0, 30.0, 100.0};

}  // namespace cflab
