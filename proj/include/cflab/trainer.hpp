#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cflab/config.hpp"
#include "cflab/dataset.hpp"
#include "cflab/losses.hpp"
#include "cflab/metrics.hpp"
#include "cflab/random.hpp"

namespace cflab {

// m interactions drawn uniformly with replacement. Throws EmptyDatasetError
// for an empty training set.
Batch sample_batch(const InteractionDataset& train, Index m, Rng& rng);

class TrainingError : public std::runtime_error {
 public:
  TrainingError(int epoch, Index batch, double value, const std::string& detail);

  int epoch() const noexcept { return epoch_; }
  Index batch() const noexcept { return batch_; }
  double value() const noexcept { return value_; }

 private:
  int epoch_;
  Index batch_;
  double value_;
};

struct EpochRecord {
  int epoch = 0;
  double mean_loss = 0.0;
  std::optional<EvalReport> validation;
};

struct TrainResult {
  EmbeddingMatrix best_base;  // learnable table at the selected epoch
  EmbeddingMatrix last_base;  // learnable table after the final epoch
  int best_epoch = 0;
  double best_score = -1.0;   // validation Recall@selection_k
  std::vector<EpochRecord> history;
};

using EpochObserver = std::function<void(const EpochRecord&)>;

// Loads the prepared manifest, or reads and splits the raw dataset.
SplitDataset load_split(const ExperimentConfig& config);

// Plain SGD for `epochs` epochs of ceil(|train| / m) batches each. When
// m >= |train| every epoch is one full-batch step over the training pairs in
// order, and the joint loss uses its exact full-data form; otherwise batches
// are sampled and the joint loss uses in-batch crossings. Zero epochs return
// the initial table. Throws TrainingError on a non-finite loss.
TrainResult train(const ExperimentConfig& config, const SplitDataset& split,
                  const EpochObserver& observer = {});

struct ExperimentResult {
  TrainResult training;
  EvalReport test;  // test metrics of the selected table
};

// train() followed by test evaluation of the selected table.
ExperimentResult run_experiment(const ExperimentConfig& config, const SplitDataset& split,
                                const EpochObserver& observer = {});

// Inference embeddings for a learned table under the config's encoder.
EmbeddingMatrix inference_view(const EmbeddingMatrix& base, const ExperimentConfig& config,
                               const SplitDataset& split);

// Cutoffs from the config plus the selection cutoff.
std::vector<int> evaluation_cutoffs(const ExperimentConfig& config);

}  // namespace cflab
