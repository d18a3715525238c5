#include "cflab/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "cflab/encoders.hpp"
#include "cflab/error.hpp"
#include "cflab/graph.hpp"

namespace cflab {

Batch sample_batch(const InteractionDataset& train, Index m, Rng& rng) {
  if (train.empty()) throw EmptyDatasetError("cannot sample from an empty training set");
  if (m < 1) throw std::invalid_argument("batch size must be positive");
  const auto n = static_cast<std::uint64_t>(train.n_interactions());
  Batch batch;
  batch.pairs.reserve(static_cast<std::size_t>(m));
  for (Index k = 0; k < m; ++k) batch.pairs.push_back(train.pairs()[uniform_index(rng, n)]);
  return batch;
}

TrainingError::TrainingError(int epoch, Index batch, double value, const std::string& detail)
    : std::runtime_error("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                         std::to_string(batch) + " (value " + std::to_string(value) + "): " + detail),
      epoch_(epoch),
      batch_(batch),
      value_(value) {}

SplitDataset load_split(const ExperimentConfig& config) {
  if (config.dataset.empty() && config.split_manifest.empty()) {
    throw ConfigError("set dataset or split_manifest");
  }
  if (!config.split_manifest.empty()) return read_split_manifest(config.split_manifest);
  return split_per_user(load_interactions(config.dataset), SplitRatios{}, config.split_seed);
}

std::vector<int> evaluation_cutoffs(const ExperimentConfig& config) {
  auto ks = config.eval_k;
  ks.push_back(config.selection_k);
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  return ks;
}

EmbeddingMatrix inference_view(const EmbeddingMatrix& base, const ExperimentConfig& config,
                               const SplitDataset& split) {
  if (config.encoder.kind == EncoderKind::naive) return base;
  return inference_embeddings(base, config.encoder, normalized_adjacency(build_graph(split.train)));
}

namespace {

class LossStep {
 public:
  LossStep(const ExperimentConfig& config, const InteractionDataset& train)
      : config_(config), train_(train), user_items_(train.items_by_user()) {
    for (auto& items : user_items_) std::sort(items.begin(), items.end());
  }

  bool full_batch() const { return config_.batch_size >= train_.n_interactions(); }

  LossValueAndGrad operator()(const EmbeddingMatrix& e, Rng& rng) const {
    const Index n_users = train_.n_users();
    if (full_batch() && config_.loss == LossKind::joint) return joint_contrastive_loss(e, train_);
    const Batch batch = full_batch() ? Batch{train_.pairs()} : sample_batch(train_, config_.batch_size, rng);
    switch (config_.loss) {
      case LossKind::sccf:
        return sccf_loss(e, n_users, batch, {config_.tau, config_.sccf_squared, config_.train_similarity});
      case LossKind::ssm:
        return ssm_loss(e, n_users, batch);
      case LossKind::joint:
        // Batch crossings stand in for D_U x D_I; equal to the joint loss up to log m^2.
        return sccf_loss(e, n_users, batch, {1.0, false, Similarity::inner_product});
      case LossKind::bpr:
        return bpr_loss(e, n_users, sample_bpr_triplets(batch, user_items_, train_.n_items(), rng));
      case LossKind::directau:
        return directau_loss(e, n_users, batch, config_.beta);
    }
    throw std::invalid_argument("unknown loss");
  }

 private:
  const ExperimentConfig& config_;
  const InteractionDataset& train_;
  std::vector<std::vector<Index>> user_items_;
};

}  // namespace

TrainResult train(const ExperimentConfig& config, const SplitDataset& split, const EpochObserver& observer) {
  config.validate();
  const auto& train_set = split.train;
  if (train_set.empty()) throw EmptyDatasetError("training split is empty");

  const auto start = std::chrono::steady_clock::now();
  const BipartiteGraph graph = build_graph(train_set);
  const SparseMatrix norm_adj =
      config.encoder.kind == EncoderKind::lightgcn ? normalized_adjacency(graph) : SparseMatrix{};
  const auto cutoffs = evaluation_cutoffs(config);

  EmbeddingMatrix base = init_embeddings(graph.n_nodes(), config.dim, config.seed);
  auto rng = make_rng({config.seed, 0x5eedULL});
  const LossStep step(config, train_set);
  const Index n_batches = step.full_batch()
                              ? 1
                              : (train_set.n_interactions() + config.batch_size - 1) / config.batch_size;

  TrainResult result;
  result.best_base = base;
  result.history.reserve(static_cast<std::size_t>(config.epochs));

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    double loss_sum = 0.0;
    for (Index b = 0; b < n_batches; ++b) {
      LossValueAndGrad loss;
      try {
        loss = step(training_embeddings(base, config.encoder, norm_adj), rng);
      } catch (const NumericError& err) {
        throw TrainingError(epoch, b, std::numeric_limits<double>::quiet_NaN(), err.what());
      }
      if (!std::isfinite(loss.value)) throw TrainingError(epoch, b, loss.value, "loss is not finite");
      loss_sum += loss.value;
      base -= config.learning_rate * training_backward(loss.grad, config.encoder, norm_adj);
    }

    EpochRecord record{epoch, loss_sum / static_cast<double>(n_batches), std::nullopt};
    if (epoch % config.eval_every == 0 || epoch == config.epochs) {
      EvalReport report = evaluate(inference_embeddings(base, config.encoder, norm_adj), split,
                                   EvalTarget::validation, cutoffs, config.infer_similarity);
      report.epoch = epoch;
      report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      const double score = report.at(config.selection_k).recall;
      if (score > result.best_score) {
        result.best_score = score;
        result.best_epoch = epoch;
        result.best_base = base;
      }
      record.validation = std::move(report);
    }
    if (observer) observer(record);
    result.history.push_back(std::move(record));
  }
  result.last_base = std::move(base);
  return result;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const SplitDataset& split,
                                const EpochObserver& observer) {
  ExperimentResult out;
  out.training = train(config, split, observer);
  const auto start = std::chrono::steady_clock::now();
  out.test = evaluate(inference_view(out.training.best_base, config, split), split, EvalTarget::test,
                      evaluation_cutoffs(config), config.infer_similarity);
  out.test.epoch = out.training.best_epoch;
  out.test.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace cflab
