#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "cflab/encoders.hpp"
#include "cflab/losses.hpp"

namespace cflab {

enum class LossKind { sccf, ssm, joint, bpr, directau };

LossKind parse_loss_kind(const std::string& name);
std::string to_string(LossKind kind);
Similarity parse_similarity(const std::string& name);
std::string to_string(Similarity similarity);

struct ExperimentConfig {
  std::string dataset;         // raw "user item" file, split on the fly
  std::string split_manifest;  // prepared split; takes precedence over dataset
  std::uint64_t split_seed = 2024;

  LossKind loss = LossKind::sccf;
  double tau = 0.25;
  double beta = 1.0;
  bool sccf_squared = true;

  EncoderConfig encoder;

  double learning_rate = 30.0;
  Index batch_size = 10000;
  int epochs = 300;
  Index dim = 64;
  std::uint64_t seed = 2024;

  std::vector<int> eval_k{10, 20, 50};
  int selection_k = 20;  // validation Recall@k used for checkpoint selection
  int eval_every = 1;
  Similarity train_similarity = Similarity::cosine;
  Similarity infer_similarity = Similarity::inner_product;

  std::string output_dir = "runs/default";

  // Checks the hyperparameters; throws ConfigError naming the first bad field.
  // The data source is checked by load_split().
  void validate() const;
};

using KeyValues = std::map<std::string, std::string>;

// "key = value" lines; '#' starts a comment, blank lines are ignored.
KeyValues parse_key_values(std::istream& in);
KeyValues load_key_values(const std::filesystem::path& path);

// Unknown keys are rejected so typos do not silently fall back to defaults.
ExperimentConfig config_from_key_values(const KeyValues& values);
void apply_key_values(ExperimentConfig& config, const KeyValues& values);
KeyValues to_key_values(const ExperimentConfig& config);
void write_key_values(std::ostream& out, const KeyValues& values);

}  // namespace cflab
