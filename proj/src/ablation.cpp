#include "cflab/ablation.hpp"

#include <utility>

#include "cflab/error.hpp"

namespace cflab {

namespace {

struct GridName {
  AblationGrid grid;
  const char* name;
};

constexpr GridName kGridNames[] = {
    {AblationGrid::similarity, "similarity"}, {AblationGrid::squared, "squared"},
    {AblationGrid::temperature, "temperature"}, {AblationGrid::layers, "layers"},
    {AblationGrid::encoder, "encoder"},       {AblationGrid::learning_rate, "learning_rate"},
};

std::string short_name(Similarity s) { return s == Similarity::cosine ? "cos" : "ip"; }

std::string format_value(double v) {
  std::string s = std::to_string(v);
  s.erase(s.find_last_not_of('0') + 1);
  if (s.back() == '.') s.pop_back();
  return s;
}

ExperimentConfig with_layers(ExperimentConfig c, int train_layers, int infer_layers) {
  c.encoder.layer_weights.clear();
  c.encoder.train_layers = train_layers;
  c.encoder.infer_layers = infer_layers;
  c.encoder.kind = train_layers == 0 && infer_layers == 0 ? EncoderKind::naive : EncoderKind::lightgcn;
  return c;
}

}  // namespace

AblationGrid parse_ablation_grid(const std::string& name) {
  for (const auto& g : kGridNames) {
    if (name == g.name) return g.grid;
  }
  throw ConfigError("unknown ablation grid '" + name + "'");
}

std::string to_string(AblationGrid grid) {
  for (const auto& g : kGridNames) {
    if (grid == g.grid) return g.name;
  }
  return "unknown";
}

std::vector<AblationVariant> ablation_variants(const ExperimentConfig& base, AblationGrid grid,
                                               const std::vector<double>& values) {
  std::vector<AblationVariant> out;
  auto add = [&](std::string label, ExperimentConfig c) {
    c.output_dir = base.output_dir + "/" + label;
    out.push_back({std::move(label), std::move(c)});
  };
  switch (grid) {
    case AblationGrid::similarity:
      for (const auto train : {Similarity::cosine, Similarity::inner_product}) {
        for (const auto infer : {Similarity::cosine, Similarity::inner_product}) {
          auto c = base;
          c.train_similarity = train;
          c.infer_similarity = infer;
          add("train_" + short_name(train) + "_infer_" + short_name(infer), c);
        }
      }
      break;
    case AblationGrid::squared:
      for (const bool squared : {true, false}) {
        auto c = base;
        c.sccf_squared = squared;
        add(squared ? "with_squared" : "without_squared", c);
      }
      break;
    case AblationGrid::temperature:
      for (const double tau : values.empty() ? kDefaultTemperatures : values) {
        auto c = base;
        c.tau = tau;
        add("tau_" + format_value(tau), c);
      }
      break;
    case AblationGrid::layers: {
      constexpr std::pair<int, int> settings[] = {{0, 0}, {1, 1}, {2, 2}, {3, 3}, {3, 0}, {3, 1}, {3, 2}};
      for (const auto& [t, i] : settings) {
        add("train_" + std::to_string(t) + "_infer_" + std::to_string(i), with_layers(base, t, i));
      }
      break;
    }
    case AblationGrid::encoder:
      add("naive", with_layers(base, 0, 0));
      for (int k = 1; k <= 3; ++k) add("lightgcn_" + std::to_string(k), with_layers(base, k, k));
      break;
    case AblationGrid::learning_rate:
      for (const double lr : values.empty() ? kDefaultLearningRates : values) {
        auto c = base;
        c.learning_rate = lr;
        add("lr_" + format_value(lr), c);
      }
      break;
  }
  return out;
}

}  // namespace cflab
