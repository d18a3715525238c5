// Command-line driver: prepare, train, evaluate, verify, ablate.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "cflab/ablation.hpp"
#include "cflab/checkpoint.hpp"
#include "cflab/config.hpp"
#include "cflab/dataset.hpp"
#include "cflab/error.hpp"
#include "cflab/graph.hpp"
#include "cflab/losses.hpp"
#include "cflab/spectral.hpp"
#include "cflab/trainer.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace cflab;

namespace {

// Leftover "--key value" / "--key=value" arguments become config overrides.
KeyValues overrides_from(const std::vector<std::string>& rest) {
  KeyValues out;
  for (std::size_t k = 0; k < rest.size(); ++k) {
    const std::string& arg = rest[k];
    if (arg.rfind("--", 0) != 0) throw ConfigError("unexpected argument '" + arg + "'");
    const auto eq = arg.find('=');
    if (eq != std::string::npos) {
      out[arg.substr(2, eq - 2)] = arg.substr(eq + 1);
    } else {
      if (k + 1 >= rest.size()) throw ConfigError("missing value for '" + arg + "'");
      out[arg.substr(2)] = rest[++k];
    }
  }
  return out;
}

ExperimentConfig resolve_config(const std::string& config_path, const std::vector<std::string>& rest) {
  ExperimentConfig c;
  if (!config_path.empty()) apply_key_values(c, load_key_values(config_path));
  apply_key_values(c, overrides_from(rest));
  c.validate();
  return c;
}

json metrics_json(const EvalReport& r) {
  json j = {{"epoch", r.epoch}, {"seconds", r.seconds}, {"users", r.n_users}};
  for (const auto& m : r.metrics) {
    j["recall@" + std::to_string(m.k)] = m.recall;
    j["ndcg@" + std::to_string(m.k)] = m.ndcg;
  }
  return j;
}

json config_json(const ExperimentConfig& c) {
  json j;
  for (const auto& [k, v] : to_key_values(c)) j[k] = v;
  return j;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

// Trains one configuration and writes its run directory.
ExperimentResult run_and_record(const ExperimentConfig& c, const SplitDataset& split, bool echo) {
  const fs::path dir = c.output_dir;
  fs::create_directories(dir);
  {
    std::ofstream conf(dir / "config.conf");
    write_key_values(conf, to_key_values(c));
  }
  std::ofstream jsonl(dir / "metrics.jsonl");
  auto observer = [&](const EpochRecord& rec) {
    json j = {{"event", "epoch"}, {"epoch", rec.epoch}, {"loss", rec.mean_loss}};
    if (rec.validation) {
      j = metrics_json(*rec.validation);
      j["event"] = "validation";
      j["loss"] = rec.mean_loss;
    }
    const std::string line = j.dump();
    jsonl << line << '\n' << std::flush;
    if (echo && rec.validation) std::cout << line << std::endl;
  };
  const auto result = run_experiment(c, split, observer);

  json test = metrics_json(result.test);
  test["event"] = "test";
  jsonl << test.dump() << '\n';
  if (echo) std::cout << test.dump() << std::endl;

  write_checkpoint(dir / "checkpoint.bin", result.training.best_base);
  json report = {{"config", config_json(c)},
                 {"learning_rate", c.learning_rate},
                 {"best_epoch", result.training.best_epoch},
                 {"best_validation_recall@" + std::to_string(c.selection_k), result.training.best_score},
                 {"test", metrics_json(result.test)}};
  for (const auto& rec : result.training.history) {
    if (rec.epoch == result.training.best_epoch && rec.validation) report["validation"] = metrics_json(*rec.validation);
  }
  write_text(dir / "report.json", report.dump(2) + "\n");
  return result;
}

int cmd_prepare(const std::string& dataset, const std::string& out_dir, std::uint64_t seed) {
  const auto ds = load_interactions(dataset);
  const auto split = split_per_user(ds, {}, seed);
  fs::create_directories(out_dir);
  write_split_manifest(fs::path(out_dir) / "split.manifest", split);
  write_id_map(fs::path(out_dir) / "user_ids.txt", ds.user_ids());
  write_id_map(fs::path(out_dir) / "item_ids.txt", ds.item_ids());
  const json stats = {{"users", ds.n_users()},
                      {"items", ds.n_items()},
                      {"interactions", ds.n_interactions()},
                      {"train", split.train.n_interactions()},
                      {"validation", split.validation.size()},
                      {"test", split.test.size()},
                      {"split_seed", seed}};
  write_text(fs::path(out_dir) / "stats.json", stats.dump(2) + "\n");
  std::cout << stats.dump() << std::endl;
  return 0;
}

int cmd_evaluate(const ExperimentConfig& c, const std::string& checkpoint, const std::string& target) {
  const auto split = load_split(c);
  const auto base = read_checkpoint(checkpoint);
  if (base.rows() != split.n_users() + split.n_items()) throw std::runtime_error("checkpoint does not match the split");
  const auto report = evaluate(inference_view(base, c, split), split,
                               target == "validation" ? EvalTarget::validation : EvalTarget::test,
                               evaluation_cutoffs(c), c.infer_similarity);
  json j = metrics_json(report);
  j["event"] = target;
  std::cout << j.dump() << std::endl;
  return 0;
}

// --- verify -----------------------------------------------------------------

InteractionDataset random_graph(Index n_users, Index n_items, double p, Rng& rng) {
  std::set<Interaction> pairs;
  std::bernoulli_distribution coin(p);
  for (Index u = 0; u < n_users; ++u) {
    pairs.insert({u, static_cast<Index>(uniform_index(rng, static_cast<std::uint64_t>(n_items)))});
    for (Index i = 0; i < n_items; ++i) {
      if (coin(rng)) pairs.insert({u, i});
    }
  }
  for (Index i = 0; i < n_items; ++i) {
    pairs.insert({static_cast<Index>(uniform_index(rng, static_cast<std::uint64_t>(n_users))), i});
  }
  return InteractionDataset(n_users, n_items, {pairs.begin(), pairs.end()});
}

Matrix gaussian(Index rows, Index cols, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) m(r, c) = normal(rng);
  }
  return m;
}

int cmd_verify(std::uint64_t seed, int n_graphs, int n_signals, double density) {
  auto rng = make_rng({seed});
  bool all = true;
  auto emit = [&](const std::string& check, Index n, double gamma, bool pass, double worst) {
    all = all && pass;
    std::cout << json{{"check", check}, {"n", n}, {"gamma", gamma}, {"pass", pass}, {"worst_residual", worst}}.dump()
              << std::endl;
  };

  std::vector<InteractionDataset> graphs{InteractionDataset(2, 2, {{0, 0}, {0, 1}, {1, 1}})};
  for (int k = 0; k < n_graphs; ++k) {
    graphs.push_back(random_graph(40 + static_cast<Index>(uniform_index(rng, 60)),
                                  40 + static_cast<Index>(uniform_index(rng, 60)), density, rng));
  }

  {
    const auto s = spectral::eigendecompose(laplacian(build_graph(graphs[0])));
    double err = 0.0;
    for (int k = 0; k < 4; ++k) err = std::max(err, std::abs(s.eigenvalues(k) - (2.0 - 2.0 * std::cos(k * M_PI / 4.0))));
    emit("path_spectrum", 4, 0.0, err <= 1e-6, err);
  }

  for (const auto& ds : graphs) {
    const auto g = build_graph(ds);
    const auto l = laplacian(g);
    const Index n = g.n_nodes();
    const auto s = spectral::eigendecompose(l);
    double rq = 0.0;
    for (Index k = 0; k < n; ++k) rq = std::max(rq, std::abs(spectral::smoothness(Vector(s.eigenvectors.col(k)), l) - s.eigenvalues(k)));
    emit("eigenvector_smoothness", n, 0.0, rq <= 1e-8, rq);

    const Matrix x = gaussian(n, n_signals, rng);
    double parseval = 0.0;
    for (Index c = 0; c < x.cols(); ++c) {
      parseval = std::max(parseval, std::abs(spectral::gft(Vector(x.col(c)), s).norm() - x.col(c).norm()));
    }
    emit("parseval", n, 0.0, parseval <= 1e-8, parseval);

    const double gamma = spectral::smoothing_step_bound(l);
    const auto r = spectral::smoothing_check(x, g, ds, EmbeddingMatrix::Zero(n, 4), gamma);
    emit("interaction_smoothing", n, gamma, r.interaction_satisfied == r.n_signals, r.interaction_worst);
    emit("affinity_smoothing", n, gamma,
         static_cast<double>(r.affinity_satisfied) >= 0.99 * static_cast<double>(r.n_signals), r.affinity_worst);

    const EmbeddingMatrix e = gaussian(n, 4, rng, 0.5);
    const double step = 1e-2;
    const EmbeddingMatrix expected = e - step * joint_contrastive_loss(e, ds).grad;
    const double dev = (spectral::dynamics_step(e, g, ds, step) - expected).cwiseAbs().maxCoeff();
    emit("dynamics_gradient_step", n, step, dev <= 1e-8, dev);
    const double trace = std::abs(spectral::combined_operator(g, ds, e).trace());
    emit("combined_operator_trace", n, step, trace == 0.0, trace);
  }

  {
    const auto& ds = graphs[0];
    const auto g = build_graph(ds);
    const auto r = spectral::descend_full_batch(gaussian(4, 4, rng, 0.1), g, ds, 0.3, 20000, 1e-8);
    const double eq = spectral::equilibrium_residual(r.embeddings, ds);
    const double mf = spectral::implicit_mf_residual(r.embeddings, ds);
    emit("equilibrium", 4, 0.3, eq < 1e-3, eq);
    emit("implicit_mf", 4, 0.3, mf < 1e-2, mf);
  }
  return all ? 0 : 1;
}

int cmd_ablate(const ExperimentConfig& base, const std::string& grid_name, const std::vector<double>& values) {
  const auto grid = parse_ablation_grid(grid_name);
  const auto split = load_split(base);
  const auto variants = ablation_variants(base, grid, values);
  fs::create_directories(base.output_dir);
  std::ofstream summary(fs::path(base.output_dir) / "ablation.jsonl");
  for (const auto& v : variants) {
    const auto r = run_and_record(v.config, split, false);
    json j = metrics_json(r.test);
    j["event"] = "ablation";
    j["grid"] = grid_name;
    j["variant"] = v.label;
    j["best_epoch"] = r.training.best_epoch;
    summary << j.dump() << '\n' << std::flush;
    std::cout << j.dump() << std::endl;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cflab: contrastive collaborative filtering experiments"};
  app.require_subcommand(1);

  std::string dataset, out_dir, config_path, checkpoint, target = "test", grid;
  std::uint64_t split_seed = 2024, verify_seed = 7;
  int n_graphs = 5, n_signals = 200;
  double density = 0.05;
  std::vector<double> values;

  auto* prepare = app.add_subcommand("prepare", "split a raw interaction file and write the manifest");
  prepare->add_option("--dataset", dataset, "raw 'user item' file")->required();
  prepare->add_option("--out", out_dir, "output directory")->required();
  prepare->add_option("--split_seed", split_seed, "per-user split seed");

  auto* train_cmd = app.add_subcommand("train", "train one configuration; other --key value pairs override the config");
  train_cmd->add_option("--config", config_path, "key = value config file");
  train_cmd->allow_extras();

  auto* eval_cmd = app.add_subcommand("evaluate", "evaluate a checkpoint");
  eval_cmd->add_option("--config", config_path, "key = value config file");
  eval_cmd->add_option("--checkpoint", checkpoint, "checkpoint.bin from a run")->required();
  eval_cmd->add_option("--target", target, "test or validation")->check(CLI::IsMember({"test", "validation"}));
  eval_cmd->allow_extras();

  auto* verify = app.add_subcommand("verify", "run the spectral checks and print one JSON line per check");
  verify->add_option("--seed", verify_seed, "generator seed");
  verify->add_option("--graphs", n_graphs, "number of random bipartite graphs");
  verify->add_option("--signals", n_signals, "random signals per graph");
  verify->add_option("--density", density, "edge probability of the random graphs");

  auto* ablate = app.add_subcommand("ablate", "run an ablation grid");
  ablate->add_option("--grid", grid, "similarity, squared, temperature, layers, encoder or learning_rate")->required();
  ablate->add_option("--values", values, "sweep values for temperature / learning_rate")->delimiter(',');
  ablate->add_option("--config", config_path, "key = value config file");
  ablate->allow_extras();

  CLI11_PARSE(app, argc, argv);

  try {
    if (prepare->parsed()) return cmd_prepare(dataset, out_dir, split_seed);
    if (verify->parsed()) return cmd_verify(verify_seed, n_graphs, n_signals, density);
    if (train_cmd->parsed()) {
      const auto c = resolve_config(config_path, train_cmd->remaining());
      run_and_record(c, load_split(c), true);
      return 0;
    }
    if (eval_cmd->parsed()) return cmd_evaluate(resolve_config(config_path, eval_cmd->remaining()), checkpoint, target);
    if (ablate->parsed()) return cmd_ablate(resolve_config(config_path, ablate->remaining()), grid, values);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 2;
  }
  return 0;
}
