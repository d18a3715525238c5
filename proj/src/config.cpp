#include "cflab/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "cflab/error.hpp"

namespace cflab {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end) throw ConfigError("invalid value '" + text + "' for " + key);
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError("invalid boolean '" + text + "' for " + key);
}

template <typename T>
std::vector<T> parse_list(const std::string& key, const std::string& text) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number<T>(key, trim(item)));
  return out;
}

template <typename T>
std::string join(const std::vector<T>& values) {
  std::ostringstream out;
  out.precision(17);
  for (std::size_t k = 0; k < values.size(); ++k) out << (k ? "," : "") << values[k];
  return out.str();
}

std::string format_double(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

}  // namespace

LossKind parse_loss_kind(const std::string& name) {
  if (name == "sccf") return LossKind::sccf;
  if (name == "ssm") return LossKind::ssm;
  if (name == "joint") return LossKind::joint;
  if (name == "bpr") return LossKind::bpr;
  if (name == "directau") return LossKind::directau;
  throw ConfigError("unknown loss '" + name + "'");
}

std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::sccf: return "sccf";
    case LossKind::ssm: return "ssm";
    case LossKind::joint: return "joint";
    case LossKind::bpr: return "bpr";
    case LossKind::directau: return "directau";
  }
  return "unknown";
}

Similarity parse_similarity(const std::string& name) {
  if (name == "cosine") return Similarity::cosine;
  if (name == "inner_product") return Similarity::inner_product;
  throw ConfigError("unknown similarity '" + name + "'");
}

std::string to_string(Similarity similarity) {
  return similarity == Similarity::cosine ? "cosine" : "inner_product";
}

void ExperimentConfig::validate() const {
  if (tau <= 0.0) throw ConfigError("tau must be positive");
  if (beta < 0.0) throw ConfigError("beta must be nonnegative");
  if (learning_rate <= 0.0) throw ConfigError("learning_rate must be positive");
  if (batch_size < 1) throw ConfigError("batch_size must be positive");
  if (epochs < 0) throw ConfigError("epochs must be nonnegative");
  if (dim < 1) throw ConfigError("dim must be positive");
  if (eval_every < 1) throw ConfigError("eval_every must be positive");
  if (eval_k.empty()) throw ConfigError("eval_k must list at least one cutoff");
  for (int k : eval_k) {
    if (k < 1) throw ConfigError("eval_k entries must be positive");
  }
  if (selection_k < 1) throw ConfigError("selection_k must be positive");
  encoder.validate();
}

KeyValues parse_key_values(std::istream& in) {
  KeyValues out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(line_no, "expected 'key = value'");
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) throw ParseError(line_no, "empty key");
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

KeyValues load_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  return parse_key_values(in);
}

void apply_key_values(ExperimentConfig& c, const KeyValues& values) {
  for (const auto& [key, v] : values) {
    if (key == "dataset") c.dataset = v;
    else if (key == "split_manifest") c.split_manifest = v;
    else if (key == "split_seed") c.split_seed = parse_number<std::uint64_t>(key, v);
    else if (key == "loss") c.loss = parse_loss_kind(v);
    else if (key == "tau") c.tau = parse_number<double>(key, v);
    else if (key == "beta") c.beta = parse_number<double>(key, v);
    else if (key == "sccf.squared") c.sccf_squared = parse_bool(key, v);
    else if (key == "encoder.kind") c.encoder.kind = parse_encoder_kind(v);
    else if (key == "encoder.train_layers") c.encoder.train_layers = parse_number<int>(key, v);
    else if (key == "encoder.infer_layers") c.encoder.infer_layers = parse_number<int>(key, v);
    else if (key == "encoder.layer_weights") c.encoder.layer_weights = v.empty() ? std::vector<double>{} : parse_list<double>(key, v);
    else if (key == "learning_rate") c.learning_rate = parse_number<double>(key, v);
    else if (key == "batch_size") c.batch_size = parse_number<Index>(key, v);
    else if (key == "epochs") c.epochs = parse_number<int>(key, v);
    else if (key == "dim") c.dim = parse_number<Index>(key, v);
    else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, v);
    else if (key == "eval_k") c.eval_k = parse_list<int>(key, v);
    else if (key == "selection_k") c.selection_k = parse_number<int>(key, v);
    else if (key == "eval_every") c.eval_every = parse_number<int>(key, v);
    else if (key == "train_similarity") c.train_similarity = parse_similarity(v);
    else if (key == "infer_similarity") c.infer_similarity = parse_similarity(v);
    else if (key == "output_dir") c.output_dir = v;
    else throw ConfigError("unknown config key '" + key + "'");
  }
}

ExperimentConfig config_from_key_values(const KeyValues& values) {
  ExperimentConfig c;
  apply_key_values(c, values);
  return c;
}

KeyValues to_key_values(const ExperimentConfig& c) {
  return {
      {"dataset", c.dataset},
      {"split_manifest", c.split_manifest},
      {"split_seed", std::to_string(c.split_seed)},
      {"loss", to_string(c.loss)},
      {"tau", format_double(c.tau)},
      {"beta", format_double(c.beta)},
      {"sccf.squared", c.sccf_squared ? "true" : "false"},
      {"encoder.kind", to_string(c.encoder.kind)},
      {"encoder.train_layers", std::to_string(c.encoder.train_layers)},
      {"encoder.infer_layers", std::to_string(c.encoder.infer_layers)},
      {"encoder.layer_weights", join(c.encoder.layer_weights)},
      {"learning_rate", format_double(c.learning_rate)},
      {"batch_size", std::to_string(c.batch_size)},
      {"epochs", std::to_string(c.epochs)},
      {"dim", std::to_string(c.dim)},
      {"seed", std::to_string(c.seed)},
      {"eval_k", join(c.eval_k)},
      {"selection_k", std::to_string(c.selection_k)},
      {"eval_every", std::to_string(c.eval_every)},
      {"train_similarity", to_string(c.train_similarity)},
      {"infer_similarity", to_string(c.infer_similarity)},
      {"output_dir", c.output_dir},
  };
}

void write_key_values(std::ostream& out, const KeyValues& values) {
  for (const auto& [key, value] : values) out << key << " = " << value << '\n';
}

}  // namespace cflab
