#include "metawsd/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "metawsd/report.hpp"

namespace metawsd {

using nlohmann::json;
using nlohmann::ordered_json;

const std::vector<ConfigKey>& RunConfig::keys() {
  static const std::vector<ConfigKey> k = {
      {"method", "protonet", "protonet|fomaml|maml|protofomaml|protomaml|majority|nearest_neighbor|ne_baseline, optional ef- prefix"},
      {"S", "8", "support set size in sentences"},
      {"r", "", "words per meta-training episode (default 2 for S=4, else 4)"},
      {"learner_lr", "", "inner-loop rate for the shared block (alpha)"},
      {"output_lr", "", "inner-loop rate for the task head (gamma)"},
      {"meta_lr", "", "outer-loop Adam rate (beta)"},
      {"inner_steps", "", "inner-loop SGD steps (m)"},
      {"batch_size", "", "tasks per outer step"},
      {"max_epochs", "30", "epoch limit"},
      {"patience", "2", "early-stopping patience in epochs"},
      {"create_graph", "", "second-order meta-gradients (maml, protomaml)"},
      {"adapt_top_only", "false", "inner loop adapts the task head only"},
      {"hidden_dim", "256", "shared linear layer size"},
      {"activation", "relu", "tanh|relu"},
      {"decay_every", "500", "halve outer learning rates every this many steps (0 disables)"},
      {"decay_factor", "0.5", "learning-rate decay factor"},
      {"ne_mask_test", "true", "NE-Baseline test softmax over the episode's senses only"},
      {"seeds", "42,43,44,45,46", "run seeds"},
      {"train_episodes", "10000", "meta-training episode pool size"},
      {"split_seed", "42", "seed of the word split and episode construction"},
      {"corpus", "", "annotation JSONL path"},
      {"embeddings", "", "MWE1 embedding container path"},
      {"manifest", "", "episode manifest path"},
      {"out_dir", "", "output directory"},
      {"checkpoint", "", "checkpoint path; {seed} is replaced by the run seed"},
      {"counts", "0,500,1000,2000", "episode counts for the sweep"},
      {"n_words", "60", "synthetic: number of words"},
      {"senses", "4", "synthetic: sense counts drawn per word"},
      {"sentences_per_sense", "8", "synthetic: sentences per (word, sense)"},
      {"embedding_dim", "16", "synthetic: embedding dimension"},
      {"informative_dims", "0", "synthetic: sense-bearing dimensions (0 = dim/4)"},
      {"tokens_per_sentence", "6", "synthetic: tokens per sentence"},
      {"separation", "3", "synthetic: sense cluster separation"},
      {"noise_sigma", "1", "synthetic: per-coordinate noise"},
      {"word_spread", "1", "synthetic: spread of word centres"},
      {"data_seed", "7", "synthetic: generator seed"},
  };
  return k;
}

bool RunConfig::is_key(std::string_view name) {
  const auto& k = keys();
  return std::any_of(k.begin(), k.end(), [&](const ConfigKey& c) { return c.name == name; });
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (!is_key(key)) throw std::invalid_argument("unknown config key '" + key + "'");
  values_[key] = value;
}

std::string RunConfig::get(const std::string& key) const {
  if (auto it = values_.find(key); it != values_.end()) return it->second;
  for (const ConfigKey& k : keys()) {
    if (k.name == key) return std::string(k.default_value);
  }
  throw std::invalid_argument("unknown config key '" + key + "'");
}

void RunConfig::merge_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("config must be a flat JSON object");
  for (const auto& [key, v] : j.items()) {
    std::string text;
    if (v.is_string()) {
      text = v.get<std::string>();
    } else if (v.is_boolean()) {
      text = v.get<bool>() ? "true" : "false";
    } else if (v.is_number_integer() || v.is_number_unsigned()) {
      text = v.dump();
    } else if (v.is_number_float()) {
      text = format_double(v.get<double>());
    } else if (v.is_array()) {
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) text += ",";
        text += v[i].is_string() ? v[i].get<std::string>() : v[i].dump();
      }
    } else {
      throw std::invalid_argument("config key '" + key + "' has an unsupported value type");
    }
    set(key, text);
  }
}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config " + path.string());
  RunConfig c;
  try {
    c.merge_json(json::parse(in));
  } catch (const json::exception& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
  return c;
}

std::size_t RunConfig::get_size(const std::string& key) const {
  const std::string s = get(key);
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw std::invalid_argument("config key '" + key + "': expected a non-negative integer, got '" + s + "'");
  }
  return v;
}

double RunConfig::get_double(const std::string& key) const {
  const std::string s = get(key);
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "': expected a number, got '" + s + "'");
  }
}

bool RunConfig::get_bool(const std::string& key) const {
  const std::string s = get(key);
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw std::invalid_argument("config key '" + key + "': expected true/false, got '" + s + "'");
}

std::vector<std::uint64_t> RunConfig::get_u64_list(const std::string& key) const {
  std::vector<std::uint64_t> out;
  std::stringstream ss(get(key));
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (item.empty()) continue;
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc() || ptr != item.data() + item.size()) {
      throw std::invalid_argument("config key '" + key + "': bad list entry '" + item + "'");
    }
    out.push_back(v);
  }
  return out;
}

std::optional<std::filesystem::path> RunConfig::get_path(const std::string& key) const {
  const std::string s = get(key);
  if (s.empty()) return std::nullopt;
  return std::filesystem::path(s);
}

std::pair<Method, bool> parse_method_spec(std::string_view spec) {
  constexpr std::string_view prefix = "ef-";
  if (spec.starts_with(prefix)) return {parse_method(spec.substr(prefix.size())), true};
  return {parse_method(spec), false};
}

MetaConfig RunConfig::meta_config() const {
  const auto [method, ef] = parse_method_spec(get("method"));
  MetaConfig c = MetaConfig::preset(method);
  c.ef = ef;
  c.support_size = get_size("S");
  c.words_per_episode = has("r") ? get_size("r") : default_words_per_episode(c.support_size);
  if (has("learner_lr")) c.learner_lr = get_double("learner_lr");
  if (has("output_lr")) c.output_lr = get_double("output_lr");
  if (has("meta_lr")) c.meta_lr = get_double("meta_lr");
  if (has("inner_steps")) c.inner_steps = get_size("inner_steps");
  if (has("batch_size")) c.batch_size = get_size("batch_size");
  if (has("create_graph")) c.create_graph = get_bool("create_graph");
  c.max_epochs = get_size("max_epochs");
  c.patience = get_size("patience");
  c.adapt_top_only = get_bool("adapt_top_only");
  c.hidden_dim = get_size("hidden_dim");
  c.activation = parse_activation(get("activation"));
  c.decay_every = get_size("decay_every");
  c.decay_factor = get_double("decay_factor");
  c.ne_mask_test = get_bool("ne_mask_test");
  c.seeds = get_u64_list("seeds");
  c.validate();
  return c;
}

BuildOptions RunConfig::build_options() const {
  BuildOptions b;
  b.support_size = get_size("S");
  b.words_per_episode = has("r") ? get_size("r") : default_words_per_episode(b.support_size);
  b.train_episodes = get_size("train_episodes");
  b.seed = get_size("split_seed");
  return b;
}

SyntheticOptions RunConfig::synthetic_options() const {
  SyntheticOptions o;
  o.n_words = get_size("n_words");
  o.sense_counts.clear();
  for (std::uint64_t v : get_u64_list("senses")) o.sense_counts.push_back(static_cast<std::size_t>(v));
  o.sentences_per_sense = get_size("sentences_per_sense");
  o.embedding_dim = get_size("embedding_dim");
  o.informative_dims = get_size("informative_dims");
  o.tokens_per_sentence = get_size("tokens_per_sentence");
  o.cluster_separation = get_double("separation");
  o.noise_sigma = get_double("noise_sigma");
  o.word_spread = get_double("word_spread");
  o.seed = get_size("data_seed");
  return o;
}

ordered_json RunConfig::resolved() const {
  ordered_json j;
  for (const ConfigKey& k : keys()) j[std::string(k.name)] = get(std::string(k.name));
  const MetaConfig c = meta_config();
  j["r"] = std::to_string(c.words_per_episode);
  j["learner_lr"] = format_double(c.learner_lr);
  j["output_lr"] = format_double(c.output_lr);
  j["meta_lr"] = format_double(c.meta_lr);
  j["inner_steps"] = std::to_string(c.inner_steps);
  j["batch_size"] = std::to_string(c.batch_size);
  j["create_graph"] = c.create_graph ? "true" : "false";
  return j;
}

void RunConfig::write_resolved(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write " + path.string());
  out << resolved().dump(2) << '\n';
}

}  // namespace metawsd
