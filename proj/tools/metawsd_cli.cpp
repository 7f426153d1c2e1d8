// metawsd: generate | build-data | train | eval | sweep | run

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "metawsd/config.hpp"
#include "metawsd/corpus_io.hpp"
#include "metawsd/experiment.hpp"
#include "metawsd/manifest.hpp"
#include "metawsd/synthetic.hpp"

namespace fs = std::filesystem;
using namespace metawsd;

namespace {

struct Options {
  std::map<std::string, std::string> flags;  // one slot per RunConfig key
  std::string config_file;
  std::string stats_out;
};

void add_config_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config_file, "JSON file with RunConfig keys (flags override it)");
  for (const ConfigKey& k : RunConfig::keys()) {
    const std::string key(k.name);
    cmd->add_option("--" + key, o.flags[key], std::string(k.help));
  }
}

RunConfig resolve(const CLI::App* cmd, const Options& o) {
  RunConfig c = o.config_file.empty() ? RunConfig{} : RunConfig::from_file(o.config_file);
  for (const auto& [key, value] : o.flags) {
    if (cmd->count("--" + key) > 0) c.set(key, value);
  }
  return c;
}

fs::path require_path(const RunConfig& c, const std::string& key) {
  auto p = c.get_path(key);
  if (!p) throw std::invalid_argument("missing required --" + key);
  return *p;
}

fs::path out_dir(const RunConfig& c) {
  fs::path dir = require_path(c, "out_dir");
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

fs::path checkpoint_path(const RunConfig& c, const fs::path& dir, std::uint64_t seed) {
  std::string pattern = c.get("checkpoint");
  if (pattern.empty()) pattern = (dir / "checkpoint_{seed}.mwck").string();
  const std::string token = "{seed}";
  if (auto pos = pattern.find(token); pos != std::string::npos) pattern.replace(pos, token.size(), std::to_string(seed));
  return pattern;
}

struct Inputs {
  Corpus corpus;
  EpisodeDataset dataset;
};

Inputs load_inputs(const RunConfig& c) {
  Corpus corpus = load_corpus(require_path(c, "corpus"), require_path(c, "embeddings"));
  EpisodeDataset ds = read_manifest(require_path(c, "manifest"), corpus);
  return {std::move(corpus), std::move(ds)};
}

void check_support_size(const MetaConfig& mc, const EpisodeDataset& ds) {
  if (mc.support_size != ds.options.support_size) {
    throw std::invalid_argument("S=" + std::to_string(mc.support_size) + " does not match the manifest's S=" +
                                std::to_string(ds.options.support_size));
  }
}

void write_log(const fs::path& path, const std::vector<EpochLog>& log) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const EpochLog& e : log) {
    nlohmann::ordered_json j{{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_macro_f1", e.val_macro_f1}, {"lr", e.lr}};
    out << j.dump() << '\n';
  }
}

void cmd_generate(const RunConfig& c) {
  const SyntheticOptions opts = c.synthetic_options();
  const Corpus corpus = generate_synthetic_corpus(opts);
  save_corpus(corpus, require_path(c, "corpus"), require_path(c, "embeddings"));
  std::cout << "generated " << corpus.size() << " sentences, " << corpus.words().size() << " words, dim "
            << corpus.embedding_dim() << '\n';
}

void cmd_build_data(const RunConfig& c, const std::string& stats_out) {
  const BuildOptions opts = c.build_options();
  const Corpus corpus = load_corpus(require_path(c, "corpus"), require_path(c, "embeddings"));
  const fs::path manifest = require_path(c, "manifest");
  const EpisodeDataset ds = build_dataset(corpus, opts);
  write_manifest(manifest, ds, corpus);
  const std::string table = format_stats_table(ds);
  std::cout << table;
  if (!stats_out.empty()) write_text(stats_out, dataset_stats_json(ds).dump(2) + "\n");
}

void train_seeds(const RunConfig& c, const MetaConfig& mc, const Inputs& in, const fs::path& dir) {
  for (std::uint64_t seed : mc.seeds) {
    const TrainedRun run = train_run(mc, in.corpus, in.dataset, seed);
    if (has_trainable_model(mc.method)) save_checkpoint(checkpoint_path(c, dir, seed), run.checkpoint);
    write_log(dir / ("train_log_" + std::to_string(seed) + ".jsonl"), run.log);
    std::cout << mc.display_name() << " seed " << seed << ": " << run.log.size() << " epochs, best epoch "
              << run.best_epoch << '\n';
  }
}

EvalReport eval_seeds(const RunConfig& c, const MetaConfig& mc, const Inputs& in, const fs::path& dir) {
  std::vector<ScoreRecord> records;
  for (std::uint64_t seed : mc.seeds) {
    Checkpoint ckpt;
    if (!has_trainable_model(mc.method)) {
      ckpt.method = mc.display_name();
      ckpt.seed = seed;
    } else if (mc.ef) {
      ckpt = train_run(mc, in.corpus, in.dataset, seed).checkpoint;
    } else {
      ckpt = load_checkpoint(checkpoint_path(c, dir, seed));
      if (ckpt.seed != seed) {
        throw std::invalid_argument("checkpoint seed " + std::to_string(ckpt.seed) + " != run seed " +
                                    std::to_string(seed));
      }
      if (ckpt.method != mc.display_name()) {
        throw std::invalid_argument("checkpoint was trained with " + ckpt.method + ", not " + mc.display_name());
      }
    }
    const auto scores = evaluate_run(mc, in.corpus, ckpt, in.dataset.test);
    const auto rec = to_records(scores, seed);
    records.insert(records.end(), rec.begin(), rec.end());
  }
  const EvalReport report = aggregate(mc.display_name(), records);
  write_text(dir / "report.json", report.to_json().dump(2) + "\n");
  write_text(dir / "scores.csv", report.to_csv());
  std::printf("%s: macro F1 %.4f +- %.4f over %zu seeds\n", report.method.c_str(), report.mean, report.stddev,
              report.seed_means.size());
  return report;
}

void cmd_sweep(const RunConfig& c, const MetaConfig& mc, const Inputs& in, const fs::path& dir) {
  std::vector<std::size_t> counts;
  for (std::uint64_t v : c.get_u64_list("counts")) counts.push_back(static_cast<std::size_t>(v));
  if (!std::is_sorted(counts.begin(), counts.end())) throw std::invalid_argument("--counts must be ascending");
  const SweepTable t = episode_count_sweep(mc, in.corpus, in.dataset, counts);
  write_text(dir / "sweep.json", t.to_json().dump(2) + "\n");
  write_text(dir / "sweep.csv", t.to_csv());
  std::cout << t.to_csv();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Few-shot word sense meta-learning over pre-computed token embeddings"};
  app.require_subcommand(1);
  Options o;

  auto* generate = app.add_subcommand("generate", "write a synthetic corpus (JSONL + MWE1)");
  auto* build = app.add_subcommand("build-data", "split words and build the episode manifest");
  auto* train = app.add_subcommand("train", "train every seed; write checkpoints and logs");
  auto* eval = app.add_subcommand("eval", "meta-test every seed; write report.json and scores.csv");
  auto* sweep = app.add_subcommand("sweep", "test score against number of meta-training episodes");
  auto* run = app.add_subcommand("run", "train then eval");
  for (CLI::App* cmd : {generate, build, train, eval, sweep, run}) add_config_flags(cmd, o);
  build->add_option("--stats-out", o.stats_out, "also write split statistics as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    CLI::App* cmd = app.get_subcommands().front();
    const RunConfig c = resolve(cmd, o);
    if (cmd == generate) {
      cmd_generate(c);
    } else if (cmd == build) {
      cmd_build_data(c, o.stats_out);
    } else {
      const MetaConfig mc = c.meta_config();  // rejects conflicting settings before any work
      const fs::path dir = out_dir(c);
      const Inputs in = load_inputs(c);
      check_support_size(mc, in.dataset);
      c.write_resolved(dir / "config.resolved.json");
      if (cmd == train || cmd == run) train_seeds(c, mc, in, dir);
      if (cmd == eval || cmd == run) eval_seeds(c, mc, in, dir);
      if (cmd == sweep) cmd_sweep(c, mc, in, dir);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
