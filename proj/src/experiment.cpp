#include "metawsd/experiment.hpp"

#include <algorithm>
#include <stdexcept>

namespace metawsd {

namespace {

Checkpoint shared_checkpoint(const MetaConfig& config, const SharedBlock& theta, std::uint64_t seed) {
  Checkpoint c;
  c.method = config.display_name();
  c.seed = seed;
  c.activation = theta.activation;
  c.tensors = theta.values();
  return c;
}

NeModel ne_from_checkpoint(const Checkpoint& c) {
  if (c.tensors.size() != 4) throw std::invalid_argument("checkpoint: NE-Baseline needs 4 tensors");
  NeModel m;
  m.shared = SharedBlock::from_values(std::span(c.tensors).first(2), c.activation);
  m.head_weight = ad::Var::parameter(c.tensors[2]);
  m.head_bias = ad::Var::parameter(c.tensors[3]);
  m.senses = c.senses;
  if (m.head_weight.cols() != m.senses.size()) {
    throw std::invalid_argument("checkpoint: NE-Baseline head width does not match its sense table");
  }
  return m;
}

}  // namespace

TrainedRun train_run(const MetaConfig& config, const Corpus& corpus, const EpisodeDataset& dataset,
                     std::uint64_t seed, std::size_t train_limit) {
  config.validate();
  const std::size_t n = std::min(train_limit, dataset.train.size());
  const std::span<const Episode> pool(dataset.train.data(), n);
  TrainedRun run;
  if (!has_trainable_model(config.method)) {
    run.checkpoint.method = config.display_name();
    run.checkpoint.seed = seed;
    return run;
  }
  if (config.method == Method::ne_baseline) {
    NeTrainResult r = ne_train(config, corpus, pool, dataset.val, seed);
    run.checkpoint.method = config.display_name();
    run.checkpoint.seed = seed;
    run.checkpoint.activation = r.model.shared.activation;
    for (const ad::Var& p : r.model.parameters()) run.checkpoint.tensors.push_back(p.value());
    run.checkpoint.senses = r.model.senses;
    run.log = std::move(r.log);
    run.best_epoch = r.best_epoch;
    return run;
  }
  if (config.ef) {
    run.checkpoint = shared_checkpoint(config, initial_theta(config, corpus.embedding_dim(), seed), seed);
    return run;
  }
  TrainResult r = meta_train(config, corpus, pool, dataset.val, seed);
  run.checkpoint = shared_checkpoint(config, r.theta, seed);
  run.log = std::move(r.log);
  run.best_epoch = r.best_epoch;
  return run;
}

std::vector<EpisodeScore> evaluate_run(const MetaConfig& config, const Corpus& corpus,
                                       const Checkpoint& checkpoint, std::span<const Episode> episodes) {
  if (!has_trainable_model(config.method)) return baseline_test(config.method, corpus, episodes);
  if (config.method == Method::ne_baseline) {
    return ne_test(config, corpus, ne_from_checkpoint(checkpoint), episodes, checkpoint.seed);
  }
  if (checkpoint.tensors.size() != 2) throw std::invalid_argument("checkpoint: expected shared weight and bias");
  if (checkpoint.tensors[0].rows() != corpus.embedding_dim()) {
    throw std::invalid_argument("checkpoint: input dimension " + std::to_string(checkpoint.tensors[0].rows()) +
                                " does not match corpus embedding dimension " +
                                std::to_string(corpus.embedding_dim()));
  }
  const SharedBlock theta = SharedBlock::from_values(checkpoint.tensors, checkpoint.activation);
  return meta_test(config, corpus, &theta, episodes, checkpoint.seed);
}

std::vector<ScoreRecord> to_records(std::span<const EpisodeScore> scores, std::uint64_t seed) {
  std::vector<ScoreRecord> out;
  out.reserve(scores.size());
  for (const EpisodeScore& s : scores) out.push_back({s.word, s.query_senses, seed, s.macro_f1});
  return out;
}

EvalReport run_method(const MetaConfig& config, const Corpus& corpus, const EpisodeDataset& dataset,
                      std::span<const Episode> test_episodes) {
  std::vector<ScoreRecord> records;
  for (std::uint64_t seed : config.seeds) {
    const TrainedRun run = train_run(config, corpus, dataset, seed);
    const auto scores = evaluate_run(config, corpus, run.checkpoint, test_episodes);
    const auto rec = to_records(scores, seed);
    records.insert(records.end(), rec.begin(), rec.end());
  }
  return aggregate(config.display_name(), records);
}

SweepTable episode_count_sweep(const MetaConfig& config, const Corpus& corpus,
                               const EpisodeDataset& dataset, std::span<const std::size_t> counts) {
  if (!has_trainable_model(config.method) || config.ef) {
    throw std::invalid_argument("sweep needs a trainable method without the ef- prefix");
  }
  SweepTable table;
  table.method = config.display_name();
  for (std::size_t count : counts) {
    if (count > dataset.train.size()) {
      throw std::invalid_argument("sweep: " + std::to_string(count) + " episodes requested but the pool has " +
                                  std::to_string(dataset.train.size()));
    }
    std::vector<ScoreRecord> records;
    for (std::uint64_t seed : config.seeds) {
      const TrainedRun run = train_run(config, corpus, dataset, seed, count);
      const auto scores = evaluate_run(config, corpus, run.checkpoint, dataset.test);
      const auto rec = to_records(scores, seed);
      records.insert(records.end(), rec.begin(), rec.end());
    }
    const EvalReport r = aggregate(table.method, records);
    table.rows.push_back({count, r.mean, r.stddev, r.seed_means});
  }
  return table;
}

}  // namespace metawsd
