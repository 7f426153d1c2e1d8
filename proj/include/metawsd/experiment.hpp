#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "metawsd/baselines.hpp"
#include "metawsd/checkpoint.hpp"
#include "metawsd/episodes.hpp"
#include "metawsd/meta.hpp"
#include "metawsd/report.hpp"
#include "metawsd/trainer.hpp"

namespace metawsd {

struct TrainedRun {
  Checkpoint checkpoint;
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
};

inline constexpr std::size_t kAllEpisodes = std::numeric_limits<std::size_t>::max();

/// Train one seed on the first `train_limit` episodes of the pool. Methods
/// without training (majority, nearest neighbour, EF variants) return the
/// initial parameters, if any, and an empty log.
TrainedRun train_run(const MetaConfig& config, const Corpus& corpus, const EpisodeDataset& dataset,
                     std::uint64_t seed, std::size_t train_limit = kAllEpisodes);

/// Meta-test scores of a trained run on `episodes`.
std::vector<EpisodeScore> evaluate_run(const MetaConfig& config, const Corpus& corpus,
                                       const Checkpoint& checkpoint, std::span<const Episode> episodes);

std::vector<ScoreRecord> to_records(std::span<const EpisodeScore> scores, std::uint64_t seed);

/// Train and test every seed in config.seeds on the test split.
EvalReport run_method(const MetaConfig& config, const Corpus& corpus, const EpisodeDataset& dataset,
                      std::span<const Episode> test_episodes);
inline EvalReport run_method(const MetaConfig& config, const Corpus& corpus, const EpisodeDataset& dataset) {
  return run_method(config, corpus, dataset, dataset.test);
}

/// Mean test macro F1 after training on the first N episodes, for each N in
/// `counts`. N = 0 tests the initial parameters.
SweepTable episode_count_sweep(const MetaConfig& config, const Corpus& corpus,
                               const EpisodeDataset& dataset, std::span<const std::size_t> counts);

}  // namespace metawsd
