#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "metawsd/meta.hpp"

namespace metawsd {

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_macro_f1 = 0.0;
  double lr = 0.0;
};

struct EpisodeScore {
  std::size_t episode_id = 0;
  std::string word;
  std::size_t support_senses = 0;
  std::size_t query_senses = 0;
  double macro_f1 = 0.0;
};

double mean_macro_f1(std::span<const EpisodeScore> scores);

/// Meta-validation score of a candidate theta after `epoch`.
using Validator = std::function<double(const SharedBlock& theta, std::size_t epoch)>;

struct TrainResult {
  SharedBlock theta;  // best validation epoch
  std::size_t best_epoch = 0;
  double best_val = 0.0;
  std::size_t epochs_run = 0;
  std::size_t outer_steps = 0;
  std::vector<EpochLog> log;
};

/// Deterministic initial shared block for a run seed. Meta-training and the
/// EF baselines start from the same draw.
SharedBlock initial_theta(const MetaConfig& config, std::size_t input_dim, std::uint64_t seed);

/// Epoch loop over the training pool (shuffled per epoch) in batches of
/// config.batch_size, validating after each epoch. Stops once the metric has
/// not improved for config.patience epochs and returns the best theta.
TrainResult meta_train(const MetaConfig& config, const Corpus& corpus,
                       std::span<const Episode> train_pool, std::span<const Episode> val_episodes,
                       std::uint64_t seed, const Validator& validator = {});

/// Per-episode macro F1 of the method's test procedure. A null theta means
/// a freshly initialized model (the EF baselines).
std::vector<EpisodeScore> meta_test(const MetaConfig& config, const Corpus& corpus,
                                    const SharedBlock* theta, std::span<const Episode> episodes,
                                    std::uint64_t seed);

/// Head-initialization stream for one evaluation episode; independent of the
/// order episodes are visited in.
Rng episode_rng(std::uint64_t seed, std::size_t episode_id);

EpisodeScore score_episode(const Episode& episode, std::span<const std::size_t> gold,
                           std::span<const std::size_t> pred);

}  // namespace metawsd
