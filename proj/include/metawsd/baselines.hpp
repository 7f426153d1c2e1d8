#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "metawsd/meta.hpp"
#include "metawsd/trainer.hpp"

namespace metawsd {

/// Every query gets the most frequent support sense; ties go to the
/// lexicographically smallest sense id.
std::vector<std::size_t> majority_sense_predict(const Episode& episode);

/// Sense of the support item with the smallest cosine distance; ties go to
/// the lowest support index. Throws on zero-norm embeddings.
std::vector<std::size_t> nearest_neighbor_predict(const TaskData& task);

/// Log-softmax over the `active` columns only: n x |active|.
ad::Var masked_log_softmax(const ad::Var& logits, std::span<const std::size_t> active);

/// Full-width probabilities with exactly zero mass outside `active`.
Matrix masked_probabilities(const Matrix& logits, std::span<const std::size_t> active);

/// Non-episodic model: shared block plus one output layer over every
/// meta-training sense.
struct NeModel {
  SharedBlock shared;
  ad::Var head_weight;  // hidden x n_senses
  ad::Var head_bias;    // 1 x n_senses
  std::vector<SenseKey> senses;

  std::optional<std::size_t> index_of(const SenseKey& key) const;
  std::vector<ad::Var> parameters() const { return {shared.weight, shared.bias, head_weight, head_bias}; }
};

NeModel ne_init(const MetaConfig& config, std::size_t input_dim, std::span<const Episode> train_pool,
                std::uint64_t seed);

/// Masked cross-entropy of one mini-batch given global sense indices.
ad::Var ne_batch_loss(const NeModel& model, const Matrix& x, std::span<const std::size_t> global_labels);

struct NeTrainResult {
  NeModel model;
  std::size_t best_epoch = 0;
  std::vector<EpochLog> log;
};

/// Adam over merged support+query mini-batches (one per training episode)
/// with the same epoch / early-stopping loop as meta_train.
NeTrainResult ne_train(const MetaConfig& config, const Corpus& corpus,
                       std::span<const Episode> train_pool, std::span<const Episode> val_episodes,
                       std::uint64_t seed);

/// Fine-tune a copy on the episode's support set (m SGD steps, alpha/gamma),
/// then predict query labels. Senses unseen in training get fresh rows drawn
/// from `rng`. With config.ne_mask_test the softmax covers only the episode's
/// senses; otherwise all units, and a sense outside the episode is returned
/// as label n_classes.
std::vector<std::size_t> ne_finetune_and_predict(const NeModel& model, const Episode& episode,
                                                 const TaskData& task, const MetaConfig& config,
                                                 Rng& rng);

std::vector<EpisodeScore> ne_test(const MetaConfig& config, const Corpus& corpus, const NeModel& model,
                                  std::span<const Episode> episodes, std::uint64_t seed);

/// The meta-learner's test procedure from a freshly initialized theta.
std::vector<std::size_t> ef_wrap(const MetaConfig& config, const TaskData& task, std::size_t input_dim,
                                 std::uint64_t seed, Rng& head_rng);

/// Scores for the training-free baselines (majority, nearest_neighbor).
std::vector<EpisodeScore> baseline_test(Method method, const Corpus& corpus,
                                        std::span<const Episode> episodes);

}  // namespace metawsd
