#include "metawsd/trainer.hpp"

#include <limits>
#include <numeric>
#include <set>

#include "metawsd/metrics.hpp"

namespace metawsd {

double mean_macro_f1(std::span<const EpisodeScore> scores) {
  if (scores.empty()) return 0.0;
  double s = 0.0;
  for (const EpisodeScore& e : scores) s += e.macro_f1;
  return s / static_cast<double>(scores.size());
}

SharedBlock initial_theta(const MetaConfig& config, std::size_t input_dim, std::uint64_t seed) {
  Rng rng = make_rng(seed, 1);
  return init_shared(input_dim, config.hidden_dim, config.activation, rng);
}

Rng episode_rng(std::uint64_t seed, std::size_t episode_id) {
  return make_rng(mix_seed(seed, 4), episode_id);
}

EpisodeScore score_episode(const Episode& episode, std::span<const std::size_t> gold,
                           std::span<const std::size_t> pred) {
  EpisodeScore s;
  s.episode_id = episode.id;
  s.word = episode.word;
  s.support_senses = episode.distinct_labels(episode.support);
  s.query_senses = episode.distinct_labels(episode.query);
  s.macro_f1 = episode_macro_f1(gold, pred);
  return s;
}

std::vector<EpisodeScore> meta_test(const MetaConfig& config, const Corpus& corpus,
                                    const SharedBlock* theta, std::span<const Episode> episodes,
                                    std::uint64_t seed) {
  const SharedBlock model = theta ? *theta : initial_theta(config, corpus.embedding_dim(), seed);
  std::vector<EpisodeScore> out;
  out.reserve(episodes.size());
  for (const Episode& ep : episodes) {
    const TaskData task = materialize(ep, corpus);
    Rng rng = episode_rng(seed, ep.id);
    const auto pred = predict_episode(config, task, model, rng);
    out.push_back(score_episode(ep, task.query_y, pred));
  }
  return out;
}

TrainResult meta_train(const MetaConfig& config, const Corpus& corpus,
                       std::span<const Episode> train_pool, std::span<const Episode> val_episodes,
                       std::uint64_t seed, const Validator& validator) {
  config.validate();
  if (!is_meta_learner(config.method)) {
    throw std::invalid_argument("meta_train: " + std::string(method_name(config.method)) +
                                " is not a meta-learner");
  }
  TrainResult result;
  result.theta = initial_theta(config, corpus.embedding_dim(), seed);
  if (train_pool.empty() || config.max_epochs == 0) return result;

  std::vector<TaskData> tasks;
  tasks.reserve(train_pool.size());
  for (const Episode& ep : train_pool) tasks.push_back(materialize(ep, corpus));

  const Validator validate = validator ? validator : Validator([&](const SharedBlock& theta, std::size_t) {
    const auto scores = meta_test(config, corpus, &theta, val_episodes, seed);
    return mean_macro_f1(scores);
  });

  Adam optimizer(config.meta_schedule());
  Rng order_rng = make_rng(seed, 2);
  Rng head_rng = make_rng(seed, 3);
  SharedBlock theta = result.theta;
  std::vector<Matrix> best = theta.values();
  double best_val = -std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    shuffle(tasks, order_rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < tasks.size(); start += config.batch_size) {
      const std::size_t end = std::min(tasks.size(), start + config.batch_size);
      const std::span<const TaskData> batch(tasks.data() + start, end - start);
      loss_sum += outer_step(config, batch, theta, optimizer, head_rng) * static_cast<double>(batch.size());
      ++result.outer_steps;
    }
    const double val = validate(theta, epoch);
    result.log.push_back({epoch, loss_sum / static_cast<double>(tasks.size()), val, optimizer.current_lr()});
    result.epochs_run = epoch;
    if (val > best_val) {
      best_val = val;
      best = theta.values();
      result.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  result.best_val = best_val;
  result.theta = SharedBlock::from_values(best, config.activation);
  return result;
}

}  // namespace metawsd
