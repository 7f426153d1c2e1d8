#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "metawsd/corpus.hpp"
#include "metawsd/random.hpp"

namespace metawsd {

enum class Split { meta_train, meta_val, meta_test };

std::string_view split_name(Split s);
Split parse_split(std::string_view name);

struct EpisodeItem {
  Instance instance;
  std::size_t label = 0;

  bool operator==(const EpisodeItem&) const = default;
};

/// One task: support/query items and the sense -> label bijection, stored as
/// `classes[label] = sense`.
struct Episode {
  std::size_t id = 0;
  Split split = Split::meta_train;
  std::string word;  // evaluation episodes only
  std::vector<SenseKey> classes;
  std::vector<EpisodeItem> support;
  std::vector<EpisodeItem> query;

  std::size_t n_classes() const { return classes.size(); }
  std::map<SenseKey, std::size_t> label_map() const;
  std::size_t distinct_labels(std::span<const EpisodeItem> items) const;

  bool operator==(const Episode&) const = default;
};

struct WordSplit {
  std::vector<std::string> meta_train;
  std::vector<std::string> meta_val;
  std::vector<std::string> meta_test;
};

inline constexpr std::array<double, 3> kDefaultSplitRatios{0.60, 0.15, 0.25};

/// Random disjoint word split. Sizes are rounded from the ratios, the test
/// set takes the remainder.
WordSplit split_words(const Corpus& corpus, std::array<double, 3> ratios, std::uint64_t seed);

inline constexpr std::size_t kMaxResamples = 100;

/// Words per training episode: 2 for |S| = 4, else 4.
std::size_t default_words_per_episode(std::size_t support_size);

/// Meta-training episode: r words, min(S / r, nu) senses each, S slots in
/// support and in query dealt round-robin over the (word, sense) pairs.
Episode sample_train_episode(const Corpus& corpus, std::span<const std::string> words,
                             std::size_t support_size, std::size_t words_per_episode, Rng& rng);

enum class EvalOutcome { accepted, too_few_sentences, too_many_senses, degenerate_query };

std::string_view outcome_name(EvalOutcome o);

struct EvalBuildResult {
  EvalOutcome outcome = EvalOutcome::accepted;
  std::optional<Episode> episode;
};

/// Single-word evaluation episode. Support: S sentences drawn uniformly.
/// Query: every target occurrence in the remaining sentences whose sense is in
/// the support. Rejected when the query spans fewer than two senses.
EvalBuildResult build_eval_episode(const Corpus& corpus, const WordEntry& word,
                                   std::size_t support_size, Rng& rng,
                                   Split split = Split::meta_test);

struct BuildOptions {
  std::size_t support_size = 8;
  std::size_t words_per_episode = 4;
  std::size_t train_episodes = 10000;
  std::array<double, 3> ratios = kDefaultSplitRatios;
  std::uint64_t seed = 42;
};

/// Everything needed to replay an experiment: splits plus all episodes.
struct EpisodeDataset {
  BuildOptions options;
  WordSplit split;
  std::vector<Episode> train;
  std::vector<Episode> val;
  std::vector<Episode> test;
  std::map<std::string, EvalOutcome> rejected;  // word -> reason

  bool operator==(const EpisodeDataset& o) const {
    return train == o.train && val == o.val && test == o.test;
  }
};

EpisodeDataset build_dataset(const Corpus& corpus, const BuildOptions& options);

struct SplitStats {
  std::size_t words = 0;
  std::size_t episodes = 0;
  std::size_t unique_sentences = 0;
  double average_senses = 0.0;
  std::map<std::size_t, std::size_t> support_sense_histogram;  // senses -> episodes
  std::map<std::size_t, std::size_t> query_sense_histogram;
};

SplitStats dataset_stats(std::span<const Episode> episodes);

}  // namespace metawsd
