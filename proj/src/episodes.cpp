#include "metawsd/episodes.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

namespace metawsd {

std::string_view split_name(Split s) {
  switch (s) {
    case Split::meta_train: return "meta_train";
    case Split::meta_val: return "meta_val";
    case Split::meta_test: return "meta_test";
  }
  return "?";
}

Split parse_split(std::string_view name) {
  if (name == "meta_train") return Split::meta_train;
  if (name == "meta_val") return Split::meta_val;
  if (name == "meta_test") return Split::meta_test;
  throw std::invalid_argument("unknown split '" + std::string(name) + "'");
}

std::string_view outcome_name(EvalOutcome o) {
  switch (o) {
    case EvalOutcome::accepted: return "accepted";
    case EvalOutcome::too_few_sentences: return "too_few_sentences";
    case EvalOutcome::too_many_senses: return "too_many_senses";
    case EvalOutcome::degenerate_query: return "degenerate_query";
  }
  return "?";
}

std::map<SenseKey, std::size_t> Episode::label_map() const {
  std::map<SenseKey, std::size_t> m;
  for (std::size_t l = 0; l < classes.size(); ++l) m.emplace(classes[l], l);
  return m;
}

std::size_t Episode::distinct_labels(std::span<const EpisodeItem> items) const {
  std::set<std::size_t> labels;
  for (const EpisodeItem& it : items) labels.insert(it.label);
  return labels.size();
}

WordSplit split_words(const Corpus& corpus, std::array<double, 3> ratios, std::uint64_t seed) {
  std::vector<std::string> words = corpus.word_ids();
  if (words.empty()) throw std::invalid_argument("split_words: corpus has no annotated words");
  const double total = ratios[0] + ratios[1] + ratios[2];
  if (std::abs(total - 1.0) > 1e-9 || ratios[0] < 0 || ratios[1] < 0 || ratios[2] < 0) {
    throw std::invalid_argument("split_words: ratios must be non-negative and sum to 1");
  }
  Rng rng = make_rng(seed, 1);
  shuffle(words, rng);
  const auto n = static_cast<double>(words.size());
  const auto n_train = static_cast<std::size_t>(std::llround(ratios[0] * n));
  const auto n_val = std::min(words.size() - n_train, static_cast<std::size_t>(std::llround(ratios[1] * n)));
  WordSplit out;
  out.meta_train.assign(words.begin(), words.begin() + static_cast<std::ptrdiff_t>(n_train));
  out.meta_val.assign(words.begin() + static_cast<std::ptrdiff_t>(n_train),
                      words.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  out.meta_test.assign(words.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), words.end());
  std::sort(out.meta_train.begin(), out.meta_train.end());
  std::sort(out.meta_val.begin(), out.meta_val.end());
  std::sort(out.meta_test.begin(), out.meta_test.end());
  return out;
}

std::size_t default_words_per_episode(std::size_t support_size) {
  return support_size == 4 ? 2 : 4;
}

Episode sample_train_episode(const Corpus& corpus, std::span<const std::string> words,
                             std::size_t support_size, std::size_t words_per_episode, Rng& rng) {
  if (words_per_episode == 0 || words_per_episode > support_size) {
    throw std::invalid_argument("sample_train_episode: need 1 <= r <= S");
  }
  if (words.size() < words_per_episode) {
    throw std::invalid_argument("sample_train_episode: " + std::to_string(words.size()) +
                                " eligible words for r = " + std::to_string(words_per_episode));
  }
  const std::size_t senses_per_word = support_size / words_per_episode;

  for (std::size_t attempt = 0; attempt < kMaxResamples; ++attempt) {
    struct Pair {
      SenseKey key;
      const std::vector<Instance>* instances;
    };
    std::vector<Pair> pairs;
    for (std::size_t w : sample_without_replacement(rng, words.size(), words_per_episode)) {
      const WordEntry& entry = corpus.word(words[w]);
      const std::size_t k = std::min(senses_per_word, entry.sense_count());
      for (std::size_t s : sample_without_replacement(rng, entry.sense_count(), k)) {
        const std::string& sense = entry.senses[s];
        pairs.push_back({{entry.word, sense}, &entry.instances.at(sense)});
      }
    }

    // Round-robin: slot i goes to pair i mod |P|.
    const std::size_t n_pairs = pairs.size();
    std::vector<std::size_t> slots(n_pairs, support_size / n_pairs);
    for (std::size_t p = 0; p < support_size % n_pairs; ++p) ++slots[p];

    bool feasible = true;
    for (std::size_t p = 0; p < n_pairs; ++p) {
      if (pairs[p].instances->size() < 2 * slots[p]) feasible = false;
    }
    if (!feasible) continue;

    std::vector<std::size_t> labels(n_pairs);
    std::iota(labels.begin(), labels.end(), 0);
    shuffle(labels, rng);

    Episode ep;
    ep.split = Split::meta_train;
    ep.classes.resize(n_pairs);
    for (std::size_t p = 0; p < n_pairs; ++p) {
      ep.classes[labels[p]] = pairs[p].key;
      const auto& pool = *pairs[p].instances;
      const auto picks = sample_without_replacement(rng, pool.size(), 2 * slots[p]);
      for (std::size_t i = 0; i < slots[p]; ++i) {
        ep.support.push_back({pool[picks[i]], labels[p]});
        ep.query.push_back({pool[picks[slots[p] + i]], labels[p]});
      }
    }
    shuffle(ep.support, rng);
    shuffle(ep.query, rng);
    return ep;
  }
  throw std::runtime_error("sample_train_episode: no feasible episode after " +
                           std::to_string(kMaxResamples) + " resamples");
}

EvalBuildResult build_eval_episode(const Corpus& corpus, const WordEntry& word,
                                   std::size_t support_size, Rng& rng, Split split) {
  if (word.sense_count() > support_size) return {EvalOutcome::too_many_senses, std::nullopt};
  const auto& sentences = word.sentences;
  if (sentences.size() < support_size + 1) return {EvalOutcome::too_few_sentences, std::nullopt};

  const auto picks = sample_without_replacement(rng, sentences.size(), support_size);
  std::vector<bool> in_support(sentences.size(), false);
  for (std::size_t p : picks) in_support[p] = true;

  struct Occurrence {
    Instance inst;
    std::string sense;
  };
  auto occurrences = [&](std::size_t sentence_idx) {
    std::vector<Occurrence> out;
    for (const TargetAnnotation& t : corpus.sentence(sentence_idx).targets) {
      if (t.word == word.word) out.push_back({{sentence_idx, t.token_index}, t.sense});
    }
    return out;
  };

  std::vector<Occurrence> support;
  std::set<std::string> support_senses;
  for (std::size_t p : picks) {
    for (auto& o : occurrences(sentences[p])) {
      support_senses.insert(o.sense);
      support.push_back(std::move(o));
    }
  }
  std::vector<Occurrence> query;
  std::set<std::string> query_senses;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    if (in_support[i]) continue;
    for (auto& o : occurrences(sentences[i])) {
      if (!support_senses.contains(o.sense)) continue;
      query_senses.insert(o.sense);
      query.push_back(std::move(o));
    }
  }
  if (query_senses.size() < 2) return {EvalOutcome::degenerate_query, std::nullopt};

  std::vector<std::string> senses(support_senses.begin(), support_senses.end());
  std::vector<std::size_t> labels(senses.size());
  std::iota(labels.begin(), labels.end(), 0);
  shuffle(labels, rng);

  Episode ep;
  ep.split = split;
  ep.word = word.word;
  ep.classes.resize(senses.size());
  std::map<std::string, std::size_t> label_of;
  for (std::size_t s = 0; s < senses.size(); ++s) {
    ep.classes[labels[s]] = {word.word, senses[s]};
    label_of[senses[s]] = labels[s];
  }
  for (const auto& o : support) ep.support.push_back({o.inst, label_of.at(o.sense)});
  for (const auto& o : query) ep.query.push_back({o.inst, label_of.at(o.sense)});
  return {EvalOutcome::accepted, std::move(ep)};
}

EpisodeDataset build_dataset(const Corpus& corpus, const BuildOptions& options) {
  EpisodeDataset ds;
  ds.options = options;
  ds.split = split_words(corpus, options.ratios, options.seed);

  std::size_t next_id = 0;
  if (options.train_episodes > 0) {
    Rng train_rng = make_rng(options.seed, 10);
    ds.train.reserve(options.train_episodes);
    for (std::size_t i = 0; i < options.train_episodes; ++i) {
      Episode ep = sample_train_episode(corpus, ds.split.meta_train, options.support_size,
                                        options.words_per_episode, train_rng);
      ep.id = next_id++;
      ds.train.push_back(std::move(ep));
    }
  }

  Rng eval_rng = make_rng(options.seed, 11);
  auto build_eval = [&](const std::vector<std::string>& words, Split split, std::vector<Episode>& out) {
    for (const std::string& w : words) {
      EvalBuildResult r = build_eval_episode(corpus, corpus.word(w), options.support_size, eval_rng, split);
      if (r.episode) {
        r.episode->id = next_id++;
        out.push_back(std::move(*r.episode));
      } else {
        ds.rejected[w] = r.outcome;
      }
    }
  };
  build_eval(ds.split.meta_val, Split::meta_val, ds.val);
  build_eval(ds.split.meta_test, Split::meta_test, ds.test);
  return ds;
}

SplitStats dataset_stats(std::span<const Episode> episodes) {
  SplitStats st;
  std::set<std::string> words;
  std::set<std::size_t> sentences;
  double senses = 0.0;
  for (const Episode& ep : episodes) {
    for (const SenseKey& k : ep.classes) words.insert(k.word);
    for (const EpisodeItem& it : ep.support) sentences.insert(it.instance.sentence);
    for (const EpisodeItem& it : ep.query) sentences.insert(it.instance.sentence);
    senses += static_cast<double>(ep.n_classes());
    ++st.support_sense_histogram[ep.distinct_labels(ep.support)];
    ++st.query_sense_histogram[ep.distinct_labels(ep.query)];
  }
  st.words = words.size();
  st.episodes = episodes.size();
  st.unique_sentences = sentences.size();
  st.average_senses = episodes.empty() ? 0.0 : senses / static_cast<double>(episodes.size());
  return st;
}

}  // namespace metawsd
