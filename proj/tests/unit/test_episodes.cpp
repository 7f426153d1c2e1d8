#include <doctest.h>

#include <set>

#include "../support/oracles.hpp"
#include "metawsd/episodes.hpp"
#include "metawsd/manifest.hpp"
#include "metawsd/synthetic.hpp"

using namespace metawsd;

namespace {

Corpus blob_corpus(std::size_t n_words, std::vector<std::size_t> senses, std::size_t per_sense,
                   std::uint64_t seed = 7) {
  SyntheticOptions o;
  o.n_words = n_words;
  o.sense_counts = std::move(senses);
  o.sentences_per_sense = per_sense;
  o.seed = seed;
  return generate_synthetic_corpus(o);
}

Corpus single_word_corpus(const std::vector<std::string>& senses, std::uint64_t seed = 1) {
  Rng rng = make_rng(seed);
  return Corpus(oracle::word_sentences("w", senses, 4, rng), 4);
}

}  // namespace

TEST_CASE("split_words") {
  const Corpus c = blob_corpus(20, {2}, 4);
  const WordSplit s = split_words(c, kDefaultSplitRatios, 3);
  CHECK(s.meta_train.size() == 12);
  CHECK(s.meta_val.size() == 3);
  CHECK(s.meta_test.size() == 5);
  std::set<std::string> all;
  for (const auto* part : {&s.meta_train, &s.meta_val, &s.meta_test}) all.insert(part->begin(), part->end());
  CHECK(all.size() == 20);
  const WordSplit again = split_words(c, kDefaultSplitRatios, 3);
  CHECK(again.meta_train == s.meta_train);
  CHECK(again.meta_test == s.meta_test);
  CHECK(split_words(c, kDefaultSplitRatios, 4).meta_train != s.meta_train);

  for (std::size_t n = 1; n <= 37; ++n) {
    const Corpus cn = blob_corpus(n, {1}, 1);
    const WordSplit sn = split_words(cn, kDefaultSplitRatios, n);
    CHECK(sn.meta_train.size() + sn.meta_val.size() + sn.meta_test.size() == n);
    CHECK(std::abs(static_cast<double>(sn.meta_train.size()) - 0.60 * n) <= 1.0);
    CHECK(std::abs(static_cast<double>(sn.meta_val.size()) - 0.15 * n) <= 1.0);
    CHECK(std::abs(static_cast<double>(sn.meta_test.size()) - 0.25 * n) <= 1.0);
  }
  CHECK_THROWS(split_words(Corpus(), kDefaultSplitRatios, 1));
  CHECK_THROWS(split_words(c, {0.5, 0.5, 0.5}, 1));
}

TEST_CASE("training episodes: S=8, r=4 gives four words with two senses and one slot each") {
  const Corpus c = blob_corpus(12, {4}, 4);
  const auto words = c.word_ids();
  Rng rng = make_rng(5);
  for (int i = 0; i < 200; ++i) {
    const Episode ep = sample_train_episode(c, words, 8, 4, rng);
    CHECK(oracle::check_train_episode(c, ep, 8, 4) == "");
    CHECK(ep.n_classes() == 8);
  }
}

TEST_CASE("training episodes: property sweep over S, r and sense counts") {
  const Corpus c = blob_corpus(30, {1, 2, 3, 5, 8}, 8, 11);
  const auto words = c.word_ids();
  Rng rng = make_rng(6);
  for (std::size_t S : {4u, 8u, 16u, 32u}) {
    for (std::size_t r : {default_words_per_episode(S), std::size_t{1}, std::size_t{3}}) {
      if (r > S) continue;
      for (int i = 0; i < 100; ++i) {
        CAPTURE(S);
        CAPTURE(r);
        const Episode ep = sample_train_episode(c, words, S, r, rng);
        CHECK(oracle::check_train_episode(c, ep, S, r) == "");
      }
    }
  }
}

TEST_CASE("a single-sense word contributes one sense") {
  Rng g = make_rng(2);
  auto sents = oracle::word_sentences("solo", std::vector<std::string>(6, "only"), 3, g);
  auto other = oracle::word_sentences("duo", {"a", "b", "a", "b", "a", "b"}, 3, g);
  sents.insert(sents.end(), other.begin(), other.end());
  const Corpus c(sents, 3);
  const std::vector<std::string> words{"duo", "solo"};
  Rng rng = make_rng(3);
  const Episode ep = sample_train_episode(c, words, 4, 2, rng);
  std::size_t solo = 0;
  for (const auto& k : ep.classes) solo += k.word == "solo";
  CHECK(solo == 1);
  CHECK(ep.support.size() == 4);
  CHECK(oracle::check_train_episode(c, ep, 4, 2) == "");
}

TEST_CASE("infeasible training words fail after bounded retries") {
  const Corpus c = single_word_corpus({"a", "b"});
  const std::vector<std::string> words{"w"};
  Rng rng = make_rng(1);
  CHECK_THROWS_AS(sample_train_episode(c, words, 4, 1, rng), std::runtime_error);
  CHECK_THROWS_AS(sample_train_episode(c, words, 4, 2, rng), std::invalid_argument);
}

TEST_CASE("label shuffling is uniform for a fixed two-sense word") {
  const Corpus c = blob_corpus(2, {2}, 6);
  const auto words = c.word_ids();
  Rng rng = make_rng(77);
  std::size_t first_low = 0, n = 0;
  for (int i = 0; i < 10000; ++i) {
    const Episode ep = sample_train_episode(c, words, 4, 2, rng);
    const auto lm = ep.label_map();
    const SenseKey a{words[0], c.word(words[0]).senses[0]}, b{words[0], c.word(words[0]).senses[1]};
    first_low += lm.at(a) < lm.at(b);
    ++n;
  }
  CHECK(std::abs(static_cast<double>(first_low) / static_cast<double>(n) - 0.5) <= 0.02);
}

TEST_CASE("a sense can take different labels in different episodes") {
  const Corpus c = blob_corpus(6, {2}, 4);
  const auto words = c.word_ids();
  Rng rng = make_rng(9);
  std::map<SenseKey, std::set<std::size_t>> seen;
  for (int i = 0; i < 50; ++i) {
    const Episode ep = sample_train_episode(c, words, 8, 4, rng);
    for (const auto& [k, l] : ep.label_map()) seen[k].insert(l);
  }
  std::size_t multi = 0;
  for (const auto& [k, ls] : seen) multi += ls.size() > 1;
  CHECK(multi > 0);
}

TEST_CASE("evaluation episodes: 2 senses, 6 sentences, S=4 against exhaustive enumeration") {
  // Every sense assignment of 6 sentences; the oracle enumerates all C(6,4)
  // supports and derives the exact acceptance probability of a uniform draw.
  for (unsigned mask = 0; mask < 64; ++mask) {
    std::vector<std::string> senses;
    for (int i = 0; i < 6; ++i) senses.push_back((mask >> i) & 1 ? "b" : "a");
    const Corpus c = single_word_corpus(senses, mask + 1);
    std::size_t acceptable = 0, supports = 0;
    for (unsigned sup = 0; sup < 64; ++sup) {
      if (std::popcount(sup) != 4) continue;
      ++supports;
      std::set<std::string> in_support, in_query;
      for (int i = 0; i < 6; ++i) {
        if ((sup >> i) & 1) in_support.insert(senses[i]);
      }
      for (int i = 0; i < 6; ++i) {
        if (!((sup >> i) & 1) && in_support.contains(senses[i])) in_query.insert(senses[i]);
      }
      acceptable += in_query.size() >= 2;
    }
    const double p = static_cast<double>(acceptable) / static_cast<double>(supports);
    Rng rng = make_rng(mask, 99);
    std::size_t accepted = 0;
    const std::size_t trials = 400;
    for (std::size_t t = 0; t < trials; ++t) {
      const auto res = build_eval_episode(c, c.word("w"), 4, rng);
      if (res.outcome == EvalOutcome::accepted) {
        ++accepted;
        REQUIRE(res.episode.has_value());
        CHECK(oracle::check_eval_episode(c, *res.episode, 4) == "");
        CHECK(res.episode->support.size() == 4);
        CHECK(res.episode->query.size() == 2);
      } else {
        CHECK(res.outcome == EvalOutcome::degenerate_query);
      }
    }
    CAPTURE(mask);
    if (acceptable == 0) CHECK(accepted == 0);
    if (acceptable == supports) CHECK(accepted == trials);
    CHECK(std::abs(static_cast<double>(accepted) / trials - p) < 0.1);
  }
}

TEST_CASE("evaluation episodes: rejection reasons and exclusions") {
  Rng rng = make_rng(4);
  const Corpus few = single_word_corpus({"a", "b", "a", "b"});
  CHECK(build_eval_episode(few, few.word("w"), 4, rng).outcome == EvalOutcome::too_few_sentences);
  const Corpus many = single_word_corpus({"a", "b", "c", "d", "e", "a", "b"});
  CHECK(build_eval_episode(many, many.word("w"), 4, rng).outcome == EvalOutcome::too_many_senses);
  // Query sentences of a sense missing from the support are dropped.
  const Corpus c = single_word_corpus({"a", "a", "b", "b", "c", "a", "b", "c"});
  for (int i = 0; i < 200; ++i) {
    const auto res = build_eval_episode(c, c.word("w"), 4, rng);
    if (res.outcome == EvalOutcome::accepted) CHECK(oracle::check_eval_episode(c, *res.episode, 4) == "");
  }
}

TEST_CASE("evaluation episodes with repeated target words in a sentence") {
  std::vector<AnnotatedSentence> sents;
  Rng g = make_rng(12);
  for (int i = 0; i < 10; ++i) {
    AnnotatedSentence s;
    s.id = "r" + std::to_string(i);
    s.n_tokens = 4;
    s.targets = {{0, "w", i % 2 ? "a" : "b"}, {2, "w", i % 3 ? "a" : "c"}};
    s.embeddings = oracle::random_matrix(4, 3, g);
    sents.push_back(std::move(s));
  }
  const Corpus c(sents, 3);
  Rng rng = make_rng(13);
  std::size_t accepted = 0;
  for (int i = 0; i < 300; ++i) {
    const auto res = build_eval_episode(c, c.word("w"), 4, rng);
    if (res.outcome != EvalOutcome::accepted) continue;
    ++accepted;
    CHECK(oracle::check_eval_episode(c, *res.episode, 4) == "");
  }
  CHECK(accepted > 0);
}

TEST_CASE("build_dataset is deterministic and every eval episode is valid") {
  const Corpus c = blob_corpus(40, {2, 3, 4, 6}, 5, 3);
  BuildOptions o;
  o.train_episodes = 300;
  const EpisodeDataset a = build_dataset(c, o), b = build_dataset(c, o);
  CHECK(a == b);
  CHECK(a.train.size() == 300);
  std::set<std::size_t> ids;
  for (const auto* part : {&a.train, &a.val, &a.test}) {
    for (const Episode& ep : *part) ids.insert(ep.id);
  }
  CHECK(ids.size() == a.train.size() + a.val.size() + a.test.size());
  for (const Episode& ep : a.train) CHECK(oracle::check_train_episode(c, ep, 8, 4) == "");
  for (const auto* part : {&a.val, &a.test}) {
    for (const Episode& ep : *part) CHECK(oracle::check_eval_episode(c, ep, 8) == "");
  }
  CHECK(a.val.size() + a.test.size() + a.rejected.size() == a.split.meta_val.size() + a.split.meta_test.size());
  std::set<std::string> train_words(a.split.meta_train.begin(), a.split.meta_train.end());
  for (const Episode& ep : a.train) {
    for (const auto& k : ep.classes) CHECK(train_words.contains(k.word));
  }
  o.seed = 43;
  CHECK_FALSE(build_dataset(c, o) == a);
}

TEST_CASE("manifest replays bit-identical episodes") {
  const Corpus c = blob_corpus(20, {2, 4}, 5, 2);
  BuildOptions o;
  o.train_episodes = 50;
  const EpisodeDataset ds = build_dataset(c, o);
  const auto j = manifest_to_json(ds, c);
  const EpisodeDataset back = manifest_from_json(nlohmann::json::parse(j.dump()), c);
  CHECK(back == ds);
  CHECK(manifest_to_json(back, c).dump() == j.dump());

  auto broken = nlohmann::json::parse(j.dump());
  broken["episodes"][0]["support"][0]["label"] = 99;
  CHECK_THROWS(manifest_from_json(broken, c));
}

TEST_CASE("dataset_stats") {
  Episode one;
  one.classes = {{"w", "a"}, {"w", "b"}, {"w", "c"}};
  one.support = {{{0, 0}, 0}, {{1, 0}, 1}, {{2, 0}, 2}};
  one.query = {{{3, 0}, 0}, {{4, 0}, 1}};
  SplitStats s = dataset_stats(std::vector{one});
  CHECK(s.average_senses == 3.0);
  CHECK(s.words == 1);
  CHECK(s.unique_sentences == 5);

  Episode two = one;
  two.id = 1;
  s = dataset_stats(std::vector{one, two});
  CHECK(s.unique_sentences == 5);
  std::size_t total = 0;
  for (const auto& [k, n] : s.support_sense_histogram) total += n;
  CHECK(total == 2);
  CHECK(s.query_sense_histogram.at(2) == 2);
}
