#pragma once

#include <cstdint>
#include <vector>

#include "metawsd/corpus.hpp"

namespace metawsd {

/// Knobs of the Gaussian-blob stand-in corpus.
///
/// Every (word, sense) is a blob: target embedding = word centre +
/// separation * sense direction + N(0, noise_sigma^2) in every coordinate.
/// Sense directions live in the first `informative_dims` coordinates (0 means
/// embedding_dim / 4, at least 1) and are orthonormal whenever the word has
/// no more senses than informative dimensions. Non-target tokens are pure noise.
struct SyntheticOptions {
  std::size_t n_words = 60;
  std::vector<std::size_t> sense_counts{4};  // each word draws one uniformly
  std::size_t sentences_per_sense = 8;
  std::size_t embedding_dim = 16;
  std::size_t informative_dims = 0;
  std::size_t tokens_per_sentence = 6;
  double cluster_separation = 3.0;
  double noise_sigma = 1.0;
  double word_spread = 1.0;
  std::uint64_t seed = 7;
};

Corpus generate_synthetic_corpus(const SyntheticOptions& options);

}  // namespace metawsd
