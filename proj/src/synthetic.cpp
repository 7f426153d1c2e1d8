#include "metawsd/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "metawsd/corpus_io.hpp"
#include "metawsd/random.hpp"

namespace metawsd {

namespace {

std::string numbered(const char* prefix, std::size_t i, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, width, i);
  return buf;
}

// `count` unit vectors in R^k; orthonormal when count <= k.
std::vector<std::vector<double>> sense_directions(std::size_t count, std::size_t k, Rng& rng) {
  std::vector<std::vector<double>> dirs;
  for (std::size_t s = 0; s < count; ++s) {
    std::vector<double> v(k);
    double norm = 0.0;
    for (int attempt = 0; attempt < 16 && norm < 1e-6; ++attempt) {
      for (double& x : v) x = standard_normal(rng);
      if (s < k) {
        for (const auto& d : dirs) {
          double dot = 0.0;
          for (std::size_t i = 0; i < k; ++i) dot += v[i] * d[i];
          for (std::size_t i = 0; i < k; ++i) v[i] -= dot * d[i];
        }
      }
      norm = 0.0;
      for (double x : v) norm += x * x;
      norm = std::sqrt(norm);
    }
    for (double& x : v) x /= norm;
    dirs.push_back(std::move(v));
  }
  return dirs;
}

}  // namespace

Corpus generate_synthetic_corpus(const SyntheticOptions& o) {
  if (o.n_words == 0 || o.sense_counts.empty() || o.sentences_per_sense == 0 ||
      o.embedding_dim == 0 || o.tokens_per_sentence == 0) {
    throw std::invalid_argument("synthetic corpus: all counts must be positive");
  }
  for (std::size_t c : o.sense_counts) {
    if (c == 0) throw std::invalid_argument("synthetic corpus: sense counts must be positive");
  }
  if (!(o.cluster_separation > 0.0)) throw std::invalid_argument("synthetic corpus: separation must be > 0");
  if (o.noise_sigma < 0.0) throw std::invalid_argument("synthetic corpus: noise_sigma must be >= 0");

  const std::size_t dim = o.embedding_dim;
  const std::size_t k = std::min(dim, o.informative_dims == 0 ? std::max<std::size_t>(1, dim / 4)
                                                              : o.informative_dims);
  Rng rng = make_rng(o.seed, 0);
  std::vector<AnnotatedSentence> sentences;

  for (std::size_t w = 0; w < o.n_words; ++w) {
    const std::string word = numbered("w", w, 4);
    const std::size_t n_senses = o.sense_counts[uniform_index(rng, o.sense_counts.size())];
    std::vector<double> centre(dim);
    for (double& x : centre) x = o.word_spread * standard_normal(rng);
    const auto dirs = sense_directions(n_senses, k, rng);

    for (std::size_t s = 0; s < n_senses; ++s) {
      const std::string sense = numbered("s", s, 2);
      std::vector<double> mean = centre;
      for (std::size_t i = 0; i < k; ++i) mean[i] += o.cluster_separation * dirs[s][i];

      for (std::size_t n = 0; n < o.sentences_per_sense; ++n) {
        AnnotatedSentence sent;
        sent.id = word + "." + sense + "." + numbered("", n, 3);
        sent.n_tokens = o.tokens_per_sentence;
        const std::size_t target = uniform_index(rng, o.tokens_per_sentence);
        sent.targets.push_back({target, word, sense});
        Matrix emb(o.tokens_per_sentence, dim);
        for (std::size_t t = 0; t < o.tokens_per_sentence; ++t) {
          for (std::size_t i = 0; i < dim; ++i) {
            const double noise = o.noise_sigma * standard_normal(rng);
            emb(t, i) = (t == target ? mean[i] : 0.0) + noise;
          }
        }
        sent.embeddings = round_to_float32(std::move(emb));
        sentences.push_back(std::move(sent));
      }
    }
  }
  return Corpus(std::move(sentences), dim);
}

}  // namespace metawsd
