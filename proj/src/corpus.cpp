#include "metawsd/corpus.hpp"

#include <algorithm>
#include <stdexcept>

namespace metawsd {

Corpus::Corpus(std::vector<AnnotatedSentence> sentences, std::size_t embedding_dim)
    : sentences_(std::move(sentences)), dim_(embedding_dim) {
  if (dim_ == 0) throw std::invalid_argument("corpus: embedding_dim must be positive");
  for (std::size_t s = 0; s < sentences_.size(); ++s) {
    const AnnotatedSentence& sent = sentences_[s];
    if (!by_id_.emplace(sent.id, s).second) {
      throw std::invalid_argument("corpus: duplicate sentence id '" + sent.id + "'");
    }
    if (sent.embeddings.rows() != sent.n_tokens || sent.embeddings.cols() != dim_) {
      throw std::invalid_argument("corpus: sentence '" + sent.id + "' has embeddings " +
                                  sent.embeddings.shape_string() + ", expected " +
                                  std::to_string(sent.n_tokens) + "x" + std::to_string(dim_));
    }
    for (const TargetAnnotation& t : sent.targets) {
      if (t.token_index >= sent.n_tokens) {
        throw std::invalid_argument("corpus: sentence '" + sent.id + "' target index " +
                                    std::to_string(t.token_index) + " >= n_tokens " +
                                    std::to_string(sent.n_tokens));
      }
      if (t.word.empty() || t.sense.empty()) {
        throw std::invalid_argument("corpus: sentence '" + sent.id + "' has an empty word or sense");
      }
      WordEntry& entry = words_[t.word];
      entry.word = t.word;
      entry.instances[t.sense].push_back({s, t.token_index});
      if (entry.sentences.empty() || entry.sentences.back() != s) entry.sentences.push_back(s);
    }
  }
  for (auto& [w, entry] : words_) {
    for (const auto& [sense, _] : entry.instances) entry.senses.push_back(sense);
  }
}

std::optional<std::size_t> Corpus::find(const std::string& sentence_id) const {
  auto it = by_id_.find(sentence_id);
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

const WordEntry& Corpus::word(const std::string& w) const {
  auto it = words_.find(w);
  if (it == words_.end()) throw std::out_of_range("corpus: unknown word '" + w + "'");
  return it->second;
}

std::vector<std::string> Corpus::word_ids() const {
  std::vector<std::string> out;
  out.reserve(words_.size());
  for (const auto& [w, _] : words_) out.push_back(w);
  return out;
}

std::span<const double> Corpus::embedding(const Instance& inst) const {
  return sentences_.at(inst.sentence).embeddings.row_span(inst.token_index);
}

const std::string& Corpus::sense_at(const Instance& inst, const std::string& word) const {
  for (const TargetAnnotation& t : sentences_.at(inst.sentence).targets) {
    if (t.token_index == inst.token_index && t.word == word) return t.sense;
  }
  throw std::out_of_range("corpus: token " + std::to_string(inst.token_index) + " of '" +
                          sentences_.at(inst.sentence).id + "' is not a target of '" + word + "'");
}

}  // namespace metawsd
