#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "metawsd/matrix.hpp"

namespace metawsd {

struct TargetAnnotation {
  std::size_t token_index = 0;
  std::string word;
  std::string sense;

  bool operator==(const TargetAnnotation&) const = default;
};

/// One sentence with its sense-annotated targets and per-token embeddings
/// (n_tokens x embedding_dim).
struct AnnotatedSentence {
  std::string id;
  std::size_t n_tokens = 0;
  std::vector<TargetAnnotation> targets;
  Matrix embeddings;
};

/// A sense of a specific word. Sense ids need only be unique per word.
struct SenseKey {
  std::string word;
  std::string sense;

  auto operator<=>(const SenseKey&) const = default;
  bool operator==(const SenseKey&) const = default;
};

/// One annotated occurrence: sentence position in the corpus plus token.
struct Instance {
  std::size_t sentence = 0;
  std::size_t token_index = 0;

  auto operator<=>(const Instance&) const = default;
  bool operator==(const Instance&) const = default;
};

struct WordEntry {
  std::string word;
  std::vector<std::string> senses;                              // sorted
  std::map<std::string, std::vector<Instance>> instances;       // by sense, corpus order
  std::vector<std::size_t> sentences;                           // sorted, unique

  std::size_t sense_count() const { return senses.size(); }
};

/// Immutable after construction. Validates the data-model invariants and
/// builds the per-word sense index.
class Corpus {
 public:
  Corpus() = default;
  Corpus(std::vector<AnnotatedSentence> sentences, std::size_t embedding_dim);

  std::size_t embedding_dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return sentences_.size(); }
  const std::vector<AnnotatedSentence>& sentences() const noexcept { return sentences_; }
  const AnnotatedSentence& sentence(std::size_t i) const { return sentences_.at(i); }
  std::optional<std::size_t> find(const std::string& sentence_id) const;

  const std::map<std::string, WordEntry>& words() const noexcept { return words_; }
  const WordEntry& word(const std::string& w) const;
  std::vector<std::string> word_ids() const;

  std::span<const double> embedding(const Instance& inst) const;
  /// Sense of the target at `inst`; throws if the token is not a target of `word`.
  const std::string& sense_at(const Instance& inst, const std::string& word) const;

 private:
  std::vector<AnnotatedSentence> sentences_;
  std::size_t dim_ = 0;
  std::map<std::string, WordEntry> words_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

}  // namespace metawsd
