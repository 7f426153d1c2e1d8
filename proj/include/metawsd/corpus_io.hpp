#pragma once

// Corpus annotation JSONL and the "MWE1" binary embedding container.
//
// JSONL, one sentence per line:
//   {"sentence_id": str, "n_tokens": int, "targets": [{"index": int, "word": str, "sense": str}]}
//
// MWE1 (all integers little-endian):
//   "MWE1" | u32 embedding_dim | records...
//   record: u16 id_len | id bytes (UTF-8) | u32 n_tokens | n_tokens*dim float32, row-major

#include <filesystem>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "metawsd/corpus.hpp"

namespace metawsd {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SentenceAnnotation {
  std::string id;
  std::size_t n_tokens = 0;
  std::vector<TargetAnnotation> targets;
};

struct EmbeddingRecord {
  std::string id;
  Matrix rows;  // n_tokens x dim, values exactly representable as float32
};

struct EmbeddingFile {
  std::size_t dim = 0;
  std::vector<EmbeddingRecord> records;
};

inline constexpr char kEmbeddingMagic[4] = {'M', 'W', 'E', '1'};

std::vector<SentenceAnnotation> read_annotations(std::istream& in);
void write_annotations(std::ostream& out, const std::vector<SentenceAnnotation>& sentences);

EmbeddingFile read_embeddings(std::istream& in);
void write_embeddings(std::ostream& out, const EmbeddingFile& file);

/// Joins annotations with embeddings; ids must biject.
Corpus join_corpus(std::vector<SentenceAnnotation> annotations, EmbeddingFile embeddings);

Corpus load_corpus(const std::filesystem::path& jsonl, const std::filesystem::path& embeddings);
void save_corpus(const Corpus& corpus, const std::filesystem::path& jsonl,
                 const std::filesystem::path& embeddings);

/// Rounds every entry to the nearest float32 (what the container stores).
Matrix round_to_float32(Matrix m);

}  // namespace metawsd
