#include "metawsd/corpus_io.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_map>

#include <json.hpp>

namespace metawsd {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::size_t require_index(const json& j, const char* key, std::size_t line) {
  if (!j.contains(key) || !j.at(key).is_number_integer() || j.at(key).get<long long>() < 0) {
    throw FormatError("line " + std::to_string(line) + ": '" + key +
                      "' must be a non-negative integer");
  }
  return j.at(key).get<std::size_t>();
}

std::string require_string(const json& j, const char* key, std::size_t line) {
  if (!j.contains(key) || !j.at(key).is_string()) {
    throw FormatError("line " + std::to_string(line) + ": '" + key + "' must be a string");
  }
  return j.at(key).get<std::string>();
}

template <class T>
void put_le(std::ostream& out, T value) {
  std::array<char, sizeof(T)> bytes;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bytes[i] = static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xFF);
  }
  out.write(bytes.data(), bytes.size());
}

class ByteReader {
 public:
  explicit ByteReader(std::istream& in) : in_(in) {}

  std::size_t offset() const { return offset_; }
  bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }

  void read(char* dst, std::size_t n, const char* what) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw FormatError("offset " + std::to_string(offset_) + ": truncated " + what);
    }
    offset_ += n;
  }

  template <class T>
  T le(const char* what) {
    std::array<unsigned char, sizeof(T)> bytes;
    read(reinterpret_cast<char*>(bytes.data()), sizeof(T), what);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    return static_cast<T>(v);
  }

 private:
  std::istream& in_;
  std::size_t offset_ = 0;
};

}  // namespace

std::vector<SentenceAnnotation> read_annotations(std::istream& in) {
  std::vector<SentenceAnnotation> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw FormatError("line " + std::to_string(line_no) + ": invalid JSON (" + e.what() + ")");
    }
    if (!j.is_object()) throw FormatError("line " + std::to_string(line_no) + ": expected an object");
    SentenceAnnotation s;
    s.id = require_string(j, "sentence_id", line_no);
    s.n_tokens = require_index(j, "n_tokens", line_no);
    if (!j.contains("targets") || !j.at("targets").is_array()) {
      throw FormatError("line " + std::to_string(line_no) + ": 'targets' must be an array");
    }
    for (const json& t : j.at("targets")) {
      if (!t.is_object()) throw FormatError("line " + std::to_string(line_no) + ": target must be an object");
      TargetAnnotation a;
      a.token_index = require_index(t, "index", line_no);
      a.word = require_string(t, "word", line_no);
      a.sense = require_string(t, "sense", line_no);
      if (a.token_index >= s.n_tokens) {
        throw FormatError("line " + std::to_string(line_no) + ": target index " +
                          std::to_string(a.token_index) + " >= n_tokens " + std::to_string(s.n_tokens));
      }
      s.targets.push_back(std::move(a));
    }
    out.push_back(std::move(s));
  }
  return out;
}

void write_annotations(std::ostream& out, const std::vector<SentenceAnnotation>& sentences) {
  for (const SentenceAnnotation& s : sentences) {
    ordered_json j;
    j["sentence_id"] = s.id;
    j["n_tokens"] = s.n_tokens;
    j["targets"] = ordered_json::array();
    for (const TargetAnnotation& t : s.targets) {
      ordered_json tj;
      tj["index"] = t.token_index;
      tj["word"] = t.word;
      tj["sense"] = t.sense;
      j["targets"].push_back(std::move(tj));
    }
    out << j.dump() << '\n';
  }
}

EmbeddingFile read_embeddings(std::istream& in) {
  ByteReader r(in);
  char magic[4];
  r.read(magic, 4, "magic bytes");
  if (std::memcmp(magic, kEmbeddingMagic, 4) != 0) {
    throw FormatError("offset 0: bad magic bytes, expected \"MWE1\"");
  }
  EmbeddingFile file;
  file.dim = r.le<std::uint32_t>("embedding_dim");
  if (file.dim == 0) throw FormatError("offset 4: embedding_dim must be positive");
  while (!r.at_end()) {
    const std::size_t record_offset = r.offset();
    EmbeddingRecord rec;
    const auto id_len = r.le<std::uint16_t>("id length");
    rec.id.resize(id_len);
    r.read(rec.id.data(), id_len, "sentence id");
    const auto n_tokens = r.le<std::uint32_t>("n_tokens");
    rec.rows = Matrix(n_tokens, file.dim);
    for (double& v : rec.rows.data()) {
      const auto bits = r.le<std::uint32_t>("embedding payload");
      const float f = std::bit_cast<float>(bits);
      if (!std::isfinite(f)) {
        throw FormatError("offset " + std::to_string(r.offset() - 4) + ": non-finite embedding value in '" +
                          rec.id + "' (record at offset " + std::to_string(record_offset) + ")");
      }
      v = static_cast<double>(f);
    }
    file.records.push_back(std::move(rec));
  }
  return file;
}

void write_embeddings(std::ostream& out, const EmbeddingFile& file) {
  out.write(kEmbeddingMagic, 4);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(file.dim));
  for (const EmbeddingRecord& rec : file.records) {
    if (rec.id.size() > 0xFFFF) throw FormatError("sentence id too long: " + rec.id.substr(0, 32));
    if (rec.rows.cols() != file.dim) {
      throw FormatError("record '" + rec.id + "' has " + std::to_string(rec.rows.cols()) +
                        " columns, expected " + std::to_string(file.dim));
    }
    put_le<std::uint16_t>(out, static_cast<std::uint16_t>(rec.id.size()));
    out.write(rec.id.data(), static_cast<std::streamsize>(rec.id.size()));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(rec.rows.rows()));
    for (double v : rec.rows.data()) {
      put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    }
  }
}

Corpus join_corpus(std::vector<SentenceAnnotation> annotations, EmbeddingFile embeddings) {
  std::unordered_map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < embeddings.records.size(); ++i) {
    if (!by_id.emplace(embeddings.records[i].id, i).second) {
      throw FormatError("embeddings: duplicate sentence id '" + embeddings.records[i].id + "'");
    }
  }
  if (by_id.size() != annotations.size()) {
    throw FormatError("embeddings hold " + std::to_string(by_id.size()) + " sentences, corpus has " +
                      std::to_string(annotations.size()));
  }
  std::vector<AnnotatedSentence> sentences;
  sentences.reserve(annotations.size());
  for (std::size_t line = 0; line < annotations.size(); ++line) {
    SentenceAnnotation& a = annotations[line];
    auto it = by_id.find(a.id);
    if (it == by_id.end()) {
      throw FormatError("line " + std::to_string(line + 1) + ": sentence '" + a.id +
                        "' missing from embeddings");
    }
    EmbeddingRecord& rec = embeddings.records[it->second];
    if (rec.rows.rows() != a.n_tokens) {
      throw FormatError("line " + std::to_string(line + 1) + ": sentence '" + a.id + "' has " +
                        std::to_string(a.n_tokens) + " tokens but " + std::to_string(rec.rows.rows()) +
                        " embedding rows");
    }
    sentences.push_back({std::move(a.id), a.n_tokens, std::move(a.targets), std::move(rec.rows)});
  }
  return Corpus(std::move(sentences), embeddings.dim);
}

Corpus load_corpus(const std::filesystem::path& jsonl, const std::filesystem::path& embeddings) {
  std::ifstream ann(jsonl);
  if (!ann) throw FormatError("cannot open corpus file " + jsonl.string());
  std::ifstream emb(embeddings, std::ios::binary);
  if (!emb) throw FormatError("cannot open embeddings file " + embeddings.string());
  try {
    auto annotations = read_annotations(ann);
    auto file = read_embeddings(emb);
    return join_corpus(std::move(annotations), std::move(file));
  } catch (const FormatError& e) {
    throw FormatError(jsonl.filename().string() + "/" + embeddings.filename().string() + ": " + e.what());
  }
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& jsonl,
                 const std::filesystem::path& embeddings) {
  std::vector<SentenceAnnotation> annotations;
  EmbeddingFile file;
  file.dim = corpus.embedding_dim();
  for (const AnnotatedSentence& s : corpus.sentences()) {
    annotations.push_back({s.id, s.n_tokens, s.targets});
    file.records.push_back({s.id, s.embeddings});
  }
  std::ofstream ann(jsonl);
  if (!ann) throw FormatError("cannot write " + jsonl.string());
  write_annotations(ann, annotations);
  std::ofstream emb(embeddings, std::ios::binary);
  if (!emb) throw FormatError("cannot write " + embeddings.string());
  write_embeddings(emb, file);
}

Matrix round_to_float32(Matrix m) {
  for (double& v : m.data()) v = static_cast<double>(static_cast<float>(v));
  return m;
}

}  // namespace metawsd
