#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace metawsd {

/// One word's score under one seed. `n_senses` is the number of distinct
/// senses in the word's query set.
struct ScoreRecord {
  std::string word;
  std::size_t n_senses = 0;
  std::uint64_t seed = 0;
  double macro_f1 = 0.0;
};

struct SenseGroup {
  std::size_t words = 0;  // distinct words in the group
  double mean = 0.0;      // over all records in the group
};

inline constexpr std::size_t kHistogramBins = 5;

/// Aggregated results for one method. Seed means are over words; `mean` is
/// the mean of seed means and `stddev` their population standard deviation
/// (0 for a single seed).
struct EvalReport {
  std::string method;
  std::vector<ScoreRecord> records;  // sorted by (seed, word)
  std::map<std::uint64_t, double> seed_means;
  double mean = 0.0;
  double stddev = 0.0;
  std::map<std::size_t, SenseGroup> by_sense_count;
  std::array<std::size_t, kHistogramBins> histogram{};  // [0,.2) ... [.8,1.0]

  nlohmann::ordered_json to_json() const;
  /// Columns: word,n_senses,macro_f1,seed
  std::string to_csv() const;
};

EvalReport aggregate(const std::string& method, std::span<const ScoreRecord> records);

std::size_t histogram_bin(double score);

struct SweepRow {
  std::size_t episodes = 0;
  double mean = 0.0;
  double stddev = 0.0;
  std::map<std::uint64_t, double> seed_means;
};

struct SweepTable {
  std::string method;
  std::vector<SweepRow> rows;

  nlohmann::ordered_json to_json() const;
  std::string to_csv() const;
};

/// "%.17g", so reports round-trip and compare byte for byte.
std::string format_double(double v);

}  // namespace metawsd
