#include "metawsd/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

namespace metawsd {

using nlohmann::ordered_json;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::size_t histogram_bin(double score) {
  if (!(score >= 0.0)) return 0;
  const auto bin = static_cast<std::size_t>(std::floor(score / 0.2 + 1e-12));
  return std::min(bin, kHistogramBins - 1);
}

namespace {

std::pair<double, double> mean_and_population_std(const std::map<std::uint64_t, double>& values) {
  if (values.empty()) return {0.0, 0.0};
  double sum = 0.0;
  for (const auto& [_, v] : values) sum += v;
  const double mean = sum / static_cast<double>(values.size());
  double sq = 0.0;
  for (const auto& [_, v] : values) sq += (v - mean) * (v - mean);
  return {mean, std::sqrt(sq / static_cast<double>(values.size()))};
}

}  // namespace

EvalReport aggregate(const std::string& method, std::span<const ScoreRecord> records) {
  EvalReport r;
  r.method = method;
  r.records.assign(records.begin(), records.end());
  std::sort(r.records.begin(), r.records.end(), [](const ScoreRecord& a, const ScoreRecord& b) {
    return std::tie(a.seed, a.word) < std::tie(b.seed, b.word);
  });

  std::map<std::uint64_t, std::pair<double, std::size_t>> per_seed;
  std::map<std::size_t, std::pair<double, std::size_t>> per_group;
  std::map<std::size_t, std::set<std::string>> group_words;
  for (const ScoreRecord& s : r.records) {
    auto& ps = per_seed[s.seed];
    ps.first += s.macro_f1;
    ++ps.second;
    auto& pg = per_group[s.n_senses];
    pg.first += s.macro_f1;
    ++pg.second;
    group_words[s.n_senses].insert(s.word);
    ++r.histogram[histogram_bin(s.macro_f1)];
  }
  for (const auto& [seed, acc] : per_seed) r.seed_means[seed] = acc.first / static_cast<double>(acc.second);
  for (const auto& [n, acc] : per_group) {
    r.by_sense_count[n] = {group_words[n].size(), acc.first / static_cast<double>(acc.second)};
  }
  std::tie(r.mean, r.stddev) = mean_and_population_std(r.seed_means);
  return r;
}

ordered_json EvalReport::to_json() const {
  ordered_json j;
  j["method"] = method;
  j["mean_macro_f1"] = mean;
  j["std_macro_f1"] = stddev;
  j["std_convention"] = "population, over per-seed means";
  j["seed_means"] = ordered_json::array();
  for (const auto& [seed, m] : seed_means) j["seed_means"].push_back({{"seed", seed}, {"mean_macro_f1", m}});
  j["by_query_sense_count"] = ordered_json::array();
  for (const auto& [n, g] : by_sense_count) {
    j["by_query_sense_count"].push_back({{"n_senses", n}, {"words", g.words}, {"mean_macro_f1", g.mean}});
  }
  j["histogram"] = ordered_json::array();
  for (std::size_t b = 0; b < kHistogramBins; ++b) {
    j["histogram"].push_back({{"lo", 0.2 * static_cast<double>(b)},
                              {"hi", 0.2 * static_cast<double>(b + 1)},
                              {"count", histogram[b]}});
  }
  j["scores"] = ordered_json::array();
  for (const ScoreRecord& s : records) {
    j["scores"].push_back({{"word", s.word}, {"n_senses", s.n_senses}, {"seed", s.seed}, {"macro_f1", s.macro_f1}});
  }
  return j;
}

std::string EvalReport::to_csv() const {
  std::ostringstream os;
  os << "word,n_senses,macro_f1,seed\n";
  for (const ScoreRecord& s : records) {
    os << s.word << ',' << s.n_senses << ',' << format_double(s.macro_f1) << ',' << s.seed << '\n';
  }
  return os.str();
}

ordered_json SweepTable::to_json() const {
  ordered_json j;
  j["method"] = method;
  j["rows"] = ordered_json::array();
  for (const SweepRow& r : rows) {
    ordered_json row{{"episodes", r.episodes}, {"mean_macro_f1", r.mean}, {"std_macro_f1", r.stddev}};
    row["seed_means"] = ordered_json::array();
    for (const auto& [seed, m] : r.seed_means) row["seed_means"].push_back({{"seed", seed}, {"mean_macro_f1", m}});
    j["rows"].push_back(std::move(row));
  }
  return j;
}

std::string SweepTable::to_csv() const {
  std::ostringstream os;
  os << "episodes,mean_macro_f1,std_macro_f1\n";
  for (const SweepRow& r : rows) {
    os << r.episodes << ',' << format_double(r.mean) << ',' << format_double(r.stddev) << '\n';
  }
  return os.str();
}

}  // namespace metawsd
