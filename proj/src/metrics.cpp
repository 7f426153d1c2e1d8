#include "metawsd/metrics.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>
#include <string>

namespace metawsd {

double macro_f1(std::span<const std::size_t> gold, std::span<const std::size_t> pred,
                std::span<const std::size_t> classes) {
  if (gold.size() != pred.size()) {
    throw std::invalid_argument("macro_f1: " + std::to_string(gold.size()) + " gold vs " +
                                std::to_string(pred.size()) + " predicted labels");
  }
  if (classes.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t c : classes) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
      const bool g = gold[i] == c;
      const bool p = pred[i] == c;
      tp += g && p;
      fp += !g && p;
      fn += g && !p;
    }
    const double precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
    const double recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
    total += precision + recall == 0.0 ? 0.0 : 2.0 * precision * recall / (precision + recall);
  }
  return total / static_cast<double>(classes.size());
}

std::vector<std::size_t> present_labels(std::span<const std::size_t> gold,
                                        std::span<const std::size_t> pred) {
  std::set<std::size_t> s(gold.begin(), gold.end());
  s.insert(pred.begin(), pred.end());
  return {s.begin(), s.end()};
}

double episode_macro_f1(std::span<const std::size_t> gold, std::span<const std::size_t> pred) {
  const auto classes = present_labels(gold, pred);
  return macro_f1(gold, pred, classes);
}

}  // namespace metawsd
