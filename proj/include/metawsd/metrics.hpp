#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace metawsd {

/// Unweighted mean over `classes` of per-class F1. Empty precision or recall
/// denominators count as 0, so a listed class that never occurs in gold or
/// predictions scores 0.
double macro_f1(std::span<const std::size_t> gold, std::span<const std::size_t> pred,
                std::span<const std::size_t> classes);

/// Sorted union of the labels present in gold and pred.
std::vector<std::size_t> present_labels(std::span<const std::size_t> gold,
                                        std::span<const std::size_t> pred);

/// macro_f1 over present_labels(gold, pred); the per-episode score.
double episode_macro_f1(std::span<const std::size_t> gold, std::span<const std::size_t> pred);

}  // namespace metawsd
