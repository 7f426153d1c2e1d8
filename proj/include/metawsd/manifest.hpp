#pragma once

// Episode manifest: every episode's sentence ids, target indices, label map
// and split, enough to replay an experiment exactly given the corpus.

#include <filesystem>

#include <json.hpp>

#include "metawsd/corpus.hpp"
#include "metawsd/episodes.hpp"

namespace metawsd {

nlohmann::ordered_json manifest_to_json(const EpisodeDataset& ds, const Corpus& corpus);
EpisodeDataset manifest_from_json(const nlohmann::json& j, const Corpus& corpus);

void write_manifest(const std::filesystem::path& path, const EpisodeDataset& ds, const Corpus& corpus);
EpisodeDataset read_manifest(const std::filesystem::path& path, const Corpus& corpus);

nlohmann::ordered_json stats_to_json(const SplitStats& stats);
nlohmann::ordered_json dataset_stats_json(const EpisodeDataset& ds);
/// Plain-text table, one row per split.
std::string format_stats_table(const EpisodeDataset& ds);

}  // namespace metawsd
