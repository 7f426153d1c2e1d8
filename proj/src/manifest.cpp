#include "metawsd/manifest.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "metawsd/corpus_io.hpp"

namespace metawsd {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

ordered_json items_json(const std::vector<EpisodeItem>& items, const Corpus& corpus) {
  ordered_json arr = ordered_json::array();
  for (const EpisodeItem& it : items) {
    ordered_json j;
    j["sentence_id"] = corpus.sentence(it.instance.sentence).id;
    j["index"] = it.instance.token_index;
    j["label"] = it.label;
    arr.push_back(std::move(j));
  }
  return arr;
}

std::vector<EpisodeItem> items_from_json(const json& arr, const Corpus& corpus, const Episode& ep) {
  std::vector<EpisodeItem> out;
  for (const json& j : arr) {
    const std::string sid = j.at("sentence_id").get<std::string>();
    auto s = corpus.find(sid);
    if (!s) throw FormatError("manifest episode " + std::to_string(ep.id) + ": unknown sentence '" + sid + "'");
    EpisodeItem it{{*s, j.at("index").get<std::size_t>()}, j.at("label").get<std::size_t>()};
    if (it.label >= ep.classes.size()) {
      throw FormatError("manifest episode " + std::to_string(ep.id) + ": label out of range");
    }
    const SenseKey& key = ep.classes[it.label];
    if (corpus.sense_at(it.instance, key.word) != key.sense) {
      throw FormatError("manifest episode " + std::to_string(ep.id) + ": sentence '" + sid +
                        "' token " + std::to_string(it.instance.token_index) + " is not sense '" +
                        key.sense + "' of '" + key.word + "'");
    }
    out.push_back(it);
  }
  return out;
}

ordered_json words_json(const std::vector<std::string>& words) { return ordered_json(words); }

}  // namespace

ordered_json manifest_to_json(const EpisodeDataset& ds, const Corpus& corpus) {
  ordered_json j;
  j["format"] = "metawsd-episodes";
  j["version"] = 1;
  j["support_size"] = ds.options.support_size;
  j["words_per_episode"] = ds.options.words_per_episode;
  j["train_episodes"] = ds.options.train_episodes;
  j["split_ratios"] = ds.options.ratios;
  j["seed"] = ds.options.seed;
  j["splits"]["meta_train"] = words_json(ds.split.meta_train);
  j["splits"]["meta_val"] = words_json(ds.split.meta_val);
  j["splits"]["meta_test"] = words_json(ds.split.meta_test);
  j["rejected"] = ordered_json::object();
  for (const auto& [w, why] : ds.rejected) j["rejected"][w] = outcome_name(why);
  j["episodes"] = ordered_json::array();
  for (const auto* group : {&ds.train, &ds.val, &ds.test}) {
    for (const Episode& ep : *group) {
      ordered_json e;
      e["id"] = ep.id;
      e["split"] = split_name(ep.split);
      e["word"] = ep.word;
      e["label_map"] = ordered_json::array();
      for (std::size_t l = 0; l < ep.classes.size(); ++l) {
        e["label_map"].push_back({{"word", ep.classes[l].word}, {"sense", ep.classes[l].sense}, {"label", l}});
      }
      e["support"] = items_json(ep.support, corpus);
      e["query"] = items_json(ep.query, corpus);
      j["episodes"].push_back(std::move(e));
    }
  }
  return j;
}

EpisodeDataset manifest_from_json(const json& j, const Corpus& corpus) {
  if (j.value("format", "") != "metawsd-episodes") throw FormatError("not an episode manifest");
  if (j.value("version", 0) != 1) throw FormatError("unsupported manifest version");
  EpisodeDataset ds;
  ds.options.support_size = j.at("support_size").get<std::size_t>();
  ds.options.words_per_episode = j.at("words_per_episode").get<std::size_t>();
  ds.options.train_episodes = j.at("train_episodes").get<std::size_t>();
  ds.options.ratios = j.at("split_ratios").get<std::array<double, 3>>();
  ds.options.seed = j.at("seed").get<std::uint64_t>();
  ds.split.meta_train = j.at("splits").at("meta_train").get<std::vector<std::string>>();
  ds.split.meta_val = j.at("splits").at("meta_val").get<std::vector<std::string>>();
  ds.split.meta_test = j.at("splits").at("meta_test").get<std::vector<std::string>>();
  for (const auto& [w, why] : j.at("rejected").items()) {
    const std::string s = why.get<std::string>();
    for (EvalOutcome o : {EvalOutcome::too_few_sentences, EvalOutcome::too_many_senses,
                          EvalOutcome::degenerate_query}) {
      if (outcome_name(o) == s) ds.rejected[w] = o;
    }
  }
  for (const json& e : j.at("episodes")) {
    Episode ep;
    ep.id = e.at("id").get<std::size_t>();
    ep.split = parse_split(e.at("split").get<std::string>());
    ep.word = e.at("word").get<std::string>();
    const json& lm = e.at("label_map");
    ep.classes.resize(lm.size());
    std::set<std::size_t> seen;
    for (const json& m : lm) {
      const auto label = m.at("label").get<std::size_t>();
      if (label >= lm.size() || !seen.insert(label).second) {
        throw FormatError("manifest episode " + std::to_string(ep.id) + ": label map is not a bijection");
      }
      ep.classes[label] = {m.at("word").get<std::string>(), m.at("sense").get<std::string>()};
    }
    ep.support = items_from_json(e.at("support"), corpus, ep);
    ep.query = items_from_json(e.at("query"), corpus, ep);
    switch (ep.split) {
      case Split::meta_train: ds.train.push_back(std::move(ep)); break;
      case Split::meta_val: ds.val.push_back(std::move(ep)); break;
      case Split::meta_test: ds.test.push_back(std::move(ep)); break;
    }
  }
  return ds;
}

void write_manifest(const std::filesystem::path& path, const EpisodeDataset& ds, const Corpus& corpus) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write manifest " + path.string());
  out << manifest_to_json(ds, corpus).dump() << '\n';
}

EpisodeDataset read_manifest(const std::filesystem::path& path, const Corpus& corpus) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open manifest " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  try {
    return manifest_from_json(j, corpus);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

ordered_json stats_to_json(const SplitStats& st) {
  ordered_json j;
  j["words"] = st.words;
  j["episodes"] = st.episodes;
  j["unique_sentences"] = st.unique_sentences;
  j["average_senses"] = st.average_senses;
  auto hist = [](const std::map<std::size_t, std::size_t>& h) {
    ordered_json o = ordered_json::object();
    for (const auto& [k, v] : h) o[std::to_string(k)] = v;
    return o;
  };
  j["support_sense_histogram"] = hist(st.support_sense_histogram);
  j["query_sense_histogram"] = hist(st.query_sense_histogram);
  return j;
}

ordered_json dataset_stats_json(const EpisodeDataset& ds) {
  ordered_json j;
  j["meta_train"] = stats_to_json(dataset_stats(ds.train));
  j["meta_val"] = stats_to_json(dataset_stats(ds.val));
  j["meta_test"] = stats_to_json(dataset_stats(ds.test));
  j["rejected_words"] = ds.rejected.size();
  return j;
}

std::string format_stats_table(const EpisodeDataset& ds) {
  std::ostringstream os;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-12s %8s %10s %18s %15s\n", "split", "words", "episodes",
                "unique_sentences", "avg_senses");
  os << buf;
  const std::pair<const char*, const std::vector<Episode>*> rows[] = {
      {"meta_train", &ds.train}, {"meta_val", &ds.val}, {"meta_test", &ds.test}};
  for (const auto& [name, eps] : rows) {
    const SplitStats st = dataset_stats(*eps);
    std::snprintf(buf, sizeof buf, "%-12s %8zu %10zu %18zu %15.3f\n", name, st.words, st.episodes,
                  st.unique_sentences, st.average_senses);
    os << buf;
  }
  return os.str();
}

}  // namespace metawsd
