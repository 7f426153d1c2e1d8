// Drives the metawsd executable as a subprocess.
#include <doctest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct Result {
  int status = -1;
  std::string output;  // stdout + stderr
};

Result run(const std::string& args) {
  const std::string cmd = std::string("\"") + METAWSD_CLI + "\" " + args + " 2>&1";
  Result r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), buf.size(), p) != nullptr) r.output += buf.data();
  const int raw = pclose(p);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

struct Workspace {
  fs::path dir;
  std::string data;  // --corpus/--embeddings flags

  explicit Workspace(const std::string& name) : dir(fs::path(METAWSD_CLI_WORK) / name) {
    fs::remove_all(dir);
    fs::create_directories(dir);
    data = " --corpus " + (dir / "corpus.jsonl").string() + " --embeddings " + (dir / "emb.mwe").string();
    const Result g = run("generate --n_words 30" + data);
    REQUIRE_MESSAGE(g.status == 0, g.output);
  }
  std::string path(const std::string& f) const { return (dir / f).string(); }
  void build(const std::string& manifest, const std::string& extra = "") const {
    const Result b = run("build-data" + data + " --manifest " + path(manifest) + extra);
    REQUIRE_MESSAGE(b.status == 0, b.output);
  }
  std::string common(const std::string& manifest) const { return data + " --manifest " + path(manifest); }
};

}  // namespace

TEST_CASE("build-data defaults to 10000 meta-training episodes and replays identically") {
  Workspace w("build");
  w.build("m1.json", " --stats-out " + w.path("stats.json"));
  w.build("m2.json");
  const auto stats = nlohmann::json::parse(slurp(w.path("stats.json")));
  CHECK(stats["meta_train"]["episodes"] == 10000);
  CHECK(slurp(w.path("m1.json")) == slurp(w.path("m2.json")));
}

TEST_CASE("corrupt embedding magic names the expected format") {
  Workspace w("magic");
  std::string bytes = slurp(w.path("emb.mwe"));
  bytes[0] = 'Z';
  std::ofstream(w.path("emb.mwe"), std::ios::binary) << bytes;
  const Result r = run("build-data" + w.data + " --manifest " + w.path("m.json"));
  CHECK(r.status != 0);
  CHECK(r.output.find("MWE1") != std::string::npos);
  CHECK_FALSE(fs::exists(w.path("m.json")));
}

TEST_CASE("eval with majority needs no checkpoint and reports five seed means") {
  Workspace w("majority");
  w.build("m.json", " --train_episodes 32");
  const Result r = run("eval --method majority --out_dir " + w.path("out") + w.common("m.json"));
  REQUIRE_MESSAGE(r.status == 0, r.output);
  const auto report = nlohmann::json::parse(slurp(w.path("out/report.json")));
  CHECK(report["seed_means"].size() == 5);
  CHECK(fs::exists(w.path("out/scores.csv")));
  const auto resolved = nlohmann::json::parse(slurp(w.path("out/config.resolved.json")));
  CHECK(resolved["method"] == "majority");
}

TEST_CASE("conflicting or invalid settings are rejected before any work") {
  Workspace w("reject");
  w.build("m.json", " --train_episodes 32");
  Result r = run("train --method protonet --create_graph true --out_dir " + w.path("out") + w.common("m.json"));
  CHECK(r.status != 0);
  CHECK(r.output.find("create_graph") != std::string::npos);
  CHECK_FALSE(fs::exists(w.path("out")));

  r = run("train --method protonet --S 4 --out_dir " + w.path("out2") + w.common("m.json"));
  CHECK(r.status != 0);

  std::ofstream(w.path("bad.json")) << R"({"method":"protonet","lr":0.1})";
  r = run("train --config " + w.path("bad.json") + " --out_dir " + w.path("out3") + w.common("m.json"));
  CHECK(r.status != 0);
  CHECK(r.output.find("unknown config key") != std::string::npos);

  r = run("eval --method protonet --seeds 1 --out_dir " + w.path("out4") + w.common("m.json"));
  CHECK(r.status != 0);  // no checkpoint

  r = run("eval --method majority --out_dir " + w.path("out5") + w.data + " --manifest " + w.path("missing.json"));
  CHECK(r.status != 0);

  r = run("train --bogus-flag 1");
  CHECK(r.status != 0);
}

TEST_CASE("train then eval round trip; double runs are byte identical") {
  Workspace w("train");
  w.build("m.json", " --train_episodes 48");
  const std::string knobs = " --method protonet --hidden_dim 16 --max_epochs 2 --seeds 42,43";
  const std::string config = w.path("cfg.json");
  std::ofstream(config) << R"({"patience": 1})";
  for (const std::string out : {"a", "b"}) {
    Result r = run("train --config " + config + knobs + " --out_dir " + w.path(out) + w.common("m.json"));
    REQUIRE_MESSAGE(r.status == 0, r.output);
    CHECK(fs::exists(w.path(out + "/checkpoint_42.mwck")));
    CHECK(fs::exists(w.path(out + "/train_log_43.jsonl")));
    r = run("eval --config " + config + knobs + " --out_dir " + w.path(out) + w.common("m.json"));
    REQUIRE_MESSAGE(r.status == 0, r.output);
  }
  CHECK(slurp(w.path("a/report.json")) == slurp(w.path("b/report.json")));
  CHECK(slurp(w.path("a/scores.csv")) == slurp(w.path("b/scores.csv")));
  CHECK(slurp(w.path("a/checkpoint_43.mwck")) == slurp(w.path("b/checkpoint_43.mwck")));
  const auto resolved = nlohmann::json::parse(slurp(w.path("a/config.resolved.json")));
  CHECK(resolved["patience"] == "1");
  CHECK(resolved["meta_lr"] == "0.001");

  std::istringstream log(slurp(w.path("a/train_log_42.jsonl")));
  std::string line;
  std::size_t lines = 0;
  while (std::getline(log, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j.contains("val_macro_f1"));
    ++lines;
  }
  CHECK(lines >= 1);
  CHECK(lines <= 2);

  // a checkpoint from another method is refused
  const Result r = run("eval --method protofomaml --hidden_dim 16 --seeds 42 --out_dir " + w.path("a") + w.common("m.json"));
  CHECK(r.status != 0);
}

TEST_CASE("sweep writes one row per count") {
  Workspace w("sweep");
  w.build("m.json", " --train_episodes 48");
  const Result r = run("sweep --method protonet --hidden_dim 16 --max_epochs 1 --seeds 1 --counts 0,16,48 --out_dir " +
                       w.path("out") + w.common("m.json"));
  REQUIRE_MESSAGE(r.status == 0, r.output);
  const auto sweep = nlohmann::json::parse(slurp(w.path("out/sweep.json")));
  CHECK(sweep["rows"].size() == 3);
  const Result bad = run("sweep --method protonet --counts 48,16 --seeds 1 --out_dir " + w.path("out2") + w.common("m.json"));
  CHECK(bad.status != 0);
}
