#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "pathcast/cli.hpp"
#include "pathcast/common.hpp"

namespace fs = std::filesystem;
using pathcast::read_text_file;
using pathcast::write_text_file;

namespace {

int run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv = {"pathcast"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return pathcast::cli::run(static_cast<int>(argv.size()), argv.data());
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::path("/tmp") / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  std::string operator/(const std::string& leaf) const { return (path / leaf).string(); }
};

const char* kSynthCfg =
    "n_communities = 6\n"
    "n_users = 40\n"
    "n_videos = 16\n"
    "planted_edges = 0->1,1->2,3->4,4->5\n"
    "cross_gap_logmean = 4.5\n"
    "seed = 5\n";

const char* kTrainCfg =
    "dim = 8\n"
    "epochs = 2\n"
    "batch_size = 16\n"
    "grad_chunk = 8\n"
    "neighbor_budget = 4\n"
    "eval_negatives = 10\n"
    "seed = 2\n";

}  // namespace

TEST_CASE("--help exits 0, bad usage exits 1") {
  CHECK(run_cli({"--help"}) == 0);
  CHECK(run_cli({"no-such-command"}) == 1);
  CHECK(run_cli({"synth", "--no-such-flag"}) == 1);
  CHECK(run_cli({}) == 1);
}

TEST_CASE("missing input file exits 2") {
  TempDir dir("pathcast_cli_data_err");
  CHECK(run_cli({"ingest", "--in", dir / "nope.jsonl", "--out", dir / "c.jsonl"}) == 2);
}

TEST_CASE("full pipeline runs end to end on a tiny fixture") {
  TempDir dir("pathcast_cli_pipeline");
  write_text_file(dir / "synth.cfg", kSynthCfg);
  write_text_file(dir / "train.cfg", kTrainCfg);

  CHECK(run_cli({"synth", "--config", dir / "synth.cfg", "--out", dir / "corpus.jsonl",
                 "--truth", dir / "truth.json"}) == 0);
  CHECK(fs::exists(dir / "corpus.jsonl"));
  CHECK(fs::exists(dir / "truth.json"));

  CHECK(run_cli({"ingest", "--in", dir / "corpus.jsonl", "--out", dir / "canon.jsonl"}) == 0);
  CHECK(read_text_file(dir / "canon.jsonl") == read_text_file(dir / "corpus.jsonl"));

  CHECK(run_cli({"analyze-intervals", "--in", dir / "corpus.jsonl", "--c", "0.4", "--out",
                 dir / "intervals.json", "--csv", dir / "intervals.csv"}) == 0);
  const auto intervals = nlohmann::json::parse(read_text_file(dir / "intervals.json"));
  CHECK(intervals.contains("mu"));
  CHECK(intervals.contains("threshold_seconds"));

  CHECK(run_cli({"build-cig", "--in", dir / "corpus.jsonl", "--mode", "influence", "--c", "0.4",
                 "--video", "all", "--out-dir", dir / "cigs"}) == 0);
  CHECK(fs::exists(dir / "cigs/summary.csv"));
  CHECK(fs::exists(dir / "cigs/vid0.json"));

  CHECK(run_cli({"train", "--in", dir / "corpus.jsonl", "--config", dir / "train.cfg", "--out",
                 dir / "ckpt"}) == 0);
  CHECK(fs::exists(dir / "ckpt.json"));
  CHECK(fs::exists(dir / "ckpt.bin"));
  CHECK(fs::exists(dir / "ckpt.log.csv"));

  CHECK(run_cli({"eval", "--in", dir / "corpus.jsonl", "--checkpoint", dir / "ckpt", "--out",
                 dir / "metrics.json", "--csv", dir / "metrics.csv", "--seeds", "2"}) == 0);
  const auto metrics = nlohmann::json::parse(read_text_file(dir / "metrics.json"));
  CHECK(metrics.contains("slices"));
  CHECK(metrics["slices"].contains("overall"));

  CHECK(run_cli({"export-graph", "--in", dir / "cigs/vid0.json", "--format", "dot", "--out",
                 dir / "vid0.dot"}) == 0);
  CHECK(read_text_file(dir / "vid0.dot").find("digraph") != std::string::npos);
  CHECK(run_cli({"export-graph", "--in", dir / "cigs/vid0.json", "--format", "json", "--out",
                 dir / "vid0.roundtrip.json"}) == 0);
  CHECK(read_text_file(dir / "vid0.roundtrip.json") == read_text_file(dir / "cigs/vid0.json"));
}

TEST_CASE("identical seeds give byte-identical checkpoints, reports, and manifest hashes") {
  TempDir a("pathcast_cli_det_a");
  TempDir b("pathcast_cli_det_b");
  for (const TempDir* dir : {&a, &b}) {
    write_text_file(*dir / "synth.cfg", kSynthCfg);
    write_text_file(*dir / "train.cfg", kTrainCfg);
    REQUIRE(run_cli({"synth", "--config", *dir / "synth.cfg", "--out", *dir / "corpus.jsonl",
                     "--truth", *dir / "truth.json"}) == 0);
    REQUIRE(run_cli({"train", "--in", *dir / "corpus.jsonl", "--config", *dir / "train.cfg",
                     "--out", *dir / "ckpt"}) == 0);
    REQUIRE(run_cli({"eval", "--in", *dir / "corpus.jsonl", "--checkpoint", *dir / "ckpt",
                     "--out", *dir / "metrics.json", "--seeds", "2"}) == 0);
  }
  CHECK(read_text_file(a / "corpus.jsonl") == read_text_file(b / "corpus.jsonl"));
  CHECK(read_text_file(a / "ckpt.bin") == read_text_file(b / "ckpt.bin"));
  CHECK(read_text_file(a / "ckpt.json") == read_text_file(b / "ckpt.json"));
  CHECK(read_text_file(a / "metrics.json") == read_text_file(b / "metrics.json"));

  // manifests may differ in wall time and paths but never in hashes
  const auto ma = nlohmann::json::parse(read_text_file(a / "metrics.json.manifest.json"));
  const auto mb = nlohmann::json::parse(read_text_file(b / "metrics.json.manifest.json"));
  auto hashes = [](const nlohmann::json& obj) {
    std::vector<std::string> out;
    for (const auto& [path, hash] : obj.items()) out.push_back(hash.get<std::string>());
    return out;
  };
  CHECK(hashes(ma["inputs"]) == hashes(mb["inputs"]));
  CHECK(hashes(ma["outputs"]) == hashes(mb["outputs"]));
}

TEST_CASE("cli flags override config-file keys") {
  TempDir dir("pathcast_cli_override");
  write_text_file(dir / "synth.cfg", kSynthCfg);
  write_text_file(dir / "train.cfg", std::string(kTrainCfg) + "lr = 0.01\n");
  REQUIRE(run_cli({"synth", "--config", dir / "synth.cfg", "--out", dir / "corpus.jsonl",
                   "--truth", dir / "truth.json"}) == 0);
  REQUIRE(run_cli({"train", "--in", dir / "corpus.jsonl", "--config", dir / "train.cfg",
                   "--lr", "0.001", "--epochs", "1", "--out", dir / "ckpt"}) == 0);
  const auto manifest = nlohmann::json::parse(read_text_file(dir / "ckpt.manifest.json"));
  CHECK(manifest["config"]["lr"] == "0.001");
  CHECK(manifest["config"]["epochs"] == "1");
  const auto ckpt = nlohmann::json::parse(read_text_file(dir / "ckpt.json"));
  CHECK(ckpt["meta"]["lr"] == "0.001");
}

TEST_CASE("export-graph rejects unknown formats with a usage error") {
  TempDir dir("pathcast_cli_badfmt");
  write_text_file(dir / "g.json",
                  R"({"video_id":"v","mode":"influence","sessions":1,"nodes":["a","b"],)"
                  R"("edges":[{"src":"a","dst":"b","weight":0.6931471805599453}]})");
  CHECK(run_cli({"export-graph", "--in", dir / "g.json", "--format", "xml"}) == 1);
}

TEST_CASE("thread cap does not change build-cig outputs") {
  TempDir dir("pathcast_cli_threads");
  write_text_file(dir / "synth.cfg", kSynthCfg);
  REQUIRE(run_cli({"synth", "--config", dir / "synth.cfg", "--out", dir / "corpus.jsonl",
                   "--truth", dir / "truth.json"}) == 0);
  setenv("PATHCAST_THREADS", "1", 1);
  REQUIRE(run_cli({"build-cig", "--in", dir / "corpus.jsonl", "--c", "0.4", "--out-dir",
                   dir / "serial"}) == 0);
  setenv("PATHCAST_THREADS", "4", 1);
  REQUIRE(run_cli({"build-cig", "--in", dir / "corpus.jsonl", "--c", "0.4", "--out-dir",
                   dir / "parallel"}) == 0);
  unsetenv("PATHCAST_THREADS");
  CHECK(read_text_file(dir / "serial/summary.csv") == read_text_file(dir / "parallel/summary.csv"));
  CHECK(read_text_file(dir / "serial/vid3.json") == read_text_file(dir / "parallel/vid3.json"));
}
