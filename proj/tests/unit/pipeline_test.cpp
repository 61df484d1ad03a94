#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "emobridge/binary_io.hpp"
#include "emobridge/error.hpp"
#include "emobridge/pipeline/config.hpp"
#include "emobridge/pipeline/ledger.hpp"
#include "emobridge/pipeline/stages.hpp"
#include "test_support.hpp"

using namespace emobridge;
using namespace emobridge::pipeline;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json tiny_config() {
  return {
      {"seed", 3},
      {"output_dir", "run"},
      {"encoder", {{"layers", 2}, {"dim", 6}, {"mel_bands", 12}, {"ff_width", 8}}},
      {"corpus",
       {{"synthetic",
         {{"emotion_per_class", 3}, {"bonafide", 12}, {"spoof", 12}, {"min_duration", 0.4}, {"max_duration", 0.5}}}}},
      {"bridge", {{"learning_rate", 1e-3}, {"max_epochs", 2}, {"batch_size", 8}}},
      {"functionals", {"EGEMAPS_LIKE", "IS09_LIKE"}},
      {"diagnostics", {{"attention_samples", 3}, {"embedding_samples", 12}}},
  };
}

ExperimentConfig parse(const json& doc, const std::string& base, std::optional<std::uint64_t> seed = std::nullopt) {
  return parse_config(doc.dump(), base, seed);
}

int run_cli(const std::string& args) {
  const int status = std::system((std::string(EMOBRIDGE_CLI) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Config, DefaultsAndResolution) {
  const auto cfg = parse(tiny_config(), "/base");
  EXPECT_EQ(cfg.output_dir, "/base/run");
  EXPECT_EQ(cfg.encoder.toy.seed, 3u);
  EXPECT_EQ(cfg.bridge.seed, 3u);
  EXPECT_EQ(cfg.splits.seed, 3u);
  EXPECT_EQ(cfg.synthetic_seed, 3u);
  EXPECT_EQ(cfg.probe.svm.gamma_rule, probe::GammaRule::scale);
  EXPECT_EQ(cfg.checksum.size(), 64u);
}

TEST(Config, SeedOverrideBeatsComponentSeeds) {
  auto doc = tiny_config();
  doc["bridge"]["seed"] = 99;
  EXPECT_EQ(parse(doc, "/b").bridge.seed, 99u);
  const auto overridden = parse(doc, "/b", 7);
  EXPECT_EQ(overridden.seed, 7u);
  EXPECT_EQ(overridden.bridge.seed, 7u);
  EXPECT_EQ(overridden.encoder.toy.seed, 7u);
  EXPECT_NE(overridden.checksum, parse(doc, "/b").checksum);
}

TEST(Config, ChecksumIgnoresKeyOrderAndOutputDir) {
  auto a = tiny_config();
  auto b = tiny_config();
  b["output_dir"] = "elsewhere";
  EXPECT_EQ(parse(a, "/x").checksum, parse(b, "/y").checksum);
  b["bridge"]["max_epochs"] = 3;
  EXPECT_NE(parse(a, "/x").checksum, parse(b, "/x").checksum);
}

TEST(Config, RejectsInvalidDocuments) {
  auto expect_error = [](json doc) { EXPECT_THROW(parse(doc, "/x"), ConfigError) << doc.dump(); };
  EXPECT_THROW(parse_config("{not json", "/x"), ConfigError);
  auto d = tiny_config();
  d["surprise_key"] = 1;
  expect_error(d);
  d = tiny_config();
  d["bridge"]["lr"] = 0.1;
  expect_error(d);
  d = tiny_config();
  d["bridge"]["learning_rate"] = "fast";
  expect_error(d);
  d = tiny_config();
  d["bridge"]["max_epochs"] = 0;
  expect_error(d);
  d = tiny_config();
  d["splits"] = {{"train", 0.5}, {"dev", 0.1}, {"test", 0.1}};
  expect_error(d);
  d = tiny_config();
  d["probe"]["kernel"] = "poly";
  expect_error(d);
  d = tiny_config();
  d["encoder"]["layers"] = 1;
  expect_error(d);
  d = tiny_config();
  d.erase("corpus");
  expect_error(d);
  d = tiny_config();
  d.erase("output_dir");
  expect_error(d);
  d = tiny_config();
  d["functionals"] = {"EXTERNAL"};
  expect_error(d);
  d = tiny_config();
  d["functionals"] = json::array({json{{"set", "EXTERNAL"}, {"dir", "ext"}}});
  expect_error(d);
  d = tiny_config();
  d["functionals"] = {"IS09_LIKE", "IS09_LIKE"};
  expect_error(d);
  d = tiny_config();
  d["corpus"]["spoof"] = "x.csv";
  expect_error(d);
}

TEST(Ledger, StaleConfigIsRefused) {
  testing_support::TempDir dir("ledger");
  auto ledger = RunLedger::open(dir.path().string(), "aaaa");
  binary::write_file_atomically(dir.file("x.txt"), "hello");
  ledger.record({"ingest", {{"omega", "o1"}}, {{"x.txt", ledger.hash("x.txt")}}, 0.1});
  ledger.save();
  EXPECT_TRUE(RunLedger::open(dir.path().string(), "aaaa").up_to_date("ingest"));
  EXPECT_THROW(RunLedger::open(dir.path().string(), "bbbb"), ConfigError);

  binary::write_file_atomically(dir.file("x.txt"), "changed");
  EXPECT_FALSE(RunLedger::open(dir.path().string(), "aaaa").up_to_date("ingest"));
}

TEST(Ledger, ChecksumInvariants) {
  testing_support::TempDir dir("ledger_inv");
  auto ledger = RunLedger::open(dir.path().string(), "c");
  ledger.record({"extract:pretrained", {{"omega", "o"}, {"theta:pretrained", "t0"}}, {}, 0});
  ledger.record({"bridge", {{"omega", "o"}, {"theta:pretrained", "t0"}, {"theta:emotion_fused", "t1"}}, {}, 0});
  EXPECT_TRUE(ledger.violations().empty());
  ledger.record({"probe:pretrained", {{"omega", "o2"}, {"theta:pretrained", "t0"}}, {}, 0});
  EXPECT_FALSE(ledger.violations().empty());
}

TEST(Pipeline, StagesEnforceOrder) {
  testing_support::TempDir dir("order");
  auto cfg = parse(tiny_config(), dir.path().string());
  Pipeline pipe(cfg);
  try {
    pipe.probe(probe::Condition::pretrained);
    FAIL();
  } catch (const MissingArtifact& e) {
    EXPECT_EQ(e.stage(), "ingest");
  }
  pipe.ingest();
  try {
    pipe.probe(probe::Condition::pretrained);
    FAIL();
  } catch (const MissingArtifact& e) {
    EXPECT_EQ(e.stage(), "extract");
  }
  EXPECT_THROW(pipe.extract(probe::Condition::emotion_fused), MissingArtifact);
  EXPECT_THROW(pipe.report(), MissingArtifact);
}

TEST(Pipeline, EndToEndOnTinyCorpus) {
  testing_support::TempDir dir("e2e");
  Pipeline pipe(parse(tiny_config(), dir.path().string()));
  const auto outcomes = pipe.run_all();
  ASSERT_EQ(outcomes.size(), 8u);
  for (const auto& o : outcomes) EXPECT_FALSE(o.skipped) << o.stage;
  EXPECT_TRUE(pipe.ledger().violations().empty());
  for (const char* f : {"reports/table1_emotion.csv", "reports/table2_comparison.csv", "reports/table3_sources.csv",
                        "reports/report.json", "diagnostics/attention.csv", "diagnostics/embedding.csv",
                        "diagnostics/forgetting.csv", "ledger.json"}) {
    EXPECT_TRUE(fs::exists(pipe.path(f))) << f;
  }
  const auto table = probe::parse_comparison_csv(binary::read_file(pipe.path("reports/table2_comparison.csv")));
  EXPECT_EQ(table.size(), 2u);  // functionals and the encoder

  // Exported score files reproduce the reported per-layer EER.
  const auto report = probe::report_from_json(binary::read_file(pipe.path("reports/probe_emotion_fused.json")));
  for (const auto& layer : report.per_layer) {
    const auto rows = metrics::read_score_file(pipe.path("scores/emotion_fused_layer" + std::to_string(layer.layer_index) + ".csv"));
    EXPECT_EQ(rows.size(), report.test_size);
    EXPECT_DOUBLE_EQ(metrics::eer(metrics::to_scored_set(rows)), layer.eer);
  }

  const auto& stages = pipe.ledger().stages();
  EXPECT_EQ(stages.at("probe:pretrained").parameters.at("theta:pretrained"),
            stages.at("extract:pretrained").parameters.at("theta:pretrained"));
  EXPECT_NE(stages.at("bridge").parameters.at("theta:emotion_fused"),
            stages.at("bridge").parameters.at("theta:pretrained"));

  // A second pass finds everything up to date.
  Pipeline again(parse(tiny_config(), dir.path().string()));
  for (const auto& o : again.run_all()) EXPECT_TRUE(o.skipped) << o.stage;

  auto changed = tiny_config();
  changed["bridge"]["max_epochs"] = 3;
  EXPECT_THROW(Pipeline(parse(changed, dir.path().string())), ConfigError);
}

TEST(Pipeline, ExternalFunctionalSidecars) {
  testing_support::TempDir dir("external");
  auto doc = tiny_config();
  doc["functionals"] = json::array({"EGEMAPS_LIKE", json{{"set", "EXTERNAL"}, {"dir", "ext"}, {"length", 3}}});
  Pipeline pipe(parse(doc, dir.path().string()));
  pipe.ingest();
  const auto spoof = corpus::load_unified_manifest(pipe.path("manifests/spoof.csv"));
  ASSERT_FALSE(spoof.records.empty());
  // One sidecar short: extraction must name the missing file.
  fs::create_directories(dir.path() / "ext");
  for (std::size_t i = 1; i < spoof.records.size(); ++i) {
    const auto& r = spoof.records[i];
    const double side = r.spoof == corpus::SpoofLabel::spoof ? 1.0 : -1.0;
    encoders::write_external_functionals((dir.path() / "ext" / (r.id + ".bin")).string(), std::vector<float>{static_cast<float>(side), static_cast<float>(0.5 * side), 0.25f});
  }
  EXPECT_THROW(pipe.extract(probe::Condition::pretrained), MissingArtifact);
  const auto& first = spoof.records.front();
  const double side = first.spoof == corpus::SpoofLabel::spoof ? 1.0 : -1.0;
  encoders::write_external_functionals((dir.path() / "ext" / (first.id + ".bin")).string(), std::vector<float>{static_cast<float>(side), static_cast<float>(0.5 * side), 0.25f});

  pipe.extract(probe::Condition::pretrained);
  pipe.bridge();
  pipe.extract(probe::Condition::emotion_fused);
  pipe.probe(probe::Condition::emotion_fused);
  const auto report =
      probe::report_from_json(binary::read_file(pipe.path("reports/probe_functionals_EXTERNAL.json")));
  ASSERT_EQ(report.per_layer.size(), 1u);
  EXPECT_EQ(report.per_layer[0].eer, 0.0);  // the sidecars encode the label
  EXPECT_EQ(report.per_layer[0].accuracy, 1.0);
}

TEST(Cli, ExitCodes) {
  testing_support::TempDir dir("cli");
  std::ofstream(dir.file("bad.json")) << R"({"output_dir": "out", "corpus": {"synthetic": {}}, "oops": 1})";
  EXPECT_EQ(run_cli("ingest --config " + dir.file("bad.json")), 2);
  std::ofstream(dir.file("good.json")) << tiny_config().dump();
  EXPECT_EQ(run_cli("probe --config " + dir.file("good.json") + " --out " + dir.file("o")), 3);
  EXPECT_EQ(run_cli("extract --config " + dir.file("good.json") + " --condition sideways"), 2);
  EXPECT_EQ(run_cli("ingest --config " + dir.file("good.json") + " --out " + dir.file("o") + " --seed 5"), 0);
  EXPECT_EQ(run_cli("bridge --config " + dir.file("good.json") + " --out " + dir.file("o") + " --seed 5"), 3);
}
