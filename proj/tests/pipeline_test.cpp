#include <gtest/gtest.h>

#include <chrono>
#include <sstream>

#include "logicode/pipeline.hpp"
#include "support/bundle.hpp"
#include "support/tmpdir.hpp"

using namespace logicode;
using namespace logicode::pipeline;
using testing_support::oracle_config;
using testing_support::read_tree;

namespace {

int run_config(const testing_support::TempDir& dir, const Json& cfg, std::string* err_out = nullptr) {
  const auto path = dir / "config.json";
  write_file(path.string(), cfg.dump(2));
  std::ostringstream out, err;
  const int code = e2e_main(path, out, err);
  if (err_out) *err_out = err.str();
  return code;
}

}  // namespace

TEST(Pipeline, OracleEndToEndIsPerfect) {
  testing_support::TempDir dir;
  const auto t0 = std::chrono::steady_clock::now();
  const auto res = run_e2e(config_from_json(oracle_config("out", 200), dir.path()));
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const auto& cr = res.report.categories.at(synth::connector_scene::kCategory);
  ASSERT_TRUE(cr.detection);
  EXPECT_EQ(cr.detection->n_runs(), 5u);
  EXPECT_EQ(cr.detection->average.rendered(), "1.000/1.000/1.000/1.000");
  for (const auto& m : cr.detection->per_run) EXPECT_EQ(m.rendered(), "1.000/1.000/1.000/1.000");
  EXPECT_EQ(cr.generation->success, 20u);
  ASSERT_TRUE(cr.llm_reasoning);
  EXPECT_EQ(*cr.llm_reasoning, 1.0);
  EXPECT_LT(secs, 10.0);

  const auto tree = read_tree(dir / "out");
  EXPECT_TRUE(tree.count("report.json"));
  EXPECT_TRUE(tree.count("report.md"));
  EXPECT_TRUE(tree.count("outcomes/synthetic_connector_scene.jsonl"));
  EXPECT_TRUE(tree.count("runs/synthetic_connector_scene/run_4.json"));
  EXPECT_TRUE(tree.count("judge/synthetic_connector_scene/run_4.json"));
  // Every artifact carries provenance.
  for (const auto& [name, bytes] : tree) EXPECT_NE(bytes.find("prompt_template_hash"), std::string::npos) << name;
}

TEST(Pipeline, ReplayRunsAreByteIdentical) {
  testing_support::TempDir dir;
  const std::string cassette = (dir / "cassette.jsonl").string();
  ASSERT_EQ(run_config(dir, oracle_config("recorded", 60, cassette)), 0);

  Json replay = oracle_config("replay_a", 60);
  replay["backend"] = {{"kind", "replay"}, {"cassette", "cassette.jsonl"}};
  ASSERT_EQ(run_config(dir, replay), 0);
  replay["output_dir"] = "replay_b";
  ASSERT_EQ(run_config(dir, replay), 0);

  const auto a = read_tree(dir / "replay_a");
  const auto b = read_tree(dir / "replay_b");
  EXPECT_EQ(a, b);
  EXPECT_GT(a.size(), 5u);
  // Replay reproduces the recorded reports; only the backend id differs.
  const auto rec = Json::parse(read_tree(dir / "recorded").at("runs/synthetic_connector_scene/run_0.json"));
  const auto rep = Json::parse(a.at("runs/synthetic_connector_scene/run_0.json"));
  EXPECT_EQ(rep["reports"], rec["reports"]);
  EXPECT_EQ(rec["provenance"]["backend_id"], "oracle-stub");
  EXPECT_EQ(rep["provenance"]["backend_id"].get<std::string>().rfind("replay:", 0), 0u);
}

TEST(Pipeline, ReplayMissExitsWithBackendError) {
  testing_support::TempDir dir;
  write_file((dir / "empty.jsonl").string(), "");
  Json cfg = oracle_config("out", 10);
  cfg["backend"] = {{"kind", "replay"}, {"cassette", "empty.jsonl"}};
  std::string err;
  EXPECT_EQ(run_config(dir, cfg, &err), kExitBackend);
  EXPECT_NE(err.find("cassette has no recorded response"), std::string::npos) << err;
  cfg["backend"]["cassette"] = "absent.jsonl";
  EXPECT_EQ(run_config(dir, cfg, &err), kExitBackend);
}

TEST(Pipeline, MalformedConfigExitsWithFieldDiagnostic) {
  testing_support::TempDir dir;
  std::string err;
  Json cfg = oracle_config("out", 10);
  cfg["runs"] = 0;
  EXPECT_EQ(run_config(dir, cfg, &err), kExitConfig);
  EXPECT_NE(err.find("config.runs"), std::string::npos) << err;

  cfg = oracle_config("out", 10);
  cfg["backend"]["kind"] = "psychic";
  EXPECT_EQ(run_config(dir, cfg, &err), kExitConfig);
  EXPECT_NE(err.find("config.backend.kind"), std::string::npos) << err;

  cfg = oracle_config("out", 10);
  cfg["dataset"]["synthetic"]["rates"]["colour"] = 0.1;
  EXPECT_EQ(run_config(dir, cfg, &err), kExitConfig);
  EXPECT_NE(err.find("colour"), std::string::npos) << err;

  cfg = oracle_config("out", 10);
  cfg["prompt_template"] = "v404";
  EXPECT_EQ(run_config(dir, cfg, &err), kExitConfig);

  cfg = oracle_config("out", 10);
  cfg["surprise"] = true;
  EXPECT_EQ(run_config(dir, cfg, &err), kExitConfig);
  EXPECT_NE(err.find("config.surprise"), std::string::npos) << err;

  write_file((dir / "config.json").string(), "{ nope");
  std::ostringstream out, err2;
  EXPECT_EQ(e2e_main(dir / "config.json", out, err2), kExitConfig);
  EXPECT_EQ(e2e_main(dir / "missing.json", out, err2), kExitConfig);
}

TEST(Pipeline, DataErrorsExitFour) {
  testing_support::TempDir dir;
  std::filesystem::create_directories(dir / "data");
  write_file((dir / "data" / "bad.json").string(), "{\"image_id\": 3}");
  Json cfg = oracle_config("out", 10);
  cfg["dataset"] = {{"root", "data"}};
  cfg["rules"] = std::string(LOGICODE_DATA_DIR) + "/rules/connector-scene.json";
  std::string err;
  EXPECT_EQ(run_config(dir, cfg, &err), kExitData);
  EXPECT_NE(err.find("data error"), std::string::npos);
}

TEST(Pipeline, DatasetRootWithRulesFile) {
  testing_support::TempDir dir;
  synth::SynthConfig sc;
  sc.n = 40;
  sc.rates = {0.2, 0.2, 0.2, 0.2};
  dataset::write_manifest(synth::generate_synthetic(sc, 9), dir / "data");
  Json cfg = oracle_config("out", 10);
  cfg["dataset"] = {{"root", "data"}};
  cfg["rules"] = {std::string(LOGICODE_DATA_DIR) + "/rules/connector-scene.json"};
  cfg["runs"] = 2;
  cfg["generation_attempts"] = 3;
  cfg["run_source"] = "reexecute";
  const auto res = run_e2e(config_from_json(cfg, dir.path()));
  const auto& cr = res.report.categories.at(synth::connector_scene::kCategory);
  EXPECT_EQ(cr.detection->average.rendered(), "1.000/1.000/1.000/1.000");
  EXPECT_EQ(cr.generation->total(), 3u);
}

TEST(Pipeline, HumanEvalImportedIntoReport) {
  testing_support::TempDir dir;
  std::string csv = "image_id,rater_id,verdict\ncs_00000,a,match\ncs_00001,a,mismatch\ncs_00000,b,match\n";
  write_file((dir / "human.csv").string(), csv);
  Json cfg = oracle_config("out", 10);
  cfg["runs"] = 1;
  cfg["human_eval"] = {{synth::connector_scene::kCategory, "human.csv"}};
  const auto res = run_e2e(config_from_json(cfg, dir.path()));
  EXPECT_DOUBLE_EQ(*res.report.categories.at(synth::connector_scene::kCategory).human_reasoning, 0.75);
  EXPECT_NE(read_file((dir / "out" / "report.md").string()).find("| synthetic_connector_scene | 0.750 | 1.000 |"),
            std::string::npos);
}
