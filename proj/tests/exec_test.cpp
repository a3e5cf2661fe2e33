#include <gtest/gtest.h>

#include "logicode/checklang/compile.hpp"
#include "logicode/exec.hpp"
#include "logicode/synth.hpp"
#include "support/tmpdir.hpp"

using namespace logicode;
using namespace logicode::exec;

namespace {

dataset::DatasetManifest synthetic(std::size_t n, std::uint64_t seed = 5) {
  synth::SynthConfig c;
  c.n = n;
  c.rates = {0.2, 0.2, 0.2, 0.2};
  return synth::generate_synthetic(c, seed);
}

checklang::CheckProgram oracle() { return checklang::compile_reference(synth::template_rules("connector-scene")); }

Provenance prov() { return {"", "prompt-hash", "rules-hash", "oracle-stub", "dataset-id"}; }

}  // namespace

TEST(Exec, OracleMatchesGroundTruth) {
  const auto m = synthetic(150);
  const auto run = run_detection(oracle(), m, dataset::Split::Test, prov());
  ASSERT_EQ(run.reports.size(), 150u);
  std::size_t abnormal = 0;
  for (std::size_t i = 0; i < m.records.size(); ++i) {
    const auto& rec = m.records[i];
    const auto& rep = run.reports[i];
    EXPECT_EQ(rep.image_id, rec.image_id);
    EXPECT_EQ(rep.abnormal(), rec.label == dataset::Label::Abnormal) << rec.image_id;
    EXPECT_EQ(rep.reasons, rec.reasons) << rec.image_id;
    abnormal += rep.abnormal();
  }
  EXPECT_GT(abnormal, 30u);
  EXPECT_EQ(run.provenance.program_hash, program_hash(oracle()));
  EXPECT_EQ(run.category, synth::connector_scene::kCategory);
}

TEST(Exec, DegenerateRecordIsIsolated) {
  auto m = synthetic(20);
  const auto before = run_detection(oracle(), m, dataset::Split::Test, prov());
  auto& victim = m.records[7];
  victim.objects[0].polygon = {{0, 0}, {1, 1}, {2, 2}};  // collinear, zero area
  const auto after = run_detection(oracle(), m, dataset::Split::Test, prov());
  for (std::size_t i = 0; i < m.records.size(); ++i) {
    if (i == 7) {
      EXPECT_EQ(after.reports[i].predicted, Prediction::EvaluationFailed);
      EXPECT_NE(after.reports[i].error.find("fact build failed"), std::string::npos);
      EXPECT_TRUE(after.reports[i].reasons.empty());
    } else {
      EXPECT_EQ(after.reports[i].to_json(), before.reports[i].to_json());
    }
  }
}

TEST(Exec, EmptySplit) {
  const auto m = synthetic(10);
  const auto run = run_detection(oracle(), m, dataset::Split::Train, prov());
  EXPECT_TRUE(run.reports.empty());
  EXPECT_FALSE(run.provenance.program_hash.empty());
}

TEST(Exec, SplitAndCategoryFilters) {
  synth::SynthConfig c;
  c.n = 30;
  c.train_fraction = 0.4;
  const auto m = synth::generate_synthetic(c, 1);
  EXPECT_EQ(run_detection(oracle(), m, dataset::Split::Train, prov()).reports.size(), 12u);
  EXPECT_EQ(run_detection(oracle(), m, dataset::Split::Test, prov()).reports.size(), 18u);
  ExecOptions o;
  o.category = "pushpins";
  EXPECT_TRUE(run_detection(oracle(), m, dataset::Split::Test, prov(), o).reports.empty());
}

TEST(Exec, ParallelismDoesNotChangeResults) {
  const auto m = synthetic(97, 8);
  const std::string serial = run_detection(oracle(), m, dataset::Split::Test, prov()).to_json().dump();
  for (std::size_t w : {2u, 3u, 8u}) {
    ExecOptions o;
    o.workers = w;
    EXPECT_EQ(run_detection(oracle(), m, dataset::Split::Test, prov(), o).to_json().dump(), serial) << w;
  }
  // Record order in the manifest does not matter either.
  auto shuffled = m.records;
  std::reverse(shuffled.begin(), shuffled.end());
  EXPECT_EQ(run_detection(oracle(), dataset::make_manifest(shuffled), dataset::Split::Test, prov()).to_json().dump(),
            serial);
}

TEST(Exec, RunRecordRoundTripAndReplay) {
  testing_support::TempDir dir;
  const auto m = synthetic(25);
  const auto run = run_detection(oracle(), m, dataset::Split::Test, prov());
  const std::string path = (dir / "run.json").string();
  write_run(run, path);
  const auto back = read_run(path);
  EXPECT_EQ(back.to_json(), run.to_json());
  EXPECT_EQ(replay_run(back, m).to_json(), run.to_json());
}

TEST(Exec, ProvenanceIsRequired) {
  const auto m = synthetic(3);
  auto j = run_detection(oracle(), m, dataset::Split::Test, prov()).to_json();
  j["provenance"]["backend_id"] = "";
  EXPECT_THROW(RunRecord::from_json(j), InvariantError);
  j["provenance"].erase("backend_id");
  EXPECT_THROW(RunRecord::from_json(j), SchemaError);
  EXPECT_THROW(run_detection(oracle(), m, dataset::Split::Test, {"", "", "r", "b", "d"}), InvariantError);
}

TEST(Exec, RuntimeFaultIsEvaluationFailed) {
  const auto m = synthetic(5);
  const auto p = checklang::parse(
      "check c covers cable_count type Quantity when size(\"unicorn\", 0).length > 1 reason \"Quantity Anomaly: x\"");
  const auto run = run_detection(p, m, dataset::Split::Test, prov());
  for (const auto& r : run.reports) EXPECT_EQ(r.predicted, Prediction::EvaluationFailed);
}
