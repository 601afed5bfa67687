#include <gtest/gtest.h>

#include <filesystem>

#include "calmath/jsonl.hpp"
#include "calmath/pipeline.hpp"

namespace calmath {
namespace {

namespace fs = std::filesystem;

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("calmath_pipeline_" + name);
  fs::remove_all(dir);
  return dir;
}

ExperimentConfig small_config(const std::string& name) {
  ExperimentConfig c;
  c.run_dir = fresh_dir(name);
  c.samples_per_subtask = 20;
  c.parallelism = 2;
  c.setups = {ConfidenceKind::VerbalNumber, ConfidenceKind::IndirectLogit};
  c.fewshot_k = {};
  c.probe = false;
  return c;
}

nlohmann::json report_info(const ExperimentConfig& c) {
  return nlohmann::json::parse(read_text(c.run_dir / "manifest.json")).at("stages").at("report");
}

TEST(Config, ValidatesAndRoundTrips) {
  ExperimentConfig c;
  c.seed = 17;
  c.setups = {ConfidenceKind::VerbalWord};
  const auto back = config_from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());
  EXPECT_EQ(back.hash(), c.hash());
  EXPECT_NE(ExperimentConfig{}.hash(), c.hash());

  EXPECT_THROW(config_from_json({{"no_such_key", 1}}), std::invalid_argument);
  EXPECT_THROW(config_from_json({{"setups", {"telepathy"}}}), std::invalid_argument);
  EXPECT_THROW(config_from_json({{"bins_k", 0}}), std::invalid_argument);
  ExperimentConfig overlap;
  overlap.eval_groups = {Group::AddSub};
  EXPECT_THROW(overlap.validate(), std::invalid_argument);
}

TEST(Pipeline, StagesRequirePredecessors) {
  auto c = small_config("order");
  Pipeline p(c);
  EXPECT_THROW(p.grade(), std::exception);
  fs::remove_all(c.run_dir);
}

TEST(Pipeline, OracleVerbalIsCalibratedOnEveryEvalGroup) {
  auto c = small_config("oracle");
  c.samples_per_subtask = 100;
  c.setups = {ConfidenceKind::VerbalNumber};
  c.baselines = false;
  c.backend = {{"type", "simulator"}, {"policy", {{"kind", "oracle"}}}};
  Pipeline p(c);
  p.run_all();
  const auto info = report_info(c);
  for (const char* g : {"MultDiv", "Multi"}) EXPECT_LT(info.at("verbal-number").at(g).at("mad"), 0.03) << g;
  fs::remove_all(c.run_dir);
}

TEST(Pipeline, ConstantPolicyOnLowAccuracyGroup) {
  auto c = small_config("constant");
  c.samples_per_subtask = 100;
  c.setups = {ConfidenceKind::VerbalNumber};
  c.eval_groups = {Group::MultDiv};
  c.baselines = false;
  c.backend = {{"type", "simulator"},
               {"profile", false},
               {"default_accuracy", 0.2},
               {"policy", {{"kind", "constant"}, {"constant", 0.5}}}};
  Pipeline p(c);
  p.run_all();
  EXPECT_NEAR(report_info(c).at("verbal-number").at("MultDiv").at("mad"), 0.3, 0.03);
  fs::remove_all(c.run_dir);
}

TEST(Pipeline, DeterministicAndResumable) {
  auto a = small_config("det_a");
  auto b = small_config("det_b");
  b.run_dir = fresh_dir("det_b");
  const auto ta = Pipeline(a).run_all();
  const auto tb = Pipeline(b).run_all();
  EXPECT_EQ(ta, tb);
  EXPECT_EQ(read_text(a.run_dir / "bins.csv"), read_text(b.run_dir / "bins.csv"));
  EXPECT_TRUE(ta.starts_with("config " + a.hash() + "\ntemplates prompts-v1\n"));

  // Rerunning over the cache reproduces the report byte for byte.
  const auto cache_size = fs::file_size(a.run_dir / "cache.jsonl");
  EXPECT_EQ(Pipeline(a).run_all(), ta);
  EXPECT_EQ(fs::file_size(a.run_dir / "cache.jsonl"), cache_size);

  // Zero-shot answers are shared by every setup.
  EXPECT_EQ(read_jsonl(a.run_dir / "answers.jsonl").size(), 196u * 20u);
  fs::remove_all(a.run_dir);
  fs::remove_all(b.run_dir);
}

TEST(Pipeline, WritesArtifacts) {
  auto c = small_config("artifacts");
  c.setups = {ConfidenceKind::VerbalNumber, ConfidenceKind::VerbalWord};
  c.fewshot_k = {5};
  c.probe = true;
  Pipeline p(c);
  const auto text = p.run_all();
  for (const char* f : {"questions.jsonl", "graded.jsonl", "stats.jsonl", "labels/verbal-number.jsonl",
                        "finetune/verbal-number.jsonl", "finetune/verbal-word.jsonl", "scores/verbal-word.jsonl",
                        "scores/constant.jsonl", "scores/heuristic-lr.jsonl", "scores/probe.jsonl",
                        "scores/fewshot-k5.jsonl", "models/probe.json", "probe/projection.csv", "bins.csv"})
    EXPECT_TRUE(fs::exists(c.run_dir / f)) << f;
  EXPECT_NE(text.find("Parse failures and omissions:"), std::string::npos);
  EXPECT_EQ(read_jsonl(c.run_dir / "finetune/verbal-number.jsonl").size(), 109u * 20u);
  fs::remove_all(c.run_dir);
}

}  // namespace
}  // namespace calmath
