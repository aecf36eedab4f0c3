#include <gtest/gtest.h>

#include "bforensics/pipeline.hpp"
#include "test_util.hpp"

using namespace bforensics;

namespace {

PipelineConfig small_config(const TempDir& dir, std::uint64_t seed = 3) {
  auto c = Config::parse(
      "[simulate]\n"
      "malicious = 60\nmaybe_malicious = 60\nnaive_self_corrector = 60\ninformed_sharer = 60\ndisengaged = 60\n"
      "p_in = 0.15\np_out = 0.005\nnews_pairs = 3\n"
      "[embed]\nsamples = 200000\n"
      "[stage2]\nfolds = 3\n"
      "[model]\nn_estimators = 20\n");
  c.set("seed", std::to_string(seed));
  c.set("workdir", dir.path().string());
  return pipeline_config(c);
}

void run_all(const PipelineConfig& cfg) {
  run_simulate(cfg);
  run_label(cfg);
  run_build_graph(cfg);
  run_embed(cfg);
  run_features(cfg);
  run_stage1(cfg);
  run_stage2(cfg);
}

}  // namespace

TEST(Pipeline, EndToEndProducesStableArtifacts) {
  TempDir dir;
  const auto cfg = small_config(dir);
  run_all(cfg);
  for (const char* name : {"labels.csv", "label_report.json", "graph.bin", "embeddings.csv", "features_stage1.csv",
                           "features_stage2.csv", "stage1_report.json", "stage1_report.csv", "stage1_roc.csv",
                           "stage1_model.json", "stage2_report.json", "stage2_report.csv", "stage2_model.json"}) {
    EXPECT_TRUE(std::filesystem::exists(cfg.artifact(name))) << name;
  }
  const auto r1 = slurp(cfg.artifact("stage1_report.json"));
  const auto r2 = slurp(cfg.artifact("stage2_report.json"));
  const auto emb = slurp(cfg.artifact("embeddings.csv"));
  const auto labels = slurp(cfg.artifact("labels.csv"));

  run_all(cfg);
  EXPECT_EQ(slurp(cfg.artifact("labels.csv")), labels);
  EXPECT_EQ(slurp(cfg.artifact("embeddings.csv")), emb);
  EXPECT_EQ(slurp(cfg.artifact("stage1_report.json")), r1);
  EXPECT_EQ(slurp(cfg.artifact("stage2_report.json")), r2);

  const auto j = nlohmann::json::parse(r2);
  EXPECT_EQ(j["report"]["class_names"].size(), 4u);
  EXPECT_TRUE(j.contains("baseline_majority"));
  EXPECT_TRUE(j.contains("baseline_random"));
  const auto s1 = nlohmann::json::parse(r1);
  EXPECT_TRUE(s1["report"].contains("auc"));

  const auto text = run_report(cfg);
  EXPECT_NE(text.find("stage2 bagged_trees"), std::string::npos);
}

TEST(Pipeline, Stage2NeverSeesDisengagedRows) {
  TempDir dir;
  const auto cfg = small_config(dir, 4);
  run_simulate(cfg);
  const auto labels = run_label(cfg).labels;
  run_embed(cfg);
  run_stage1(cfg);
  std::size_t engaged = 0;
  for (const auto& u : labels.users) engaged += u.final_label == Behavior::disengaged ? 0 : 1;
  std::size_t folds = 0;
  run_stage2(cfg, [&](std::size_t, const Dataset& train) {
    ++folds;
    EXPECT_EQ(train.class_names, stage2_class_names());
    for (int y : train.y) EXPECT_TRUE(y >= 0 && y < 4);
    EXPECT_LT(train.rows(), 2 * engaged);  // at most SMOTE-doubled engaged rows
  });
  EXPECT_EQ(folds, cfg.stage2_folds);
  const auto j = nlohmann::json::parse(slurp(cfg.artifact("stage2_report.json")));
  EXPECT_EQ(j["rows"].get<std::size_t>() + j["unembedded_users"].get<std::size_t>(), engaged);
}

TEST(Pipeline, Stage2RequiresStage1Artifacts) {
  TempDir dir;
  const auto cfg = small_config(dir);
  run_simulate(cfg);
  run_label(cfg);
  run_embed(cfg);
  EXPECT_THROW(run_stage2(cfg), DataError);
}

TEST(Pipeline, PredictRoutesAndFlagsUnknownUsers) {
  TempDir dir;
  const auto cfg = small_config(dir, 6);
  const auto data = run_simulate(cfg);
  run_label(cfg);
  run_embed(cfg);
  run_stage1(cfg);
  run_stage2(cfg);
  std::vector<std::string> users = data.users;
  users.push_back("nobody");
  const auto preds = predict_users(cfg, users);
  ASSERT_EQ(preds.size(), users.size());
  EXPECT_EQ(preds.back().predicted_class, kUnpredictable);
  EXPECT_FALSE(preds.back().stage1_score.has_value());
  std::size_t correct = 0, total = 0;
  for (std::size_t i = 0; i + 1 < preds.size(); ++i) {
    const auto& p = preds[i];
    ASSERT_TRUE(p.stage1_score.has_value());
    if (*p.stage1_score < 0.5) {
      EXPECT_EQ(p.predicted_class, "disengaged");
    } else {
      EXPECT_NE(p.predicted_class, "disengaged");
    }
    correct += p.predicted_class == behavior_name(data.planted[i]) ? 1 : 0;
    ++total;
  }
  EXPECT_GT(static_cast<double>(correct) / static_cast<double>(total), 0.6);
  write_predictions_csv(preds, cfg.artifact("predictions.csv"));
  const auto text = slurp(cfg.artifact("predictions.csv"));
  EXPECT_EQ(text.substr(0, text.find('\n')), "user_id,predicted_class,stage1_score");
  EXPECT_NE(text.find("\nnobody,unpredictable,\n"), std::string::npos);
}

TEST(Pipeline, StageErrorsOnTooFewRows) {
  TempDir dir;
  auto cfg = small_config(dir);
  run_simulate(cfg);
  run_label(cfg);
  run_embed(cfg);
  cfg.stage1_folds = 100000;
  EXPECT_THROW(run_stage1(cfg), DataError);
}
