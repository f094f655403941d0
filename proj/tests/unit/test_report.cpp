#include <gtest/gtest.h>
#include <unistd.h>

#include <cmath>
#include <filesystem>

#include "gmfp/dataset_io.hpp"
#include "gmfp/report.hpp"

namespace gmfp::report {
namespace {

TEST(Report, NineDigitFormatting) {
  EXPECT_EQ(format_g9(0.1), "0.1");
  EXPECT_EQ(format_g9(1.0 / 3.0), "0.333333333");
  EXPECT_EQ(format_g9(123456789012.0), "1.23456789e+11");
  EXPECT_EQ(format_g9(-2.5e-7), "-2.5e-07");
  EXPECT_EQ(round_g9(1.0 / 3.0), 0.333333333);
  EXPECT_EQ(round_g9(2.0), 2.0);
  // Idempotent.
  for (const double v : {0.1234567891234, 9.87654321e-5, -77.7777777777}) {
    EXPECT_EQ(round_g9(round_g9(v)), round_g9(v));
    EXPECT_EQ(format_g9(round_g9(v)), format_g9(v));
  }
}

TEST(Report, CsvText) {
  CsvTable t{{"a", "b"}, {{"1", "2"}, {"3", "4"}}};
  EXPECT_EQ(t.to_string(), "a,b\n1,2\n3,4\n");
  const std::vector<StepRecord> steps = {{.step = 0, .epoch = 0, .loss = 0.5}, {.step = 1, .epoch = 0, .loss = 0.25}};
  EXPECT_EQ(loss_csv(steps).to_string(), "step,epoch,loss\n0,0,0.5\n1,0,0.25\n");
  const std::vector<analysis::AblationRow> rows = {{.bag_size = 4, .bags_per_model = 8, .trials = 2}};
  EXPECT_EQ(ablation_csv(rows).to_string(),
            "bag_size,bags_per_model,trials,score_mean,score_std,separation_mean,separation_std,accuracy_mean,"
            "accuracy_std\n4,8,2,0,0,0,0,0,0\n");
}

TEST(Report, CorrelationJson) {
  analysis::CorrelationMatrix m;
  m.labels = {"x", "y"};
  m.size = 2;
  m.values = {1.0, 0.1, 0.2, 0.9};
  m.kind = FingerprintKind::kPrnu;
  m.heldout_counts = {3, 3};
  const auto score = analysis::decorrelation_score(m);
  const auto j = correlation_json(m, score, 16);
  EXPECT_EQ(j["kind"], "prnu");
  EXPECT_EQ(j["bag_size"], 16);
  EXPECT_EQ(j["models"], nlohmann::json({"x", "y"}));
  EXPECT_EQ(j["matrix"][1][0], 0.2);
  EXPECT_EQ(j["separation"], round_g9(0.95 - 0.15));
  EXPECT_TRUE(j.contains("decorrelation_score"));
  EXPECT_EQ(j["zero_variance_substitutions"], 0);
}

TEST(Report, DendrogramJsonNestsFromRoot) {
  analysis::LabeledMatrix d;
  d.labels = {"a", "b", "c"};
  d.size = 3;
  d.values = {0, 1, 4, 1, 0, 4, 4, 4, 0};
  const auto tree = analysis::hierarchical_cluster(d);
  const auto j = dendrogram_json(tree);
  EXPECT_EQ(j["linkage"], "average");
  ASSERT_EQ(j["merges"].size(), 2u);
  EXPECT_EQ(j["merges"][0]["first"], 0);
  EXPECT_EQ(j["merges"][0]["second"], 1);
  EXPECT_EQ(j["merges"][0]["height"], 1.0);
  EXPECT_EQ(j["tree"]["id"], 4);
  EXPECT_EQ(j["tree"]["size"], 3);
  EXPECT_EQ(j["tree"]["height"], 4.0);
  const auto coords = dendrogram_coordinates_json(tree, analysis::dendrogram_coordinates(tree));
  EXPECT_EQ(coords["segments"].size(), 2u);
  EXPECT_EQ(coords["leaf_order"].size(), 3u);
}

TEST(Report, AttributionJson) {
  analysis::CrossValidationResult cv;
  cv.folds = {{.fold = 0, .test_size = 4, .accuracy = 1.0, .macro_auc = 1.0}};
  cv.accuracy_mean = 1.0;
  cv.pooled.confusion = {{2, 0}, {0, 2}};
  cv.pooled.predicted = {0, 0, 1, 1};
  cv.pooled.excluded_classes = {1};
  const auto j = attribution_json(cv, {"m0", "real"}, FingerprintKind::kEncoder, 32);
  EXPECT_EQ(j["kind"], "encoder");
  EXPECT_EQ(j["bag_size"], 32);
  EXPECT_EQ(j["folds"][0]["test_size"], 4);
  EXPECT_EQ(j["pooled"]["excluded_classes"], nlohmann::json({"real"}));
  for (const char* key : {"classes", "accuracy_mean", "accuracy_std", "auc_mean", "auc_std"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
}

TEST(Report, JsonFileRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / ("gmfp_report_" + std::to_string(::getpid()) + ".json");
  const nlohmann::json doc = {{"a", 1}, {"b", {1.5, 2.5}}};
  write_json(path, doc);
  EXPECT_EQ(io::read_file(path), doc.dump(2) + "\n");
  EXPECT_EQ(read_json(path), doc);
  io::write_file_atomic(path, "{not json");
  EXPECT_THROW(read_json(path), io::FormatError);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace gmfp::report
