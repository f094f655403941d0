#include <gtest/gtest.h>
#include <unistd.h>

#include <filesystem>

#include "gmfp/checkpoint.hpp"
#include "gmfp/pipeline.hpp"
#include "gmfp/report.hpp"

namespace gmfp::pipeline {
namespace {

RunConfig small_config() {
  RunConfig c;
  c.families = 2;
  c.models_per_family = 2;
  c.height = 16;
  c.width = 16;
  c.images_per_model = 64;
  c.bag_size = "4";
  c.bags = "8";
  c.models_per_batch = 2;
  c.bags_per_batch = 2;
  c.embedding_dim = 8;
  c.epochs = 1;
  c.folds = 2;
  c.classifier_epochs = 5;
  c.attribute_bags = 4;
  c.trials = 2;
  c.eval_bags = 2;
  return c;
}

class PipelineTest : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() /
            ("gmfp_pipeline_" + std::to_string(::getpid()) + "_" +
             ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  void TearDown() override { fs::remove_all(root_); }

  fs::path root_;
};

TEST_F(PipelineTest, StagesWriteTheirArtifacts) {
  auto config = small_config();
  const auto data_dir = root_ / "data";
  const auto generated = run_generate(config, data_dir, false);
  EXPECT_EQ(generated.image_counts, (std::vector<std::size_t>{64, 64, 64, 64, 64}));
  EXPECT_TRUE(fs::exists(data_dir / "generate.cfg"));
  EXPECT_THROW(run_generate(config, data_dir, false), std::runtime_error);
  EXPECT_NO_THROW(run_generate(config, data_dir, true));

  const auto data = load_prepared(data_dir);
  EXPECT_EQ(data.models.num_models(), 4u);
  EXPECT_EQ(data.models.train[0].size(), 48u);
  EXPECT_EQ(data.models.heldout[0].size(), 16u);
  EXPECT_EQ(data.real_heldout.size(), 16u);
  EXPECT_EQ(data.family_labels(), (std::vector<std::size_t>{0, 0, 1, 1}));

  const auto out = root_ / "out";
  fs::create_directories(out);
  const auto trained = run_train(config, data, out);
  EXPECT_TRUE(fs::exists(out / kCheckpointFile));
  EXPECT_TRUE(fs::exists(out / kLossFile));
  EXPECT_EQ(trained.training.steps.size(), 8u);  // 4 models * 8 bags / (2 * 2) per batch

  config.checkpoint = (out / kCheckpointFile).string();
  const auto fp = run_fingerprint(config, data, out);
  EXPECT_EQ(fp.fingerprints.size(), 4u);
  EXPECT_EQ(fp.correlation.size, 4u);
  EXPECT_EQ(report::read_json(out / kFingerprintsFile)[0]["kind"], "encoder");

  const auto attributed = run_attribute(config, data, out);
  EXPECT_EQ(attributed.classes.back(), kRealClassId);
  EXPECT_EQ(attributed.cv.pooled.predicted.size(), 5u * 4u);

  const auto clustered = run_cluster(config, data, out);
  EXPECT_EQ(clustered.dendrogram.merges.size(), 3u);
  EXPECT_EQ(report::read_json(out / kDendrogramFile)["family_cut"]["clusters"], 2);

  config.bag_size = "1,4";
  const auto rows = run_ablate(config, data, out);
  EXPECT_EQ(rows.size(), 2u);

  const auto summary = run_report(config, out);
  EXPECT_EQ(summary["files"].size(), 6u);
  EXPECT_EQ(summary["ablation"]["rows"], 2);
  EXPECT_TRUE(fs::exists(out / kReportFile));
}

TEST_F(PipelineTest, PrnuBaseline) {
  auto config = small_config();
  config.baseline = "prnu";
  run_generate(config, root_ / "data", false);
  const auto data = load_prepared(root_ / "data");
  const auto fp = run_fingerprint(config, data, root_);
  EXPECT_EQ(fp.fingerprints[0].kind, FingerprintKind::kPrnu);
  EXPECT_EQ(fp.fingerprints[0].vector.size(), 256u);
  const auto fp_json = report::read_json(root_ / kFingerprintsFile);
  EXPECT_EQ(fp_json[0]["kind"], "prnu");
  EXPECT_EQ(fp_json[0]["height"], 16);
  run_attribute(config, data, root_);
  EXPECT_EQ(report::read_json(root_ / kAttributionFile)["kind"], "prnu");
  // The ablation sweeps encoder embeddings only.
  try {
    run_ablate(config, data, root_);
    FAIL() << "expected a kind mismatch";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("kind mismatch"), std::string::npos);
  }
}

TEST_F(PipelineTest, MissingCheckpoint) {
  auto config = small_config();
  run_generate(config, root_ / "data", false);
  const auto data = load_prepared(root_ / "data");
  EXPECT_THROW(run_fingerprint(config, data, root_), std::runtime_error);
  config.checkpoint = (root_ / "nope.ffgr").string();
  EXPECT_THROW(run_cluster(config, data, root_), std::runtime_error);
  EXPECT_THROW(run_report(config, root_ / "data"), std::runtime_error);
}

TEST(ConsecutiveBags, Examples) {
  const auto bags = consecutive_bags(10, 3, 100);
  ASSERT_EQ(bags.size(), 3u);
  EXPECT_EQ(bags[1], (std::vector<std::size_t>{3, 4, 5}));
  EXPECT_EQ(consecutive_bags(10, 3, 2).size(), 2u);
  EXPECT_THROW(consecutive_bags(10, 0, 1), std::invalid_argument);
  EXPECT_THROW(consecutive_bags(10, 11, 1), std::invalid_argument);
}

}  // namespace
}  // namespace gmfp::pipeline
