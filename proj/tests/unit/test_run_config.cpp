#include <gtest/gtest.h>

#include "gmfp/run_config.hpp"

namespace gmfp {
namespace {

TEST(RunConfig, FormatParseRoundTrip) {
  RunConfig config;
  config.seed = 7;
  config.alpha = 0.125;
  config.lr = 3e-4;
  config.bag_size = "1,4,16";
  config.linkage = "complete";
  config.data = "some dir/data";
  const std::string text = format_run_config(config);
  EXPECT_NE(text.find("seed=7\n"), std::string::npos);
  EXPECT_NE(text.find("bag-size=\"1,4,16\"\n"), std::string::npos);
  EXPECT_NE(text.find("data=\"some dir/data\"\n"), std::string::npos);
  EXPECT_EQ(format_run_config(parse_run_config(text)), text);
}

TEST(RunConfig, CommentsAndBlankLines) {
  const auto config = parse_run_config("# run\n\n  epochs = 3 \nbaseline=prnu\n");
  EXPECT_EQ(config.epochs, 3u);
  EXPECT_EQ(config.baseline, "prnu");
  EXPECT_EQ(config.families, 3u);
}

TEST(RunConfig, Errors) {
  EXPECT_THROW(parse_run_config("colour=blue\n"), std::invalid_argument);
  EXPECT_THROW(parse_run_config("epochs\n"), std::invalid_argument);
  EXPECT_THROW(parse_run_config("epochs=ten\n"), std::invalid_argument);
  EXPECT_THROW(parse_run_config("lr=fast\n"), std::invalid_argument);
}

TEST(RunConfig, SizeLists) {
  EXPECT_EQ(parse_size_list("1, 4,16", "bag-size"), (std::vector<std::size_t>{1, 4, 16}));
  EXPECT_THROW(parse_size_list("1,x", "bag-size"), std::invalid_argument);
  EXPECT_THROW(parse_size_list("", "bag-size"), std::invalid_argument);
  EXPECT_EQ(single_value("32", "bag-size"), 32u);
  EXPECT_THROW(single_value("1,2", "bag-size"), std::invalid_argument);
}

TEST(RunConfig, DerivedConfigs) {
  RunConfig config;
  config.families = 2;
  config.bags = "12";
  config.bags_per_batch = 3;
  config.pooling = "sum";
  config.radius = 0.0;
  config.classifier_epochs = 5;
  config.bag_size = "1,8";
  EXPECT_EQ(zoo_config(config).num_families, 2u);
  EXPECT_EQ(encoder_config(config).pooling, ad::SetPooling::kSum);
  EXPECT_EQ(encoder_config(config).embedding_radius, 0.0);
  EXPECT_EQ(classifier_config(config).epochs, 5u);
  EXPECT_EQ(ablation_config(config).bag_sizes, (std::vector<std::size_t>{1, 8}));
  EXPECT_THROW(train_config(config), std::invalid_argument);  // bag-size is a list
  config.bag_size = "8";
  EXPECT_EQ(train_config(config).bags_per_model, 12u);
  EXPECT_EQ(train_config(config).bags_per_model_per_batch, 3u);
  EXPECT_EQ(baseline_kind(config), FingerprintKind::kEncoder);
  EXPECT_THROW(parse_pooling("max"), std::invalid_argument);
}

}  // namespace
}  // namespace gmfp
