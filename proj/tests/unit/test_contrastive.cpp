#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gradcheck.hpp"
#include "gmfp/contrastive.hpp"

namespace gmfp {
namespace {

using test::TensorD;

double loss_of(std::vector<double> coords, std::size_t dim, std::vector<std::size_t> labels,
               std::vector<std::size_t> anchors = {}) {
  const std::size_t rows = coords.size() / dim;
  const auto z = TensorD::from({rows, dim}, std::move(coords));
  return contrastive_batch_loss(z, labels, anchors).item();
}

TEST(ContrastiveLoss, FarNegative) {
  const double l = loss_of({0, 0, 0, 0, 3, 4}, 2, {0, 0, 1}, {0});
  EXPECT_NEAR(l, std::log1p(std::exp(-25.0)), 1e-14);
  EXPECT_NEAR(l, 1.4e-11, 0.05e-11);
}

TEST(ContrastiveLoss, EquidistantPositiveAndNegative) {
  EXPECT_NEAR(loss_of({0, 0, 1, 0, 0, 1}, 2, {0, 0, 1}, {0}), std::log(2.0), 1e-12);
}

TEST(ContrastiveLoss, NoNegativesGivesZero) {
  EXPECT_EQ(loss_of({0, 0, 5, -7}, 2, {3, 3}), 0.0);
}

TEST(ContrastiveLoss, MeanOverAnchors) {
  // Anchors 0 and 1 see the same configuration mirrored.
  const double both = loss_of({0, 0, 1, 0, 0, 1, 1, 1}, 2, {0, 0, 1, 1});
  const double first = loss_of({0, 0, 1, 0, 0, 1, 1, 1}, 2, {0, 0, 1, 1}, {0});
  EXPECT_NEAR(both, first, 1e-12);
}

TEST(ContrastiveLoss, CompositionErrors) {
  try {
    loss_of({0, 0, 1, 1, 2, 2}, 2, {0, 0, 1});
    FAIL() << "expected an error";
  } catch (const std::invalid_argument& e) {
    EXPECT_STREQ(e.what(), "batch composition violates positives-per-anchor contract");
  }
  EXPECT_THROW(loss_of({0, 0}, 2, {0}), std::invalid_argument);
  EXPECT_THROW(loss_of({0, 0, 1, 1}, 2, {0}), std::invalid_argument);
  EXPECT_THROW(contrastive_batch_loss(TensorD::zeros({4}), std::vector<std::size_t>{0, 0, 0, 0}), ad::ShapeError);
}

TEST(ContrastiveLoss, NonNegativeOnRandomBatches) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> gauss(0.0, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> coords(8 * 3);
    for (double& v : coords) v = gauss(rng);
    const double l = loss_of(coords, 3, {0, 0, 1, 1, 2, 2, 3, 3});
    EXPECT_GE(l, 0.0);
    EXPECT_TRUE(std::isfinite(l));
  }
}

TEST(ContrastiveLoss, ClipBoundsLargeDistances) {
  // All negatives beyond the clip behave like negatives at the clip.
  const double far = loss_of({0, 0, 1, 0, 100, 0}, 2, {0, 0, 1}, {0});
  EXPECT_NEAR(far, std::log1p(std::exp(1.0 - 50.0)), 1e-15);
}

class ContrastiveGradient : public ::testing::TestWithParam<int> {};

TEST_P(ContrastiveGradient, MatchesFiniteDifferences) {
  std::mt19937_64 rng(GetParam() + 17);
  auto z = test::random_leaf({6, 4}, rng);
  const std::vector<std::size_t> labels{0, 1, 2, 0, 1, 2};
  const double error =
      test::max_gradient_error({z}, [&](const auto& l) { return contrastive_batch_loss(l[0], labels); });
  EXPECT_LE(error, test::kTolerance);
}

INSTANTIATE_TEST_SUITE_P(RandomInstances, ContrastiveGradient, ::testing::Range(0, 20));

}  // namespace
}  // namespace gmfp
