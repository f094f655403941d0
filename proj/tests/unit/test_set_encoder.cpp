#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "encoder_instances.hpp"
#include "gradcheck.hpp"
#include "gmfp/contrastive.hpp"
#include "gmfp/set_encoder.hpp"

namespace gmfp {
namespace {

Bag bag_of(std::vector<Image> images) {
  Bag bag;
  bag.images = std::move(images);
  return bag;
}

EncoderConfig small_config() {
  EncoderConfig config;
  config.height = 16;
  config.width = 16;
  config.channels = {4, 8};
  config.embedding_dim = 8;
  return config;
}

Image random_image(std::size_t h, std::size_t w, std::mt19937_64& rng) {
  std::uniform_real_distribution<float> unit(0.0f, 1.0f);
  Image image(h, w);
  for (float& v : image.pixels) v = unit(rng);
  return image;
}

TEST(SetEncode, PermutationInvariantBitwise) {
  const SetEncoder<float> encoder(small_config(), 1);
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    Bag bag;
    const std::size_t n = 1 + trial % 7;
    for (std::size_t i = 0; i < n; ++i) bag.images.push_back(random_image(16, 16, rng));
    const auto reference = set_encode(encoder, bag).z;
    std::shuffle(bag.images.begin(), bag.images.end(), rng);
    EXPECT_EQ(set_encode(encoder, bag).z, reference);
  }
}

TEST(SetEncode, SwappedPair) {
  const SetEncoder<float> encoder(small_config(), 3);
  std::mt19937_64 rng(4);
  const Image a = random_image(16, 16, rng), b = random_image(16, 16, rng);
  EXPECT_EQ(set_encode(encoder, bag_of({a, b})).z, set_encode(encoder, bag_of({b, a})).z);
}

TEST(SetEncode, DuplicatesMatchSingleton) {
  const SetEncoder<float> encoder(small_config(), 5);
  std::mt19937_64 rng(6);
  const Image a = random_image(16, 16, rng);
  EXPECT_EQ(set_encode(encoder, bag_of({a, a})).z, set_encode(encoder, bag_of({a})).z);
}

TEST(SetEncode, ZeroImagesFiniteAndReproducible) {
  const auto z1 = set_encode(SetEncoder<float>(EncoderConfig{}, 7), bag_of({Image(32, 32), Image(32, 32)})).z;
  const auto z2 = set_encode(SetEncoder<float>(EncoderConfig{}, 7), bag_of({Image(32, 32), Image(32, 32)})).z;
  ASSERT_EQ(z1.size(), 64u);
  for (const float v : z1) EXPECT_TRUE(std::isfinite(v));
  EXPECT_EQ(z1, z2);
}

TEST(SetEncode, EmbeddingLiesOnConfiguredSphere) {
  const SetEncoder<float> encoder(small_config(), 8);
  std::mt19937_64 rng(9);
  const auto z = set_encode(encoder, bag_of({random_image(16, 16, rng)})).z;
  double norm = 0;
  for (const float v : z) norm += double(v) * v;
  EXPECT_NEAR(std::sqrt(norm), 3.0, 1e-5);
}

TEST(SetEncode, ShapeMismatchAndEmptyBag) {
  const SetEncoder<float> encoder(small_config(), 10);
  EXPECT_THROW(set_encode(encoder, bag_of({Image(8, 8)})), std::invalid_argument);
  EXPECT_THROW(set_encode(encoder, Bag{}), std::invalid_argument);
}

TEST(SetEncode, SumPoolingScalesWithBagSize) {
  auto config = small_config();
  config.pooling = ad::SetPooling::kSum;
  config.embedding_radius = 0.0;
  const SetEncoder<double> encoder(config, 11);
  std::mt19937_64 rng(12);
  const Image a = random_image(16, 16, rng);
  const std::vector<Image> one{residual(a)}, two{residual(a), residual(a)};
  const auto f1 = encoder.pool(ad::reshape(encoder.image_features(stack_images<double>(one)), {1, 1, 8}));
  const auto f2 = encoder.pool(ad::reshape(encoder.image_features(stack_images<double>(two)), {1, 2, 8}));
  for (std::size_t i = 0; i < 8; ++i) EXPECT_NEAR(f2.data()[i], 2 * f1.data()[i], 1e-12);
}

TEST(SetEncoder, ParameterLayout) {
  const auto layout = SetEncoder<float>::parameter_layout(EncoderConfig{});
  ASSERT_EQ(layout.size(), 2 * 3 + 6u);
  EXPECT_EQ(layout[0].second, (ad::Shape{8, 1, 3, 3}));
  EXPECT_EQ(layout[2].second, (ad::Shape{16, 8, 3, 3}));
  EXPECT_EQ(layout[4].second, (ad::Shape{32, 16, 3, 3}));
  const SetEncoder<float> encoder(EncoderConfig{}, 0);
  for (std::size_t i = 0; i < layout.size(); ++i) EXPECT_EQ(encoder.parameters()[i].tensor.shape(), layout[i].second);
}

TEST(SetEncoder, AdoptingWrongShapesFails) {
  auto params = SetEncoder<float>(small_config(), 0).parameters();
  params.pop_back();
  EXPECT_THROW(SetEncoder<float>(small_config(), params), std::invalid_argument);
}

TEST(PairDistance, Examples) {
  const std::vector<float> origin{0, 0}, p{3, 4};
  EXPECT_EQ(pair_distance(origin, origin), 0.0);
  EXPECT_EQ(pair_distance(origin, p), 25.0);
  std::mt19937_64 rng(13);
  std::normal_distribution<float> gauss;
  for (int k = 0; k < 20; ++k) {
    std::vector<float> a(9), b(9);
    for (auto& v : a) v = gauss(rng);
    for (auto& v : b) v = gauss(rng);
    EXPECT_EQ(pair_distance(a, b), pair_distance(b, a));
    EXPECT_GE(pair_distance(a, b), 0.0);
  }
  EXPECT_THROW(pair_distance(origin, std::vector<float>{1, 2, 3}), std::invalid_argument);
}

// Gradients of the whole encoder (every layer's parameters and the input)
// through the contrastive loss, in double precision.
class EncoderGradient : public ::testing::TestWithParam<int> {};

TEST_P(EncoderGradient, MatchesFiniteDifferences) {
  const auto instance = test::encoder_instance(GetParam());
  const std::vector<std::size_t> labels{0, 0, 1, 1};
  std::vector<test::TensorD> leaves{instance.input};
  for (const auto& p : instance.encoder.parameters()) leaves.push_back(p.tensor);
  const double error = test::max_gradient_error(leaves, [&](const std::vector<test::TensorD>& l) {
    return contrastive_batch_loss(instance.encoder.forward(l[0], 4), labels);
  });
  EXPECT_LE(error, test::kTolerance);
}

INSTANTIATE_TEST_SUITE_P(RandomInstances, EncoderGradient, ::testing::Range(0, 20));

}  // namespace
}  // namespace gmfp
