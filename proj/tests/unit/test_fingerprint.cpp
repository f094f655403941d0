#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gmfp/fingerprint.hpp"
#include "gmfp/synth_zoo.hpp"

namespace gmfp {
namespace {

Image random_image(std::size_t h, std::size_t w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> unit(0.0f, 1.0f);
  Image image(h, w);
  for (float& v : image.pixels) v = unit(rng);
  return image;
}

TEST(Residual, ConstantImageGivesZero) {
  const Image r = residual(Image(6, 7, 0.3f));
  for (const float v : r.pixels) EXPECT_EQ(v, 0.0f);
}

TEST(Residual, CenterImpulse) {
  Image image(5, 5, 0.0f);
  image.at(2, 2) = 1.0f;
  // Every 3x3 window holds at most one non-zero pixel, so the median is 0
  // everywhere and the raw residual is the image itself.
  const Image median = median3x3(image);
  for (const float v : median.pixels) EXPECT_EQ(v, 0.0f);
  const Image r = residual(image);
  const float shift = 1.0f / 25.0f;
  for (std::size_t y = 0; y < 5; ++y) {
    for (std::size_t x = 0; x < 5; ++x) {
      EXPECT_NEAR(r.at(y, x), (y == 2 && x == 2 ? 1.0f : 0.0f) - shift, 1e-6);
    }
  }
}

TEST(Residual, MedianUsesReplicatedBorders) {
  Image image(3, 3, 0.0f);
  image.at(0, 0) = 1.0f;
  image.at(0, 1) = 1.0f;
  // Corner window with replication: rows {0,0,1} x cols {0,0,1} hold five ones.
  EXPECT_EQ(median3x3(image).at(0, 0), 1.0f);
  EXPECT_EQ(median3x3(image).at(2, 2), 0.0f);
}

TEST(Residual, InvariantToConstantShift) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Image image = random_image(9, 11, seed);
    for (float& v : image.pixels) v *= 0.5f;  // room for the shift, and exact in float
    Image shifted = image;
    for (float& v : shifted.pixels) v += 0.25f;
    const Image a = residual(image), b = residual(shifted);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a.pixels[i], b.pixels[i], 1e-6);
  }
}

TEST(Residual, ZeroMean) {
  const Image r = residual(random_image(8, 8, 3));
  double sum = 0;
  for (const float v : r.pixels) sum += v;
  EXPECT_NEAR(sum, 0.0, 1e-5);
}

TEST(Residual, TooSmall) { EXPECT_THROW(residual(Image(2, 5)), std::invalid_argument); }

TEST(Prnu, OppositeResidualsCancel) {
  Image r = random_image(4, 4, 5);
  Image neg = r;
  for (float& v : neg.pixels) v = -v;
  const std::vector<Image> residuals{r, neg};
  const auto fp = prnu_fingerprint_from_residuals(residuals, "m");
  for (const double v : fp.vector) EXPECT_NEAR(v, 0.0, 1e-12);
  EXPECT_EQ(fp.kind, FingerprintKind::kPrnu);
  EXPECT_EQ(fp.source_id, "m");
  EXPECT_EQ(fp.height, 4u);
  EXPECT_EQ(fp.width, 4u);
}

TEST(Prnu, SingleImageEqualsItsResidual) {
  const Image image = random_image(6, 6, 6);
  const std::vector<Image> one{image};
  const auto fp = prnu_fingerprint(one);
  const Image r = residual(image);
  ASSERT_EQ(fp.vector.size(), r.size());
  for (std::size_t i = 0; i < r.size(); ++i) EXPECT_EQ(fp.vector[i], double(r.pixels[i]));
}

TEST(Prnu, EmptyInput) {
  EXPECT_THROW(prnu_fingerprint(std::vector<Image>{}), std::invalid_argument);
}

TEST(Prnu, RecoversPlantedTemplate) {
  const auto manifest = zoo::build_zoo({.family_strength = 0.0, .model_strength = 0.05, .noise_sigma = 0.02});
  for (const auto& spec : manifest.models) {
    const auto fp = prnu_fingerprint(zoo::sample_images(spec, 64));
    Field raster(fp.height, fp.width);
    raster.pixels = fp.vector;
    const Field band = zoo::template_band(raster);
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < band.size(); ++i) {
      dot += band.pixels[i] * spec.model_template.pixels[i];
      na += band.pixels[i] * band.pixels[i];
      nb += spec.model_template.pixels[i] * spec.model_template.pixels[i];
    }
    EXPECT_GE(dot / std::sqrt(na * nb), 0.99) << spec.model_id;
  }
}

TEST(FingerprintKind, NamesRoundTrip) {
  EXPECT_EQ(parse_fingerprint_kind(to_string(FingerprintKind::kEncoder)), FingerprintKind::kEncoder);
  EXPECT_EQ(parse_fingerprint_kind("prnu"), FingerprintKind::kPrnu);
  EXPECT_THROW(parse_fingerprint_kind("fft"), std::invalid_argument);
}

}  // namespace
}  // namespace gmfp
