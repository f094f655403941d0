#include <gtest/gtest.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "gmfp/dataset_io.hpp"
#include "gmfp/synth_zoo.hpp"

namespace gmfp {
namespace {

namespace fs = std::filesystem;

double dot(const Field& a, const Field& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.pixels[i] * b.pixels[i];
  return s;
}

double cosine(const Field& a, const Field& b) { return dot(a, b) / std::sqrt(dot(a, a) * dot(b, b)); }

void expect_normalized(const Field& t) {
  double mean = 0, energy = 0;
  for (const double v : t.pixels) mean += v;
  mean /= double(t.size());
  for (const double v : t.pixels) energy += v * v;
  EXPECT_NEAR(mean, 0.0, 1e-6);
  EXPECT_NEAR(std::sqrt(energy / double(t.size())), 1.0, 1e-6);
}

fs::path temp_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("gmfp_zoo_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(BuildZoo, SingleModelIsNormalized) {
  const auto manifest = zoo::build_zoo({.num_families = 1, .models_per_family = 1});
  ASSERT_EQ(manifest.models.size(), 1u);
  expect_normalized(manifest.models[0].model_template);
  expect_normalized(manifest.models[0].family_template);
}

TEST(BuildZoo, DefaultTemplatesAreNearOrthogonal) {
  const auto manifest = zoo::build_zoo({});
  ASSERT_EQ(manifest.models.size(), 12u);
  std::set<std::string> ids;
  for (std::size_t i = 0; i < 12; ++i) {
    ids.insert(manifest.models[i].model_id);
    expect_normalized(manifest.models[i].model_template);
    for (std::size_t j = i + 1; j < 12; ++j) {
      EXPECT_LE(std::abs(cosine(manifest.models[i].model_template, manifest.models[j].model_template)), 0.1);
    }
  }
  EXPECT_EQ(ids.size(), 12u);
  std::map<std::string, int> family_sizes;
  for (const auto& m : manifest.models) ++family_sizes[m.family_id];
  EXPECT_EQ(family_sizes.size(), 3u);
  for (const auto& [family, size] : family_sizes) EXPECT_GE(size, 2);
}

TEST(BuildZoo, TemplatesLieInTheTemplateBand) {
  const auto manifest = zoo::build_zoo({.num_families = 2, .models_per_family = 2});
  for (const auto& m : manifest.models) {
    const Field projected = zoo::template_band(m.model_template);
    for (std::size_t i = 0; i < projected.size(); ++i) EXPECT_NEAR(projected.pixels[i], m.model_template.pixels[i], 1e-9);
  }
}

TEST(BuildZoo, Deterministic) {
  const auto a = zoo::build_zoo({.seed = 5});
  const auto b = zoo::build_zoo({.seed = 5});
  ASSERT_EQ(a.models.size(), b.models.size());
  for (std::size_t i = 0; i < a.models.size(); ++i) {
    EXPECT_EQ(a.models[i].model_id, b.models[i].model_id);
    EXPECT_EQ(a.models[i].model_template, b.models[i].model_template);
    EXPECT_EQ(a.models[i].seed, b.models[i].seed);
  }
  EXPECT_NE(a.models[0].model_template, zoo::build_zoo({.seed = 6}).models[0].model_template);
}

TEST(BuildZoo, InfeasibleConfigurations) {
  EXPECT_THROW(zoo::build_zoo({.num_families = 0}), std::invalid_argument);
  EXPECT_THROW(zoo::build_zoo({.height = 4, .width = 4}), std::invalid_argument);
  // More templates than pixels cannot be orthogonalized.
  EXPECT_THROW(zoo::build_zoo({.num_families = 10, .models_per_family = 10, .height = 8, .width = 8}),
               std::invalid_argument);
}

TEST(Stamp, DegenerateStampReturnsBase) {
  auto spec = zoo::build_zoo({.num_families = 1, .models_per_family = 1}).models[0];
  spec.family_strength = spec.model_strength = spec.noise_sigma = 0.0;
  std::mt19937_64 rng(1);
  const Field base = zoo::sample_base(32, 32, rng);
  const Image image = zoo::stamp(spec, base, rng);
  for (std::size_t i = 0; i < base.size(); ++i) EXPECT_EQ(image.pixels[i], static_cast<float>(base.pixels[i]));
}

TEST(Stamp, ModelTemplateRecoverableFromConstantBase) {
  auto spec = zoo::build_zoo({.num_families = 1, .models_per_family = 1}).models[0];
  spec.family_strength = 0.0;
  spec.model_strength = 0.05;
  spec.noise_sigma = 0.0;
  std::mt19937_64 rng(2);
  const Image image = zoo::stamp(spec, Field(32, 32, 0.5), rng);
  for (std::size_t i = 0; i < image.size(); ++i) {
    EXPECT_NEAR(image.pixels[i] - 0.5, 0.05 * spec.model_template.pixels[i], 1e-6);
  }
}

TEST(Stamp, ClampsToUnitInterval) {
  auto spec = zoo::build_zoo({.num_families = 1, .models_per_family = 1}).models[0];
  spec.model_strength = 5.0;
  std::mt19937_64 rng(3);
  const Image image = zoo::stamp(spec, Field(32, 32, 0.8), rng);
  for (const float v : image.pixels) {
    EXPECT_LE(v, 1.0f);
    EXPECT_GE(v, 0.0f);
  }
}

TEST(Stamp, ShapeMismatch) {
  const auto spec = zoo::build_zoo({.num_families = 1, .models_per_family = 1}).models[0];
  std::mt19937_64 rng(4);
  EXPECT_THROW(zoo::stamp(spec, Field(16, 32, 0.5), rng), std::invalid_argument);
}

TEST(SampleBase, SpansExpectedRange) {
  std::mt19937_64 rng(9);
  for (int k = 0; k < 10; ++k) {
    const Field base = zoo::sample_base(32, 32, rng);
    const auto [lo, hi] = std::minmax_element(base.pixels.begin(), base.pixels.end());
    EXPECT_NEAR(*lo, 0.2, 1e-12);
    EXPECT_NEAR(*hi, 0.8, 1e-12);
  }
}

TEST(SampleImages, PixelsInUnitIntervalAndDeterministic) {
  const auto manifest = zoo::build_zoo({});
  const auto a = zoo::sample_images(manifest.models[3], 20);
  EXPECT_EQ(a, zoo::sample_images(manifest.models[3], 20));
  for (const auto& image : a) {
    for (const float v : image.pixels) {
      EXPECT_GE(v, 0.0f);
      EXPECT_LE(v, 1.0f);
    }
  }
}

TEST(FamilySignal, IntraFamilyStampsCorrelateMore) {
  const auto manifest = zoo::build_zoo({});
  auto stamped = [](const zoo::SyntheticModelSpec& s) {
    Field f(s.model_template.height, s.model_template.width);
    for (std::size_t i = 0; i < f.size(); ++i) {
      f.pixels[i] = s.family_strength * s.family_template.pixels[i] + s.model_strength * s.model_template.pixels[i];
    }
    return f;
  };
  const double alpha = 0.02, beta = 0.05;
  const double expected_intra = alpha * alpha / (alpha * alpha + beta * beta);
  double min_intra = 1.0, max_inter = 0.0;
  for (std::size_t i = 0; i < 12; ++i) {
    for (std::size_t j = i + 1; j < 12; ++j) {
      const double c = cosine(stamped(manifest.models[i]), stamped(manifest.models[j]));
      if (manifest.models[i].family_id == manifest.models[j].family_id) {
        EXPECT_NEAR(c, expected_intra, 1e-3);
        min_intra = std::min(min_intra, c);
      } else {
        max_inter = std::max(max_inter, std::abs(c));
      }
    }
  }
  EXPECT_GT(min_intra, max_inter);
}

TEST(GenerateDataset, CountsAndRegeneration) {
  const auto manifest = zoo::build_zoo({.num_families = 1, .models_per_family = 2, .images_per_model = 10});
  const auto dir = temp_dir("gen");
  const auto first = zoo::generate_dataset(manifest, dir / "a");
  ASSERT_EQ(first.archives.size(), 3u);  // two models and the real class
  for (const auto& path : first.archives) EXPECT_EQ(io::read_archive_header(path).count, 10u);
  const auto second = zoo::generate_dataset(manifest, dir / "b");
  for (std::size_t i = 0; i < first.archives.size(); ++i) {
    EXPECT_EQ(slurp(first.archives[i]), slurp(second.archives[i]));
  }
  EXPECT_EQ(slurp(first.manifest_path), slurp(second.manifest_path));
  fs::remove_all(dir);
}

TEST(GenerateDataset, EmptyDatasetIsAnError) {
  const auto manifest = zoo::build_zoo({.num_families = 1, .models_per_family = 1, .images_per_model = 0});
  const auto dir = temp_dir("empty");
  try {
    zoo::generate_dataset(manifest, dir);
    FAIL() << "expected an error";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("empty dataset"), std::string::npos);
  }
  fs::remove_all(dir);
}

TEST(DeriveSeed, DistinctStreams) {
  EXPECT_NE(zoo::derive_seed(0, 0), zoo::derive_seed(0, 1));
  EXPECT_NE(zoo::derive_seed(0, 0), zoo::derive_seed(1, 0));
  EXPECT_EQ(zoo::derive_seed(42, 7), zoo::derive_seed(42, 7));
}

}  // namespace
}  // namespace gmfp
