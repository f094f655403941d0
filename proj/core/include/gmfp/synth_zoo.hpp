#pragma once

// Synthetic population of "generative models". Each model stamps a fixed
// high-frequency template (plus one shared by its family) onto smooth random
// base images, so every model leaves a known residual fingerprint.

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "gmfp/image.hpp"

namespace gmfp::zoo {

inline constexpr std::uint16_t kManifestFormatVersion = 1;
inline constexpr const char* kRealModelId = "real";

struct SyntheticModelSpec {
  std::string model_id;
  std::string family_id;
  Field model_template;   // zero-mean, unit RMS
  Field family_template;  // zero-mean, unit RMS (all zero for the real class)
  double model_strength = 0.0;   // beta
  double family_strength = 0.0;  // alpha
  double noise_sigma = 0.0;      // sigma
  std::uint64_t seed = 0;
};

struct ZooConfig {
  std::size_t num_families = 3;
  std::size_t models_per_family = 4;
  std::size_t height = 32;
  std::size_t width = 32;
  std::size_t images_per_model = 2048;
  double family_strength = 0.02;
  double model_strength = 0.05;
  double noise_sigma = 0.02;
  std::uint64_t seed = 0;
};

struct ZooManifest {
  std::vector<SyntheticModelSpec> models;
  /// Un-stamped base distribution (alpha = beta = 0), the "Real" class.
  SyntheticModelSpec real;
  ZooConfig config;
  std::uint16_t format_version = kManifestFormatVersion;

  std::size_t height() const { return config.height; }
  std::size_t width() const { return config.width; }
};

/// Deterministic 64-bit seed derivation (splitmix64 finalizer over the pair).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Builds templates for num_families x models_per_family models. Throws
/// std::invalid_argument when the configuration is infeasible.
ZooManifest build_zoo(const ZooConfig& config);

/// Projection onto the template frequency band, the high-pass used to build
/// every template.
Field template_band(const Field& field);

/// Smooth random field with values spanning [0.2, 0.8].
Field sample_base(std::size_t height, std::size_t width, std::mt19937_64& rng);

/// clamp(base + alpha*family + beta*model + noise, 0, 1).
Image stamp(const SyntheticModelSpec& spec, const Field& base, std::mt19937_64& rng);

/// Draws a base from rng and stamps it.
Image sample_image(const SyntheticModelSpec& spec, std::mt19937_64& rng);

/// The first `count` images of the model's own deterministic stream.
std::vector<Image> sample_images(const SyntheticModelSpec& spec, std::size_t count);

struct GeneratedDataset {
  std::filesystem::path manifest_path;
  std::vector<std::filesystem::path> archives;  // models in manifest order, then real
};

/// Writes one archive per model plus the real class, and manifest.json.
/// Every archive is re-read to verify its record count.
GeneratedDataset generate_dataset(const ZooManifest& manifest, const std::filesystem::path& out_dir);

}  // namespace gmfp::zoo
