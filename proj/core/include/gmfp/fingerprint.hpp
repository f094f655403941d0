#pragma once

// Fingerprint types, residual extraction and the residual-averaging (PRNU)
// baseline.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gmfp/image.hpp"

namespace gmfp {

/// Unordered set of same-shaped images from one source.
struct Bag {
  std::vector<Image> images;
  std::string source_id;
  std::size_t bag_index = 0;
};

struct Embedding {
  std::vector<float> z;
  std::optional<std::string> source_id;
};

enum class FingerprintKind { kEncoder, kPrnu };

const char* to_string(FingerprintKind kind);
FingerprintKind parse_fingerprint_kind(const std::string& name);

struct ModelFingerprint {
  std::string source_id;
  FingerprintKind kind = FingerprintKind::kEncoder;
  /// D values for encoder fingerprints, height*width raster for PRNU ones.
  std::vector<double> vector;
  std::size_t height = 0;  // PRNU only
  std::size_t width = 0;   // PRNU only
  std::size_t num_bags = 1;
};

/// 3x3 median with replicated borders.
Image median3x3(const Image& image);

/// image - median3x3(image), then shifted to zero mean. Requires H, W >= 3.
Image residual(const Image& image);

/// Pixelwise mean of the residuals of `images`.
ModelFingerprint prnu_fingerprint(std::span<const Image> images, std::string source_id = {});

/// Same estimator when residuals are already available.
ModelFingerprint prnu_fingerprint_from_residuals(std::span<const Image> residuals,
                                                 std::string source_id = {});

}  // namespace gmfp
