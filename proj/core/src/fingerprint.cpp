#include "gmfp/fingerprint.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>

namespace gmfp {

const char* to_string(FingerprintKind kind) {
  return kind == FingerprintKind::kEncoder ? "encoder" : "prnu";
}

FingerprintKind parse_fingerprint_kind(const std::string& name) {
  if (name == "encoder") return FingerprintKind::kEncoder;
  if (name == "prnu") return FingerprintKind::kPrnu;
  throw std::invalid_argument("unknown fingerprint kind '" + name + "' (expected encoder or prnu)");
}

Image median3x3(const Image& image) {
  const std::size_t h = image.height, w = image.width;
  Image out(h, w);
  std::array<float, 9> window{};
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      std::size_t k = 0;
      for (int dy = -1; dy <= 1; ++dy) {
        const std::size_t yy = std::clamp<std::ptrdiff_t>(std::ptrdiff_t(y) + dy, 0, std::ptrdiff_t(h) - 1);
        for (int dx = -1; dx <= 1; ++dx) {
          const std::size_t xx = std::clamp<std::ptrdiff_t>(std::ptrdiff_t(x) + dx, 0, std::ptrdiff_t(w) - 1);
          window[k++] = image.at(yy, xx);
        }
      }
      std::nth_element(window.begin(), window.begin() + 4, window.end());
      out.at(y, x) = window[4];
    }
  }
  return out;
}

Image residual(const Image& image) {
  if (image.height < 3 || image.width < 3) {
    throw std::invalid_argument("residual: image must be at least 3x3");
  }
  Image out = median3x3(image);
  double mean = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.pixels[i] = image.pixels[i] - out.pixels[i];
    mean += out.pixels[i];
  }
  mean /= double(out.size());
  for (float& v : out.pixels) v = static_cast<float>(v - mean);
  return out;
}

ModelFingerprint prnu_fingerprint_from_residuals(std::span<const Image> residuals,
                                                 std::string source_id) {
  if (residuals.empty()) throw std::invalid_argument("prnu_fingerprint: no images");
  const auto& first = residuals.front();
  std::vector<double> acc(first.size(), 0.0);
  for (const auto& r : residuals) {
    require_same_shape(first, r, "prnu_fingerprint");
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += r.pixels[i];
  }
  for (double& v : acc) v /= double(residuals.size());
  ModelFingerprint fp;
  fp.source_id = std::move(source_id);
  fp.kind = FingerprintKind::kPrnu;
  fp.vector = std::move(acc);
  fp.height = first.height;
  fp.width = first.width;
  fp.num_bags = residuals.size();
  return fp;
}

ModelFingerprint prnu_fingerprint(std::span<const Image> images, std::string source_id) {
  if (images.empty()) throw std::invalid_argument("prnu_fingerprint: no images");
  std::vector<Image> residuals;
  residuals.reserve(images.size());
  for (const auto& image : images) residuals.push_back(residual(image));
  return prnu_fingerprint_from_residuals(residuals, std::move(source_id));
}

}  // namespace gmfp
