#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace gmfp {

/// Single-channel row-major raster.
template <typename T>
struct Raster {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<T> pixels;

  Raster() = default;
  Raster(std::size_t h, std::size_t w, T fill = T(0)) : height(h), width(w), pixels(h * w, fill) {}

  std::size_t size() const { return pixels.size(); }
  T& at(std::size_t y, std::size_t x) { return pixels[y * width + x]; }
  const T& at(std::size_t y, std::size_t x) const { return pixels[y * width + x]; }
  bool same_shape(const Raster& other) const {
    return height == other.height && width == other.width;
  }

  friend bool operator==(const Raster&, const Raster&) = default;
};

/// Sample or residual; pixel values of generated samples lie in [0,1].
using Image = Raster<float>;
/// Double-precision raster for templates and estimators.
using Field = Raster<double>;

inline void require_same_shape(const Image& a, const Image& b, const char* where) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument(std::string(where) + ": image shape " + std::to_string(a.height) +
                                "x" + std::to_string(a.width) + " differs from " +
                                std::to_string(b.height) + "x" + std::to_string(b.width));
  }
}

}  // namespace gmfp
