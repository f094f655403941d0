#include "gmfp/synth_zoo.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <memory>
#include <stdexcept>

#include "gmfp/dataset_io.hpp"

namespace gmfp::zoo {

namespace {

// Keeps the DFT components of a real field for which keep(fy, fx) holds,
// where fy, fx are absolute frequencies in cycles per pixel (0 ... 0.5).
class FrequencyFilter {
 public:
  using Mask = std::function<bool(double fy, double fx)>;

  FrequencyFilter(std::size_t height, std::size_t width, const Mask& keep)
      : height_(height), width_(width), mask_(height * width) {
    buffer_.reset(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * height * width)));
    if (!buffer_) throw std::bad_alloc();
    const int h = static_cast<int>(height), w = static_cast<int>(width);
    forward_ = fftw_plan_dft_2d(h, w, buffer_.get(), buffer_.get(), FFTW_FORWARD, FFTW_ESTIMATE);
    inverse_ = fftw_plan_dft_2d(h, w, buffer_.get(), buffer_.get(), FFTW_BACKWARD, FFTW_ESTIMATE);
    for (std::size_t ky = 0; ky < height; ++ky) {
      const double fy = double(std::min(ky, height - ky)) / double(height);
      for (std::size_t kx = 0; kx < width; ++kx) {
        const double fx = double(std::min(kx, width - kx)) / double(width);
        mask_[ky * width + kx] = keep(fy, fx);
      }
    }
  }
  ~FrequencyFilter() {
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(inverse_);
  }
  FrequencyFilter(const FrequencyFilter&) = delete;
  FrequencyFilter& operator=(const FrequencyFilter&) = delete;

  void apply(Field& field) {
    const std::size_t n = height_ * width_;
    fftw_complex* data = buffer_.get();
    for (std::size_t i = 0; i < n; ++i) {
      data[i][0] = field.pixels[i];
      data[i][1] = 0.0;
    }
    fftw_execute(forward_);
    for (std::size_t i = 0; i < n; ++i) {
      if (!mask_[i]) data[i][0] = data[i][1] = 0.0;
    }
    fftw_execute(inverse_);
    for (std::size_t i = 0; i < n; ++i) field.pixels[i] = data[i][0] / double(n);
  }

 private:
  struct FftwFree {
    void operator()(fftw_complex* p) const { fftw_free(p); }
  };
  std::size_t height_, width_;
  std::vector<bool> mask_;
  std::unique_ptr<fftw_complex, FftwFree> buffer_;
  fftw_plan forward_ = nullptr;
  fftw_plan inverse_ = nullptr;
};

// Templates keep frequencies of at least 0.2 cycles per pixel along both
// axes (about the top 60% of each axis). A wider band loses too much of the
// template to the 3x3 median of the residual extractor.
constexpr double kTemplateLowCut = 0.2;
// Base fields keep at most this many cycles per image along each axis.
constexpr std::size_t kBaseCycles = 2;

FrequencyFilter::Mask high_pass_mask() {
  return [](double fy, double fx) { return std::min(fy, fx) >= kTemplateLowCut - 1e-12; };
}

FrequencyFilter& base_filter(std::size_t height, std::size_t width) {
  thread_local std::unique_ptr<FrequencyFilter> cached;
  thread_local std::size_t cached_h = 0, cached_w = 0;
  if (!cached || cached_h != height || cached_w != width) {
    const double hy = double(kBaseCycles) / double(height) + 1e-12;
    const double hx = double(kBaseCycles) / double(width) + 1e-12;
    cached = std::make_unique<FrequencyFilter>(
        height, width, [hy, hx](double fy, double fx) { return fy <= hy && fx <= hx; });
    cached_h = height;
    cached_w = width;
  }
  return *cached;
}

double dot(const Field& a, const Field& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.pixels[i] * b.pixels[i];
  return s;
}

void normalize_zero_mean_unit_rms(Field& field) {
  double mean = 0.0;
  for (const double v : field.pixels) mean += v;
  mean /= double(field.size());
  double energy = 0.0;
  for (double& v : field.pixels) {
    v -= mean;
    energy += v * v;
  }
  const double rms = std::sqrt(energy / double(field.size()));
  for (double& v : field.pixels) v /= rms;
}

std::string model_name(std::size_t family, std::size_t member) {
  return "f" + std::to_string(family) + "m" + std::to_string(member);
}

// Stream ids separating the independent random draws of one zoo.
constexpr std::uint64_t kTemplateStream = 0x7465'6d70'6c61'7465ULL;
constexpr std::uint64_t kModelStream = 0x6d6f'6465'6c00'0000ULL;

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

ZooManifest build_zoo(const ZooConfig& config) {
  if (config.num_families < 1 || config.models_per_family < 1) {
    throw std::invalid_argument("build_zoo: need at least one family and one model per family");
  }
  if (config.height < 8 || config.width < 8) {
    throw std::invalid_argument("build_zoo: images must be at least 8x8");
  }
  const std::size_t num_models = config.num_families * config.models_per_family;
  const std::size_t pixels = config.height * config.width;
  if (num_models > pixels) {
    throw std::invalid_argument("build_zoo: " + std::to_string(num_models) +
                                " models cannot be orthogonalized in " + std::to_string(pixels) +
                                " pixels");
  }
  if (config.family_strength < 0 || config.model_strength < 0 || config.noise_sigma < 0) {
    throw std::invalid_argument("build_zoo: strengths and noise must be non-negative");
  }

  // Family templates first, then model templates; all mutually orthogonal.
  FrequencyFilter high_pass(config.height, config.width, high_pass_mask());
  std::mt19937_64 rng(derive_seed(config.seed, kTemplateStream));
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Field> basis;
  const std::size_t total = config.num_families + num_models;
  for (std::size_t k = 0; k < total; ++k) {
    Field field(config.height, config.width);
    for (double& v : field.pixels) v = gauss(rng);
    high_pass.apply(field);
    const double original = std::sqrt(dot(field, field));
    // Modified Gram-Schmidt, two passes for numerical orthogonality.
    for (int pass = 0; pass < 2; ++pass) {
      for (const Field& prior : basis) {
        const double proj = dot(field, prior) / dot(prior, prior);
        for (std::size_t i = 0; i < field.size(); ++i) field.pixels[i] -= proj * prior.pixels[i];
      }
    }
    if (std::sqrt(dot(field, field)) < 1e-6 * original) {
      throw std::invalid_argument("build_zoo: template space exhausted after " +
                                  std::to_string(k) + " templates");
    }
    normalize_zero_mean_unit_rms(field);
    basis.push_back(std::move(field));
  }

  ZooManifest manifest;
  manifest.config = config;
  for (std::size_t f = 0; f < config.num_families; ++f) {
    for (std::size_t m = 0; m < config.models_per_family; ++m) {
      const std::size_t index = f * config.models_per_family + m;
      SyntheticModelSpec spec;
      spec.model_id = model_name(f, m);
      spec.family_id = "f" + std::to_string(f);
      spec.family_template = basis[f];
      spec.model_template = basis[config.num_families + index];
      spec.family_strength = config.family_strength;
      spec.model_strength = config.model_strength;
      spec.noise_sigma = config.noise_sigma;
      spec.seed = derive_seed(config.seed, kModelStream + index);
      manifest.models.push_back(std::move(spec));
    }
  }
  auto& real = manifest.real;
  real.model_id = kRealModelId;
  real.family_id = kRealModelId;
  real.model_template = Field(config.height, config.width);
  real.family_template = Field(config.height, config.width);
  real.noise_sigma = config.noise_sigma;
  real.seed = derive_seed(config.seed, kModelStream + num_models);
  return manifest;
}

Field template_band(const Field& field) {
  FrequencyFilter high_pass(field.height, field.width, high_pass_mask());
  Field out = field;
  high_pass.apply(out);
  return out;
}

Field sample_base(std::size_t height, std::size_t width, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Field field(height, width);
  for (double& v : field.pixels) v = gauss(rng);
  base_filter(height, width).apply(field);
  const auto [lo, hi] = std::minmax_element(field.pixels.begin(), field.pixels.end());
  const double low = *lo, span = *hi - *lo;
  for (double& v : field.pixels) v = span > 0.0 ? 0.2 + 0.6 * (v - low) / span : 0.5;
  return field;
}

Image stamp(const SyntheticModelSpec& spec, const Field& base, std::mt19937_64& rng) {
  if (!spec.model_template.same_shape(base) || !spec.family_template.same_shape(base)) {
    throw std::invalid_argument("stamp: base shape does not match the model templates");
  }
  std::normal_distribution<double> noise(0.0, 1.0);
  Image image(base.height, base.width);
  for (std::size_t i = 0; i < base.size(); ++i) {
    double v = base.pixels[i] + spec.family_strength * spec.family_template.pixels[i] +
               spec.model_strength * spec.model_template.pixels[i];
    if (spec.noise_sigma > 0.0) v += spec.noise_sigma * noise(rng);
    image.pixels[i] = static_cast<float>(std::clamp(v, 0.0, 1.0));
  }
  return image;
}

Image sample_image(const SyntheticModelSpec& spec, std::mt19937_64& rng) {
  const Field base = sample_base(spec.model_template.height, spec.model_template.width, rng);
  return stamp(spec, base, rng);
}

std::vector<Image> sample_images(const SyntheticModelSpec& spec, std::size_t count) {
  std::mt19937_64 rng(spec.seed);
  std::vector<Image> images;
  images.reserve(count);
  for (std::size_t i = 0; i < count; ++i) images.push_back(sample_image(spec, rng));
  return images;
}

GeneratedDataset generate_dataset(const ZooManifest& manifest, const std::filesystem::path& out_dir) {
  if (manifest.config.images_per_model == 0) throw std::invalid_argument("generate_dataset: empty dataset");
  std::filesystem::create_directories(out_dir);
  GeneratedDataset result;
  auto write_one = [&](const SyntheticModelSpec& spec) {
    const auto images = sample_images(spec, manifest.config.images_per_model);
    const auto path = out_dir / io::archive_filename(spec.model_id);
    io::write_archive(path, images);
    const auto header = io::read_archive_header(path);
    if (header.count != images.size()) {
      throw std::runtime_error("generate_dataset: " + path.string() + " holds " +
                               std::to_string(header.count) + " records, expected " +
                               std::to_string(images.size()));
    }
    result.archives.push_back(path);
  };
  for (const auto& spec : manifest.models) write_one(spec);
  write_one(manifest.real);
  result.manifest_path = out_dir / io::kManifestFilename;
  io::write_manifest(result.manifest_path, manifest);
  return result;
}

}  // namespace gmfp::zoo
