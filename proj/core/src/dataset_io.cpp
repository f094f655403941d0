#include "gmfp/dataset_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace gmfp::io {

namespace fs = std::filesystem;
using nlohmann::json;

namespace le {

void put_u8(std::string& out, std::uint8_t v) { out.push_back(static_cast<char>(v)); }

void put_u16(std::string& out, std::uint16_t v) {
  for (int i = 0; i < 2; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

void Reader::need(std::size_t n) {
  if (bytes_.size() - pos_ < n) throw FormatError(what_ + ": truncated file");
}

std::uint8_t Reader::u8() {
  need(1);
  return static_cast<std::uint8_t>(bytes_[pos_++]);
}

std::uint16_t Reader::u16() {
  need(2);
  std::uint16_t v = 0;
  for (int i = 0; i < 2; ++i) v |= std::uint16_t(std::uint8_t(bytes_[pos_++])) << (8 * i);
  return v;
}

std::uint32_t Reader::u32() {
  need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t(std::uint8_t(bytes_[pos_++])) << (8 * i);
  return v;
}

float Reader::f32() { return std::bit_cast<float>(u32()); }

void Reader::expect_magic(const char (&magic)[4]) {
  need(4);
  if (std::memcmp(bytes_.data() + pos_, magic, 4) != 0) {
    throw FormatError(what_ + ": bad magic, expected \"" + std::string(magic, 4) + "\"");
  }
  pos_ += 4;
}

}  // namespace le

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file_atomic(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string archive_filename(const std::string& model_id) { return model_id + ".ffds"; }

void write_archive(const fs::path& path, std::span<const Image> images) {
  if (images.empty()) throw std::invalid_argument("write_archive: empty dataset");
  const auto& first = images.front();
  if (first.height > 0xffff || first.width > 0xffff) {
    throw std::invalid_argument("write_archive: image extent exceeds u16");
  }
  std::string bytes;
  bytes.reserve(kArchiveHeaderBytes + images.size() * first.size() * 4);
  bytes.append(kArchiveMagic, 4);
  le::put_u16(bytes, kArchiveVersion);
  le::put_u32(bytes, static_cast<std::uint32_t>(images.size()));
  le::put_u16(bytes, static_cast<std::uint16_t>(first.height));
  le::put_u16(bytes, static_cast<std::uint16_t>(first.width));
  le::put_u8(bytes, 1);
  le::put_u8(bytes, kDtypeFloat32);
  for (const auto& image : images) {
    require_same_shape(first, image, "write_archive");
    for (const float v : image.pixels) {
      if (!(v >= 0.0f && v <= 1.0f)) throw std::invalid_argument("write_archive: pixel outside [0,1]");
      le::put_f32(bytes, v);
    }
  }
  write_file_atomic(path, bytes);
}

namespace {

ArchiveHeader parse_header(le::Reader& reader) {
  reader.expect_magic(kArchiveMagic);
  ArchiveHeader header;
  header.version = reader.u16();
  header.count = reader.u32();
  header.height = reader.u16();
  header.width = reader.u16();
  header.channels = reader.u8();
  header.dtype = reader.u8();
  if (header.version != kArchiveVersion) {
    throw FormatError("archive: unsupported version " + std::to_string(header.version));
  }
  if (header.dtype != kDtypeFloat32) throw FormatError("archive: unsupported dtype tag");
  if (header.channels != 1) throw FormatError("archive: only single-channel archives are supported");
  return header;
}

}  // namespace

ArchiveHeader read_archive_header(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string bytes(kArchiveHeaderBytes, '\0');
  in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  bytes.resize(static_cast<std::size_t>(in.gcount()));
  le::Reader reader(std::move(bytes), path.string());
  return parse_header(reader);
}

std::vector<Image> read_archive(const fs::path& path) {
  le::Reader reader(read_file(path), path.string());
  const auto header = parse_header(reader);
  const std::size_t per_image = std::size_t(header.height) * header.width * header.channels;
  if (reader.remaining() != std::size_t(header.count) * per_image * 4) {
    throw FormatError(path.string() + ": body length does not match header");
  }
  std::vector<Image> images(header.count, Image(header.height, header.width));
  for (auto& image : images) {
    for (float& v : image.pixels) {
      v = reader.f32();
      if (!(v >= 0.0f && v <= 1.0f)) throw FormatError(path.string() + ": pixel outside [0,1]");
    }
  }
  return images;
}

namespace {

json spec_to_json(const zoo::SyntheticModelSpec& spec) {
  return json{{"model_id", spec.model_id},
              {"family_id", spec.family_id},
              {"seed", spec.seed},
              {"family_strength", spec.family_strength},
              {"model_strength", spec.model_strength},
              {"noise_sigma", spec.noise_sigma},
              {"archive", archive_filename(spec.model_id)}};
}

}  // namespace

void write_manifest(const fs::path& path, const zoo::ZooManifest& manifest) {
  const auto& c = manifest.config;
  json doc;
  doc["format_version"] = manifest.format_version;
  doc["height"] = c.height;
  doc["width"] = c.width;
  doc["channels"] = 1;
  doc["images_per_model"] = c.images_per_model;
  doc["seed"] = c.seed;
  doc["num_families"] = c.num_families;
  doc["models_per_family"] = c.models_per_family;
  doc["family_strength"] = c.family_strength;
  doc["model_strength"] = c.model_strength;
  doc["noise_sigma"] = c.noise_sigma;
  doc["models"] = json::array();
  for (const auto& spec : manifest.models) doc["models"].push_back(spec_to_json(spec));
  doc["real"] = spec_to_json(manifest.real);
  write_file_atomic(path, doc.dump(2) + "\n");
}

zoo::ZooManifest read_manifest(const fs::path& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  try {
    if (doc.at("format_version").get<int>() != zoo::kManifestFormatVersion) {
      throw FormatError(path.string() + ": unsupported manifest version");
    }
    zoo::ZooConfig config;
    config.height = doc.at("height").get<std::size_t>();
    config.width = doc.at("width").get<std::size_t>();
    config.images_per_model = doc.at("images_per_model").get<std::size_t>();
    config.seed = doc.at("seed").get<std::uint64_t>();
    config.num_families = doc.at("num_families").get<std::size_t>();
    config.models_per_family = doc.at("models_per_family").get<std::size_t>();
    config.family_strength = doc.at("family_strength").get<double>();
    config.model_strength = doc.at("model_strength").get<double>();
    config.noise_sigma = doc.at("noise_sigma").get<double>();
    auto manifest = zoo::build_zoo(config);
    const auto& models = doc.at("models");
    if (models.size() != manifest.models.size()) {
      throw FormatError(path.string() + ": model list does not match the zoo configuration");
    }
    for (std::size_t i = 0; i < models.size(); ++i) {
      if (models[i].at("model_id").get<std::string>() != manifest.models[i].model_id ||
          models[i].at("seed").get<std::uint64_t>() != manifest.models[i].seed) {
        throw FormatError(path.string() + ": model " + std::to_string(i) +
                          " does not match the zoo configuration");
      }
    }
    return manifest;
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

LoadedDataset load_dataset(const fs::path& dir) {
  LoadedDataset data;
  data.manifest = read_manifest(dir / kManifestFilename);
  const auto& config = data.manifest.config;
  auto load = [&](const zoo::SyntheticModelSpec& spec) {
    auto images = read_archive(dir / archive_filename(spec.model_id));
    if (images.size() != config.images_per_model || images.front().height != config.height ||
        images.front().width != config.width) {
      throw FormatError("dataset/manifest mismatch for model " + spec.model_id);
    }
    return images;
  };
  for (const auto& spec : data.manifest.models) data.model_images.push_back(load(spec));
  data.real_images = load(data.manifest.real);
  return data;
}

}  // namespace gmfp::io
