#pragma once

// On-disk dataset format.
//
// Archive (one per model, "<model_id>.ffds"), little-endian:
//   offset 0   char[4]  magic "FFDS"
//   offset 4   u16      format version (1)
//   offset 6   u32      image count
//   offset 10  u16      height
//   offset 12  u16      width
//   offset 14  u8       channels (1)
//   offset 15  u8       dtype tag (1 = float32)
//   offset 16  f32[count*height*width*channels] pixel values in [0,1]
//
// The sibling manifest.json lists every model with its generation
// parameters; templates are rebuilt deterministically from the zoo config.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "gmfp/image.hpp"
#include "gmfp/synth_zoo.hpp"

namespace gmfp::io {

inline constexpr char kArchiveMagic[4] = {'F', 'F', 'D', 'S'};
inline constexpr std::uint16_t kArchiveVersion = 1;
inline constexpr std::uint8_t kDtypeFloat32 = 1;
inline constexpr std::size_t kArchiveHeaderBytes = 16;
inline constexpr const char* kManifestFilename = "manifest.json";

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ArchiveHeader {
  std::uint16_t version = kArchiveVersion;
  std::uint32_t count = 0;
  std::uint16_t height = 0;
  std::uint16_t width = 0;
  std::uint8_t channels = 1;
  std::uint8_t dtype = kDtypeFloat32;
};

std::string archive_filename(const std::string& model_id);

/// Writes to a temporary sibling and renames into place.
void write_archive(const std::filesystem::path& path, std::span<const Image> images);
ArchiveHeader read_archive_header(const std::filesystem::path& path);
std::vector<Image> read_archive(const std::filesystem::path& path);

void write_manifest(const std::filesystem::path& path, const zoo::ZooManifest& manifest);
/// Rebuilds the zoo from the recorded configuration and checks that the
/// recorded model list matches it.
zoo::ZooManifest read_manifest(const std::filesystem::path& path);

/// Per-model images loaded from a dataset directory.
struct LoadedDataset {
  zoo::ZooManifest manifest;
  std::vector<std::vector<Image>> model_images;  // manifest.models order
  std::vector<Image> real_images;
};

/// Reads manifest and all archives, validating counts and shapes against the
/// manifest ("dataset/manifest mismatch" on any disagreement).
LoadedDataset load_dataset(const std::filesystem::path& dir);

/// Writes bytes to `path` via a temporary file and an atomic rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);

// Little-endian primitive encoding shared by the binary formats.
namespace le {
void put_u8(std::string& out, std::uint8_t v);
void put_u16(std::string& out, std::uint16_t v);
void put_u32(std::string& out, std::uint32_t v);
void put_f32(std::string& out, float v);

class Reader {
 public:
  Reader(std::string bytes, std::string what) : bytes_(std::move(bytes)), what_(std::move(what)) {}
  std::uint8_t u8();
  std::uint16_t u16();
  std::uint32_t u32();
  float f32();
  void expect_magic(const char (&magic)[4]);
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n);
  std::string bytes_;
  std::string what_;
  std::size_t pos_ = 0;
};
}  // namespace le

std::string read_file(const std::filesystem::path& path);

}  // namespace gmfp::io
