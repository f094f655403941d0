#pragma once

// Encoder checkpoint format, little-endian:
//   char[4]  magic "FFGR"
//   u16      format version (1)
//   u32      embedding dimension D
//   u16      input height, u16 input width
//   u8       set pooling (0 = mean, 1 = sum)
//   u8       number of convolution layers L
//   f32      embedding radius (0 = no rescaling)
//   u32      tensor count T
//   T x { u8 rank, u32 dims[rank] }   shapes in declaration order
//   f32[...] all tensor values in declaration order, row-major

#include <filesystem>
#include <string>

#include "gmfp/set_encoder.hpp"

namespace gmfp::io {

inline constexpr char kCheckpointMagic[4] = {'F', 'F', 'G', 'R'};
inline constexpr std::uint16_t kCheckpointVersion = 1;

std::string encode_checkpoint(const SetEncoder<float>& encoder);
/// Throws FormatError on a bad magic, unknown version, truncated body or
/// shapes that do not form a valid encoder.
SetEncoder<float> decode_checkpoint(const std::string& bytes);

void write_checkpoint(const std::filesystem::path& path, const SetEncoder<float>& encoder);
SetEncoder<float> read_checkpoint(const std::filesystem::path& path);

}  // namespace gmfp::io
