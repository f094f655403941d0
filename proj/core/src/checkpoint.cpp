#include "gmfp/checkpoint.hpp"

#include "gmfp/dataset_io.hpp"

namespace gmfp::io {

std::string encode_checkpoint(const SetEncoder<float>& encoder) {
  const auto& config = encoder.config();
  std::string out(kCheckpointMagic, 4);
  le::put_u16(out, kCheckpointVersion);
  le::put_u32(out, static_cast<std::uint32_t>(config.embedding_dim));
  le::put_u16(out, static_cast<std::uint16_t>(config.height));
  le::put_u16(out, static_cast<std::uint16_t>(config.width));
  le::put_u8(out, config.pooling == ad::SetPooling::kMean ? 0 : 1);
  le::put_u8(out, static_cast<std::uint8_t>(config.channels.size()));
  le::put_f32(out, static_cast<float>(config.embedding_radius));
  const auto& params = encoder.parameters();
  le::put_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    le::put_u8(out, static_cast<std::uint8_t>(p.tensor.shape().size()));
    for (const auto d : p.tensor.shape()) le::put_u32(out, static_cast<std::uint32_t>(d));
  }
  for (const auto& p : params) {
    for (const float v : p.tensor.data()) le::put_f32(out, v);
  }
  return out;
}

SetEncoder<float> decode_checkpoint(const std::string& bytes) {
  le::Reader in(bytes, "checkpoint");
  in.expect_magic(kCheckpointMagic);
  const auto version = in.u16();
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  }
  EncoderConfig config;
  config.embedding_dim = in.u32();
  config.height = in.u16();
  config.width = in.u16();
  const auto pooling = in.u8();
  if (pooling > 1) throw FormatError("checkpoint: unknown pooling tag " + std::to_string(pooling));
  config.pooling = pooling == 0 ? ad::SetPooling::kMean : ad::SetPooling::kSum;
  const std::size_t layers = in.u8();
  config.embedding_radius = in.f32();
  const std::size_t count = in.u32();
  if (count != 2 * layers + 6) {
    throw FormatError("checkpoint: " + std::to_string(count) + " tensors do not match " +
                      std::to_string(layers) + " convolution layers");
  }
  std::vector<ad::Shape> shapes(count);
  for (auto& shape : shapes) {
    const std::size_t rank = in.u8();
    for (std::size_t r = 0; r < rank; ++r) shape.push_back(in.u32());
  }
  config.channels.clear();
  for (std::size_t i = 0; i < layers; ++i) {
    if (shapes[2 * i].size() != 4) throw FormatError("checkpoint: convolution weight must have rank 4");
    config.channels.push_back(shapes[2 * i][0]);
  }
  std::vector<ad::NamedParameter<float>> params;
  for (const auto& shape : shapes) {
    const std::size_t n = ad::numel(shape);
    if (in.remaining() < n * 4) throw FormatError("checkpoint: truncated body");
    std::vector<float> values(n);
    for (float& v : values) v = in.f32();
    params.push_back({"", ad::Tensor<float>::from(shape, std::move(values), true)});
  }
  if (in.remaining() != 0) throw FormatError("checkpoint: trailing bytes after body");
  try {
    return SetEncoder<float>(config, std::move(params));
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
}

void write_checkpoint(const std::filesystem::path& path, const SetEncoder<float>& encoder) {
  write_file_atomic(path, encode_checkpoint(encoder));
}

SetEncoder<float> read_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file(path));
}

}  // namespace gmfp::io
