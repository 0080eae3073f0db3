#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace gsnav {

struct DecodedPng {
  int width = 0;
  int height = 0;
  int channels = 0;
  int bit_depth = 0;
  std::vector<std::uint16_t> samples;  // row-major, channels per pixel
};

// 8-bit RGB from floats in [0,1] (clamped, rounded).
std::vector<std::uint8_t> encode_png_rgb(std::span<const float> rgb, int width, int height);
// 16-bit single channel.
std::vector<std::uint8_t> encode_png_gray16(std::span<const std::uint16_t> values, int width, int height);
DecodedPng decode_png(std::span<const std::uint8_t> bytes);

// Little-endian f32 array.
std::vector<std::uint8_t> encode_f32(std::span<const float> values);
std::vector<float> decode_f32(std::span<const std::uint8_t> bytes);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(const std::string& text);

void write_bytes(const std::filesystem::path& file, std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> read_bytes(const std::filesystem::path& file);

// Lowercase hex SHA-256.
std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_hex(const std::string& text);

}  // namespace gsnav
