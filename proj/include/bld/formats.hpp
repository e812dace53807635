#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "bld/kernel.hpp"

namespace bld::formats {

/// BLDS latent file: 16-byte little-endian header
///   "BLDS" | u32 version | u32 D | u32 count
/// followed by `count` rows of ceil(D/8) bytes, bits MSB-first within each
/// byte, every row padded with zero bits to a byte boundary.
inline constexpr std::uint32_t kBldsVersion = 1;

std::vector<std::uint8_t> pack_bits(std::span<const BitVector> rows, std::uint32_t dim);
std::vector<BitVector> unpack_bits(std::span<const std::uint8_t> bytes, std::uint32_t* dim = nullptr);

void write_blds(const std::filesystem::path& path, std::span<const BitVector> rows, std::uint32_t dim);
std::vector<BitVector> read_blds(const std::filesystem::path& path, std::uint32_t* dim = nullptr);

/// Grayscale raster, row-major.
struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;
};

/// Bits 0/1 -> 0/255.
Image bits_to_image(BitSpan bits, std::size_t width, std::size_t height);
/// Values in [0,1] -> round(255 v).
Image reals_to_image(std::span<const double> values, std::size_t width, std::size_t height);

/// Tiles equally sized images into a grid with `columns` columns and
/// 1-pixel separators of value 128.
Image tile(std::span<const Image> images, std::size_t columns);

/// Binary PGM: "P5\n<w> <h>\n255\n" + pixels. Throws on an empty image.
std::vector<std::uint8_t> encode_pgm(const Image& image);
void write_pgm(const Image& image, const std::filesystem::path& path);

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_file(const std::filesystem::path& path, const std::string& text);
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

}  // namespace bld::formats
