#include "bld/formats.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>

#include "bld/error.hpp"

namespace bld::formats {

namespace {

void put_le32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_le32(const std::uint8_t* p) {
  return std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) |
         (std::uint32_t{p[3]} << 24);
}

}  // namespace

std::vector<std::uint8_t> pack_bits(std::span<const BitVector> rows, std::uint32_t dim) {
  const std::size_t row_bytes = (dim + 7) / 8;
  std::vector<std::uint8_t> out{'B', 'L', 'D', 'S'};
  put_le32(out, kBldsVersion);
  put_le32(out, dim);
  put_le32(out, static_cast<std::uint32_t>(rows.size()));
  out.reserve(16 + rows.size() * row_bytes);
  for (const auto& row : rows) {
    if (row.size() != dim) throw DimensionError("BLDS row length differs from header D");
    std::vector<std::uint8_t> packed(row_bytes, 0);
    for (std::size_t i = 0; i < dim; ++i) {
      if (row[i] > 1) throw FormatError("BLDS rows must be strictly binary");
      if (row[i]) packed[i / 8] |= static_cast<std::uint8_t>(0x80u >> (i % 8));
    }
    out.insert(out.end(), packed.begin(), packed.end());
  }
  return out;
}

std::vector<BitVector> unpack_bits(std::span<const std::uint8_t> bytes, std::uint32_t* dim) {
  if (bytes.size() < 16) throw FormatError("BLDS header truncated");
  if (bytes[0] != 'B' || bytes[1] != 'L' || bytes[2] != 'D' || bytes[3] != 'S')
    throw FormatError("not a BLDS file (bad magic)");
  const std::uint32_t version = get_le32(bytes.data() + 4);
  if (version != kBldsVersion) throw FormatError("unsupported BLDS version " + std::to_string(version));
  const std::uint32_t d = get_le32(bytes.data() + 8);
  const std::uint32_t count = get_le32(bytes.data() + 12);
  const std::size_t row_bytes = (static_cast<std::size_t>(d) + 7) / 8;
  if (bytes.size() != 16 + row_bytes * count)
    throw FormatError("BLDS payload is " + std::to_string(bytes.size() - 16) + " bytes, expected " +
                      std::to_string(row_bytes * count));
  std::vector<BitVector> rows(count, BitVector(d));
  for (std::size_t r = 0; r < count; ++r) {
    const std::uint8_t* p = bytes.data() + 16 + r * row_bytes;
    for (std::size_t i = 0; i < d; ++i) rows[r][i] = (p[i / 8] >> (7 - i % 8)) & 1u;
  }
  if (dim) *dim = d;
  return rows;
}

void write_blds(const std::filesystem::path& path, std::span<const BitVector> rows, std::uint32_t dim) {
  write_file(path, pack_bits(rows, dim));
}

std::vector<BitVector> read_blds(const std::filesystem::path& path, std::uint32_t* dim) {
  return unpack_bits(read_file(path), dim);
}

Image bits_to_image(BitSpan bits, std::size_t width, std::size_t height) {
  if (bits.size() != width * height) throw DimensionError("bit count does not match image shape");
  Image img{width, height, std::vector<std::uint8_t>(bits.size())};
  for (std::size_t i = 0; i < bits.size(); ++i) img.pixels[i] = bits[i] ? 255 : 0;
  return img;
}

Image reals_to_image(std::span<const double> values, std::size_t width, std::size_t height) {
  if (values.size() != width * height) throw DimensionError("value count does not match image shape");
  Image img{width, height, std::vector<std::uint8_t>(values.size())};
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = std::clamp(values[i], 0.0, 1.0);
    img.pixels[i] = static_cast<std::uint8_t>(std::lround(255.0 * v));
  }
  return img;
}

Image tile(std::span<const Image> images, std::size_t columns) {
  if (images.empty() || columns == 0) throw DimensionError("cannot tile an empty image list");
  const std::size_t w = images[0].width, h = images[0].height;
  const std::size_t cols = std::min(columns, images.size());
  const std::size_t rows = (images.size() + cols - 1) / cols;
  Image out{cols * w + (cols - 1), rows * h + (rows - 1), {}};
  out.pixels.assign(out.width * out.height, 128);
  for (std::size_t k = 0; k < images.size(); ++k) {
    const auto& im = images[k];
    if (im.width != w || im.height != h) throw DimensionError("tiled images must share a shape");
    const std::size_t ox = (k % cols) * (w + 1), oy = (k / cols) * (h + 1);
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) out.pixels[(oy + y) * out.width + ox + x] = im.pixels[y * w + x];
  }
  return out;
}

std::vector<std::uint8_t> encode_pgm(const Image& image) {
  if (image.width == 0 || image.height == 0 || image.pixels.empty())
    throw DimensionError("cannot write an empty PGM");
  if (image.pixels.size() != image.width * image.height)
    throw DimensionError("PGM pixel count does not match its shape");
  const std::string header =
      "P5\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), image.pixels.begin(), image.pixels.end());
  return out;
}

void write_pgm(const Image& image, const std::filesystem::path& path) {
  write_file(path, encode_pgm(image));
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace bld::formats
