#include "bld/data.hpp"

#include <zlib.h>

#include <cmath>
#include <fstream>
#include <iterator>
#include <set>

namespace bld::data {

std::size_t idx_type_size(IdxType type) {
  switch (type) {
    case IdxType::UByte:
    case IdxType::SByte: return 1;
    case IdxType::Short: return 2;
    case IdxType::Int:
    case IdxType::Float: return 4;
    case IdxType::Double: return 8;
  }
  return 0;
}

std::size_t IdxTensor::element_count() const {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

namespace {

bool known_dtype(std::uint8_t code) {
  return code == 0x08 || code == 0x09 || (code >= 0x0B && code <= 0x0E);
}

std::uint32_t read_be32(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) |
         std::uint32_t{p[3]};
}

}  // namespace

IdxTensor parse_idx(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) throw IdxError(IdxErrorCode::Truncated, "IDX header truncated: fewer than 4 bytes");
  if (bytes[0] != 0 || bytes[1] != 0)
    throw IdxError(IdxErrorCode::BadMagic, "IDX magic must start with two zero bytes");
  if (!known_dtype(bytes[2]))
    throw IdxError(IdxErrorCode::UnsupportedDtype,
                   "unsupported IDX dtype 0x" + std::to_string(bytes[2]));
  const std::size_t rank = bytes[3];
  if (rank == 0) throw IdxError(IdxErrorCode::BadRank, "IDX rank must be at least 1");
  const std::size_t header = 4 + 4 * rank;
  if (bytes.size() < header)
    throw IdxError(IdxErrorCode::Truncated, "IDX dimension table truncated: expected " +
                                                std::to_string(header) + " header bytes, got " +
                                                std::to_string(bytes.size()));
  IdxTensor t;
  t.dtype = static_cast<IdxType>(bytes[2]);
  t.dims.resize(rank);
  for (std::size_t i = 0; i < rank; ++i) t.dims[i] = read_be32(bytes.data() + 4 + 4 * i);
  const std::size_t expected = t.element_count() * idx_type_size(t.dtype);
  const std::size_t actual = bytes.size() - header;
  if (actual < expected)
    throw IdxError(IdxErrorCode::Truncated, "IDX payload truncated: expected " +
                                                std::to_string(expected) + " bytes, got " +
                                                std::to_string(actual));
  if (actual > expected)
    throw IdxError(IdxErrorCode::TrailingData, "IDX payload has " +
                                                   std::to_string(actual - expected) +
                                                   " trailing bytes beyond " + std::to_string(expected));
  t.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(header), bytes.end());
  return t;
}

std::vector<std::uint8_t> serialize_idx(const IdxTensor& tensor) {
  std::vector<std::uint8_t> out{0, 0, static_cast<std::uint8_t>(tensor.dtype),
                                static_cast<std::uint8_t>(tensor.dims.size())};
  for (auto d : tensor.dims) {
    out.push_back(static_cast<std::uint8_t>(d >> 24));
    out.push_back(static_cast<std::uint8_t>(d >> 16));
    out.push_back(static_cast<std::uint8_t>(d >> 8));
    out.push_back(static_cast<std::uint8_t>(d));
  }
  out.insert(out.end(), tensor.payload.begin(), tensor.payload.end());
  return out;
}

IdxTensor read_idx_file(const std::filesystem::path& path) {
  std::vector<std::uint8_t> bytes;
  if (path.extension() == ".gz") {
    gzFile f = gzopen(path.string().c_str(), "rb");
    if (!f) throw IoError("cannot open " + path.string());
    std::uint8_t buf[1 << 16];
    int n;
    while ((n = gzread(f, buf, sizeof buf)) > 0) bytes.insert(bytes.end(), buf, buf + n);
    const bool failed = n < 0;
    gzclose(f);
    if (failed) throw IoError("gzip read failed for " + path.string());
  } else {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    bytes.assign(std::istreambuf_iterator<char>(in), {});
  }
  return parse_idx(bytes);
}

ImageBatch images_from_idx(const IdxTensor& tensor) {
  if (tensor.dtype != IdxType::UByte || tensor.rank() != 3)
    throw IdxError(IdxErrorCode::BadRank, "image files must be rank-3 unsigned byte tensors");
  ImageBatch b;
  b.height = tensor.dims[1];
  b.width = tensor.dims[2];
  const std::size_t px = b.width * b.height;
  b.images.resize(tensor.dims[0]);
  for (std::size_t i = 0; i < b.images.size(); ++i)
    b.images[i].assign(tensor.payload.begin() + static_cast<std::ptrdiff_t>(i * px),
                       tensor.payload.begin() + static_cast<std::ptrdiff_t>((i + 1) * px));
  return b;
}

std::vector<BitVector> binarize(const ImageBatch& images, std::uint8_t threshold) {
  std::vector<BitVector> out;
  out.reserve(images.images.size());
  for (const auto& img : images.images) {
    BitVector bits(img.size());
    for (std::size_t i = 0; i < img.size(); ++i) bits[i] = img[i] >= threshold ? 1 : 0;
    out.push_back(std::move(bits));
  }
  return out;
}

ImageBatch downscale(const ImageBatch& binary, std::size_t factor, std::size_t side) {
  if (factor == 0) throw ConfigError("downscale factor must be positive");
  const std::size_t ow = side ? side : binary.width / factor;
  const std::size_t oh = side ? side : binary.height / factor;
  if (ow == 0 || oh == 0) throw DimensionError("image smaller than one downscale block");
  if (ow * factor > binary.width || oh * factor > binary.height)
    throw DimensionError("image too small for " + std::to_string(ow) + "x" + std::to_string(oh) +
                         " blocks of " + std::to_string(factor));
  const std::size_t x0 = (binary.width - ow * factor) / 2;
  const std::size_t y0 = (binary.height - oh * factor) / 2;
  ImageBatch out{ow, oh, {}};
  out.images.reserve(binary.images.size());
  const double area = static_cast<double>(factor * factor);
  for (const auto& img : binary.images) {
    std::vector<std::uint8_t> small(ow * oh);
    for (std::size_t by = 0; by < oh; ++by)
      for (std::size_t bx = 0; bx < ow; ++bx) {
        std::size_t on = 0;
        for (std::size_t dy = 0; dy < factor; ++dy)
          for (std::size_t dx = 0; dx < factor; ++dx)
            on += img[(y0 + by * factor + dy) * binary.width + x0 + bx * factor + dx] ? 1 : 0;
        small[by * ow + bx] = static_cast<double>(on) / area >= 0.5 ? 1 : 0;
      }
    out.images.push_back(std::move(small));
  }
  return out;
}

void CodewordDistribution::validate() const {
  if (d < 1 || d > 16) throw ValidationError("codeword length must be in [1, 16]");
  if (codewords.empty() || codewords.size() != probs.size())
    throw ValidationError("need one probability per codeword");
  std::set<std::uint32_t> seen;
  double sum = 0.0;
  for (std::size_t i = 0; i < codewords.size(); ++i) {
    if (codewords[i].size() != static_cast<std::size_t>(d) || !is_binary(codewords[i]))
      throw ValidationError("codeword " + std::to_string(i) + " is not a " + std::to_string(d) +
                            "-bit binary vector");
    if (!seen.insert(oracle::bits_to_index(codewords[i])).second)
      throw ValidationError("duplicate codeword at index " + std::to_string(i));
    if (!(probs[i] > 0.0)) throw ValidationError("codeword probabilities must be positive");
    sum += probs[i];
  }
  if (std::abs(sum - 1.0) > 1e-12) throw ValidationError("codeword probabilities must sum to 1");
}

oracle::ExplicitDistribution CodewordDistribution::as_explicit() const {
  validate();
  oracle::ExplicitDistribution e{d, std::vector<double>(std::size_t{1} << d, 0.0)};
  for (std::size_t i = 0; i < codewords.size(); ++i)
    e.prob[oracle::bits_to_index(codewords[i])] = probs[i];
  return e;
}

CodewordDistribution default_codewords() {
  CodewordDistribution dist;
  dist.d = 8;
  for (std::uint32_t word : {0b10110010u, 0b01101100u, 0b11010101u, 0b00011011u})
    dist.codewords.push_back(oracle::index_to_bits(word, 8));
  dist.probs.assign(4, 0.25);
  return dist;
}

std::vector<BitVector> make_codeword_dataset(const CodewordDistribution& dist, std::size_t n, Rng& rng) {
  dist.validate();
  std::vector<double> cdf(dist.probs.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < cdf.size(); ++i) cdf[i] = (acc += dist.probs[i]);
  std::vector<BitVector> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double u = rng.uniform() * acc;
    std::size_t i = 0;
    while (i + 1 < cdf.size() && u >= cdf[i]) ++i;
    out.push_back(dist.codewords[i]);
  }
  return out;
}

ImageBatch make_shapes_dataset(std::size_t n, Rng& rng, std::size_t side) {
  ImageBatch out{side, side, {}};
  out.images.reserve(n);
  const auto s = static_cast<std::int64_t>(side);
  for (std::size_t k = 0; k < n; ++k) {
    std::vector<std::uint8_t> img(side * side, 0);
    auto set = [&](std::int64_t x, std::int64_t y) {
      if (x >= 0 && y >= 0 && x < s && y < s) img[static_cast<std::size_t>(y * s + x)] = 1;
    };
    switch (rng.uniform_int(0, 4)) {
      case 0: {  // horizontal bar
        const auto y = rng.uniform_int(0, s - 2), th = rng.uniform_int(1, 2);
        for (std::int64_t dy = 0; dy < th; ++dy)
          for (std::int64_t x = 0; x < s; ++x) set(x, y + dy);
        break;
      }
      case 1: {  // vertical bar
        const auto x = rng.uniform_int(0, s - 2), th = rng.uniform_int(1, 2);
        for (std::int64_t dx = 0; dx < th; ++dx)
          for (std::int64_t y = 0; y < s; ++y) set(x + dx, y);
        break;
      }
      case 2: {  // box outline
        const auto x0 = rng.uniform_int(0, s / 2 - 1), y0 = rng.uniform_int(0, s / 2 - 1);
        const auto x1 = rng.uniform_int(x0 + 2, s - 1), y1 = rng.uniform_int(y0 + 2, s - 1);
        for (auto x = x0; x <= x1; ++x) set(x, y0), set(x, y1);
        for (auto y = y0; y <= y1; ++y) set(x0, y), set(x1, y);
        break;
      }
      case 3: {  // cross
        const auto cx = rng.uniform_int(2, s - 3), cy = rng.uniform_int(2, s - 3);
        for (std::int64_t i = 0; i < s; ++i) set(cx, i), set(i, cy);
        break;
      }
      default: {  // diagonal
        const bool anti = rng.uniform() < 0.5;
        const auto off = rng.uniform_int(-2, 2);
        for (std::int64_t i = 0; i < s; ++i) set(i, anti ? s - 1 - i + off : i + off);
        break;
      }
    }
    out.images.push_back(std::move(img));
  }
  return out;
}

std::vector<std::vector<double>> to_real(const ImageBatch& binary) {
  std::vector<std::vector<double>> out;
  out.reserve(binary.images.size());
  for (const auto& img : binary.images) out.emplace_back(img.begin(), img.end());
  return out;
}

}  // namespace bld::data
