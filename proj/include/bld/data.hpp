#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "bld/error.hpp"
#include "bld/kernel.hpp"
#include "bld/oracle.hpp"
#include "bld/rng.hpp"

namespace bld::data {

enum class IdxErrorCode { BadMagic, Truncated, TrailingData, UnsupportedDtype, BadRank };

class IdxError : public FormatError {
 public:
  IdxError(IdxErrorCode code, const std::string& what) : FormatError(what), code_(code) {}
  IdxErrorCode code() const noexcept { return code_; }

 private:
  IdxErrorCode code_;
};

enum class IdxType : std::uint8_t {
  UByte = 0x08,
  SByte = 0x09,
  Short = 0x0B,
  Int = 0x0C,
  Float = 0x0D,
  Double = 0x0E,
};

std::size_t idx_type_size(IdxType type);

/// IDX container: big-endian dims, row-major payload kept as raw bytes.
struct IdxTensor {
  IdxType dtype = IdxType::UByte;
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> payload;

  std::size_t rank() const { return dims.size(); }
  std::size_t element_count() const;
  bool operator==(const IdxTensor&) const = default;
};

IdxTensor parse_idx(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> serialize_idx(const IdxTensor& tensor);

/// Reads a raw IDX file, or a gzip-compressed one when the name ends in ".gz".
IdxTensor read_idx_file(const std::filesystem::path& path);

/// A batch of equally sized grayscale or binary images.
struct ImageBatch {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::vector<std::uint8_t>> images;  // row-major, width*height each
};

/// Interprets a rank-3 unsigned-byte tensor as [count, rows, cols].
ImageBatch images_from_idx(const IdxTensor& tensor);

/// bit = 1 iff pixel >= threshold.
std::vector<BitVector> binarize(const ImageBatch& images, std::uint8_t threshold = 128);

/// Center-crops each binary image to side*factor pixels (side = 0: as many
/// whole blocks as fit), mean-pools factor x factor blocks and maps block
/// means >= 0.5 to 1. 28x28 with factor 3, side 8 keeps the central 24x24.
ImageBatch downscale(const ImageBatch& binary, std::size_t factor, std::size_t side = 0);

/// Distribution over d-bit codewords (d <= 16).
struct CodewordDistribution {
  int d = 0;
  std::vector<BitVector> codewords;
  std::vector<double> probs;

  /// Throws ValidationError unless codewords are distinct, d-bit, and the
  /// probabilities are positive and sum to 1 within 1e-12.
  void validate() const;
  oracle::ExplicitDistribution as_explicit() const;
};

/// Uniform over four fixed 8-bit codewords; their 4-bit prefixes are distinct.
CodewordDistribution default_codewords();

std::vector<BitVector> make_codeword_dataset(const CodewordDistribution& dist, std::size_t n, Rng& rng);

/// Synthetic 8x8 binary images (bars, boxes, crosses, diagonals) used when
/// no digit files are available.
ImageBatch make_shapes_dataset(std::size_t n, Rng& rng, std::size_t side = 8);

/// Pixel values 0/1 as doubles.
std::vector<std::vector<double>> to_real(const ImageBatch& binary);

}  // namespace bld::data
