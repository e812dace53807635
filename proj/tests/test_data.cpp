#include <doctest.h>
#include <zlib.h>

#include <cstdio>
#include <filesystem>
#include <map>

#include "bld/data.hpp"
#include "bld/formats.hpp"

using namespace bld;
using namespace bld::data;

namespace {

std::vector<std::uint8_t> idx_bytes(std::uint8_t dtype, std::vector<std::uint32_t> dims, std::size_t payload) {
  std::vector<std::uint8_t> b{0, 0, dtype, static_cast<std::uint8_t>(dims.size())};
  for (auto d : dims)
    for (int s = 24; s >= 0; s -= 8) b.push_back(static_cast<std::uint8_t>(d >> s));
  for (std::size_t i = 0; i < payload; ++i) b.push_back(static_cast<std::uint8_t>(i * 7));
  return b;
}

IdxErrorCode error_of(std::span<const std::uint8_t> bytes) {
  try {
    parse_idx(bytes);
  } catch (const IdxError& e) {
    return e.code();
  }
  FAIL("parse_idx accepted a malformed buffer");
  return IdxErrorCode::BadMagic;
}

ImageBatch single(std::size_t w, std::size_t h, std::vector<std::uint8_t> px) { return {w, h, {std::move(px)}}; }

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("bld_test_data_" + name);
}

}  // namespace

TEST_CASE("IDX images and labels") {
  const auto images = parse_idx(idx_bytes(0x08, {2, 3, 4}, 24));
  CHECK(images.rank() == 3);
  CHECK(images.dims == std::vector<std::uint32_t>{2, 3, 4});
  CHECK(images.payload.size() == 24);
  CHECK(images.payload[5] == 35);
  const auto labels = parse_idx(idx_bytes(0x08, {5}, 5));
  CHECK(labels.dims == std::vector<std::uint32_t>{5});
  const auto batch = images_from_idx(images);
  CHECK(batch.images.size() == 2);
  CHECK(batch.height == 3);
  CHECK(batch.width == 4);
  CHECK_THROWS_AS(images_from_idx(labels), IdxError);
}

TEST_CASE("IDX big-endian dimensions") {
  const auto t = parse_idx(idx_bytes(0x0B, {0x00010002}, 0x00010002 * 2));
  CHECK(t.dims[0] == 65538);
  CHECK(t.element_count() == 65538);
  CHECK(idx_type_size(IdxType::Double) == 8);
}

TEST_CASE("IDX fault injection") {
  auto good = idx_bytes(0x08, {2, 3, 4}, 24);
  SUBCASE("bad magic") {
    auto b = good;
    b[0] = 1;
    CHECK(error_of(b) == IdxErrorCode::BadMagic);
    CHECK(error_of(std::vector<std::uint8_t>{0, 0}) == IdxErrorCode::Truncated);
  }
  SUBCASE("payload one byte short names both lengths") {
    good.pop_back();
    CHECK(error_of(good) == IdxErrorCode::Truncated);
    try {
      parse_idx(good);
    } catch (const IdxError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("24") != std::string::npos);
      CHECK(msg.find("23") != std::string::npos);
      CHECK(std::string(e.kind()) == "format");
    }
  }
  SUBCASE("truncated dimension table") {
    good.resize(9);
    CHECK(error_of(good) == IdxErrorCode::Truncated);
  }
  SUBCASE("trailing bytes") {
    good.push_back(0);
    CHECK(error_of(good) == IdxErrorCode::TrailingData);
  }
  SUBCASE("unsupported dtype") {
    good[2] = 0x07;
    CHECK(error_of(good) == IdxErrorCode::UnsupportedDtype);
  }
  SUBCASE("rank zero") { CHECK(error_of(idx_bytes(0x08, {}, 0)) == IdxErrorCode::BadRank); }
}

TEST_CASE("IDX round trip on random tensors") {
  Rng rng(12);
  const IdxType types[] = {IdxType::UByte, IdxType::SByte, IdxType::Short,
                           IdxType::Int, IdxType::Float, IdxType::Double};
  for (int trial = 0; trial < 200; ++trial) {
    IdxTensor t;
    t.dtype = types[rng.uniform_int(0, 5)];
    const auto rank = rng.uniform_int(1, 4);
    for (std::uint64_t r = 0; r < rank; ++r) t.dims.push_back(static_cast<std::uint32_t>(rng.uniform_int(1, 5)));
    t.payload.resize(t.element_count() * idx_type_size(t.dtype));
    for (auto& b : t.payload) b = static_cast<std::uint8_t>(rng.next_u64());
    const auto bytes = serialize_idx(t);
    CHECK(parse_idx(bytes) == t);
    CHECK(serialize_idx(parse_idx(bytes)) == bytes);
  }
}

TEST_CASE("IDX files, raw and gzip") {
  const auto bytes = idx_bytes(0x08, {2, 2, 2}, 8);
  const auto raw = temp_path("raw.idx");
  formats::write_file(raw, bytes);
  CHECK(read_idx_file(raw).payload.size() == 8);

  const auto gz = temp_path("img.idx.gz");
  gzFile f = gzopen(gz.string().c_str(), "wb");
  REQUIRE(f != nullptr);
  gzwrite(f, bytes.data(), static_cast<unsigned>(bytes.size()));
  gzclose(f);
  CHECK(read_idx_file(gz) == read_idx_file(raw));
  CHECK_THROWS_AS(read_idx_file(temp_path("missing.idx")), IoError);
  std::filesystem::remove(raw);
  std::filesystem::remove(gz);
}

TEST_CASE("binarize") {
  CHECK(binarize(single(2, 2, {0, 0, 0, 0}))[0] == BitVector(4, 0));
  CHECK(binarize(single(2, 1, {127, 128}))[0] == BitVector{0, 1});
  CHECK(binarize(single(2, 1, {127, 128}), 127)[0] == BitVector{1, 1});
  SUBCASE("idempotent on 0/255 images") {
    Rng rng(3);
    ImageBatch b = make_shapes_dataset(20, rng);
    const auto once = binarize(b);
    ImageBatch scaled = b;
    for (std::size_t n = 0; n < b.images.size(); ++n)
      for (std::size_t i = 0; i < once[n].size(); ++i) scaled.images[n][i] = once[n][i] ? 255 : 0;
    CHECK(binarize(scaled) == once);
  }
}

TEST_CASE("downscale") {
  SUBCASE("factor 1 is the identity") {
    const auto img = single(3, 2, {1, 0, 1, 1, 0, 0});
    CHECK(downscale(img, 1).images == img.images);
  }
  SUBCASE("constant image stays constant") {
    const auto d = downscale(single(4, 4, std::vector<std::uint8_t>(16, 1)), 2);
    CHECK(d.width == 2);
    CHECK(d.images[0] == std::vector<std::uint8_t>(4, 1));
  }
  SUBCASE("checkerboard block means of one half map to 1") {
    std::vector<std::uint8_t> px(16);
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) px[r * 4 + c] = (r + c) % 2;
    CHECK(downscale(single(4, 4, px), 2).images[0] == std::vector<std::uint8_t>(4, 1));
  }
  SUBCASE("28x28 center-crops to 24x24 before 3x3 pooling") {
    std::vector<std::uint8_t> px(28 * 28, 0);
    // Only the 2-pixel border is set; the crop removes all of it.
    for (int r = 0; r < 28; ++r)
      for (int c = 0; c < 28; ++c)
        if (r < 2 || r >= 26 || c < 2 || c >= 26) px[r * 28 + c] = 1;
    const auto d = downscale(single(28, 28, px), 3, 8);
    CHECK(d.width == 8);
    CHECK(d.height == 8);
    CHECK(d.images[0] == std::vector<std::uint8_t>(64, 0));
  }
  CHECK_THROWS(downscale(single(2, 2, {0, 0, 0, 0}), 0));
  CHECK_THROWS_AS(downscale(single(4, 4, std::vector<std::uint8_t>(16, 0)), 3, 2), DimensionError);
}

TEST_CASE("codeword distributions") {
  const auto cw = default_codewords();
  CHECK_NOTHROW(cw.validate());
  CHECK(cw.d == 8);
  CHECK(cw.codewords.size() == 4);
  std::map<BitVector, int> prefixes;
  for (const auto& c : cw.codewords) ++prefixes[BitVector(c.begin(), c.begin() + 4)];
  CHECK(prefixes.size() == 4);

  SUBCASE("uniform frequencies") {
    Rng rng(9);
    const auto xs = make_codeword_dataset(cw, 10000, rng);
    std::map<BitVector, int> counts;
    for (const auto& x : xs) ++counts[x];
    CHECK(counts.size() == 4);
    for (const auto& [x, n] : counts) {
      CHECK(n / 10000.0 >= 0.23);
      CHECK(n / 10000.0 <= 0.27);
    }
  }
  SUBCASE("single codeword") {
    CodewordDistribution one{3, {BitVector{1, 0, 1}}, {1.0}};
    Rng rng(1);
    for (const auto& x : make_codeword_dataset(one, 50, rng)) CHECK(x == BitVector{1, 0, 1});
  }
  SUBCASE("deterministic per seed") {
    Rng a(5), b(5);
    CHECK(make_codeword_dataset(cw, 100, a) == make_codeword_dataset(cw, 100, b));
  }
  SUBCASE("invalid distributions") {
    CHECK_THROWS_AS((CodewordDistribution{2, {BitVector{1, 0}, BitVector{0, 1}}, {1.0, 0.0}}.validate()), ValidationError);
    CHECK_THROWS_AS((CodewordDistribution{2, {BitVector{1, 0}, BitVector{1, 0}}, {0.5, 0.5}}.validate()), ValidationError);
    CHECK_THROWS_AS((CodewordDistribution{2, {BitVector{1, 0}}, {0.9}}.validate()), ValidationError);
    CHECK_THROWS_AS((CodewordDistribution{2, {BitVector{1, 0, 1}}, {1.0}}.validate()), ValidationError);
    CHECK_THROWS_AS((CodewordDistribution{17, {BitVector(17, 0)}, {1.0}}.validate()), ValidationError);
  }
  SUBCASE("explicit form") {
    const auto e = cw.as_explicit();
    double total = 0;
    for (double p : e.prob) total += p;
    CHECK(total == doctest::Approx(1.0));
    CHECK(e.prob[0b10110010] == 0.25);
  }
}

TEST_CASE("synthetic shapes") {
  Rng rng(2);
  const auto b = make_shapes_dataset(100, rng);
  CHECK(b.width == 8);
  CHECK(b.height == 8);
  CHECK(b.images.size() == 100);
  for (const auto& img : b.images) {
    int on = 0;
    for (auto v : img) {
      CHECK(v <= 1);
      on += v;
    }
    CHECK(on > 0);
    CHECK(on < 64);
  }
  const auto real = to_real(b);
  CHECK(real[0].size() == 64);
}
