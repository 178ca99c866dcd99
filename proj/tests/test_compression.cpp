#include <gtest/gtest.h>

#include <cstdint>
#include <string>
#include <vector>

#include "support/oracles.hpp"
#include "tsdm/compression.hpp"
#include "tsdm/errors.hpp"

using namespace tsdm;

TEST(Compression, MatchesZlibOneShot) {
  const CodecId codec;
  for (std::size_t n : {0u, 1u, 17u, 1024u, 40000u}) {
    const auto data = oracle::random_bytes(n + 3, n);
    EXPECT_EQ(compressed_length(codec, data), oracle::zlib_length(data)) << n;
  }
}

TEST(Compression, EmptyInputIsOverhead) {
  const CodecId codec;
  EXPECT_EQ(compressed_length(codec, ""), empty_overhead(codec));
  EXPECT_EQ(empty_overhead(codec), oracle::zlib_length(""));
}

TEST(Compression, RepetitiveInputCompressesHard) {
  EXPECT_LT(compressed_length(CodecId{}, std::string(10000, 'a')), 100u);
}

TEST(Compression, SelfConcatenationIsCheap) {
  const CodecId codec;
  const auto x = oracle::random_bytes(7, 1024);
  const std::vector<ByteView> parts{x, x};
  EXPECT_LT(concat_length(codec, parts), 2 * compressed_length(codec, x) - empty_overhead(codec));
}

TEST(Compression, ApproximateSubadditivity) {
  const CodecId codec;
  for (std::uint64_t i = 0; i < 100; ++i) {
    const auto x = oracle::random_bytes(1000 + i, 50 + (i * 37) % 900);
    const auto y = oracle::random_bytes(5000 + i, 30 + (i * 53) % 700);
    const std::vector<ByteView> parts{x, y};
    EXPECT_LE(concat_length(codec, parts), compressed_length(codec, x) + compressed_length(codec, y) + 64);
  }
}

TEST(Compression, ConcatenationIsOrderedWithoutDelimiter) {
  const CodecId codec;
  const std::string a = "hello ", b = "world";
  const std::vector<ByteView> ab{a, b}, ba{b, a};
  EXPECT_EQ(concat_length(codec, ab), oracle::zlib_length(a + b));
  EXPECT_EQ(concat_length(codec, ba), oracle::zlib_length(b + a));
}

TEST(Compression, EmptyPartListIsRejected) {
  EXPECT_THROW(concat_length(CodecId{}, std::span<const ByteView>{}), UsageError);
}

TEST(Compression, Deterministic) {
  const auto data = oracle::random_bytes(11, 5000);
  for (const auto& info : registered_codecs()) {
    const CodecId codec(info.name);
    EXPECT_EQ(compressed_length(codec, data), compressed_length(codec, data)) << info.name;
  }
}

TEST(Compression, CodecRegistry) {
  EXPECT_EQ(CodecId{}.to_string(), "zlib:9");
  EXPECT_THROW(CodecId("nope"), ConfigError);
  EXPECT_THROW(CodecId("zlib", 42), ConfigError);
  EXPECT_EQ(CodecId::parse("xz:3"), CodecId("xz", 3));
  EXPECT_EQ(CodecId::parse("zlib"), CodecId{});
  EXPECT_THROW(CodecId::parse("zlib:x"), ConfigError);
  for (const auto& info : registered_codecs()) {
    const CodecId codec(info.name, info.default_level);
    EXPECT_EQ(CodecId::parse(codec.to_string()), codec);
    EXPECT_LT(compressed_length(codec, std::string(10000, 'q')), 200u) << info.name;
  }
}

TEST(Compression, RawDeflateAndGzipFraming) {
  const auto data = oracle::random_bytes(21, 3000);
  const auto z = compressed_length(CodecId("zlib", 9), data);
  // zlib wraps deflate in a 2-byte header and 4-byte trailer, gzip in 10 + 8.
  EXPECT_EQ(compressed_length(CodecId("deflate", 9), data) + 6, z);
  EXPECT_EQ(compressed_length(CodecId("gzip", 9), data), z + 12);
}
