#include "tsdm/compression.hpp"

#include <lzma.h>
#include <zlib.h>

#include <algorithm>
#include <array>
#include <sstream>

#include "tsdm/errors.hpp"

namespace tsdm {
namespace {

enum class Backend { zlib_container, raw_deflate, gzip_container, xz };

struct CodecEntry {
  CodecInfo info;
  Backend backend;
};

const std::vector<CodecEntry>& codec_table() {
  static const std::vector<CodecEntry> table = {
      {{"zlib", 0, 9, 9, "DEFLATE in a zlib container"}, Backend::zlib_container},
      {{"deflate", 0, 9, 9, "raw DEFLATE stream, no container"}, Backend::raw_deflate},
      {{"gzip", 0, 9, 9, "DEFLATE in a gzip container"}, Backend::gzip_container},
      {{"xz", 0, 9, 6, "LZMA2 in an xz container, no integrity check"}, Backend::xz},
  };
  return table;
}

const CodecEntry& lookup(const std::string& name) {
  const auto& table = codec_table();
  auto it = std::find_if(table.begin(), table.end(),
                         [&](const CodecEntry& e) { return e.info.name == name; });
  if (it == table.end()) {
    std::ostringstream msg;
    msg << "unknown codec '" << name << "'; registered:";
    for (const auto& e : table) msg << ' ' << e.info.name;
    throw ConfigError(msg.str());
  }
  return *it;
}

// Output is counted through a fixed scratch buffer; only its length matters.
constexpr std::size_t kScratchBytes = 1 << 16;

CompressedLength deflate_length(ByteView data, int level, int window_bits) {
  z_stream stream{};
  if (deflateInit2(&stream, level, Z_DEFLATED, window_bits, 8, Z_DEFAULT_STRATEGY) != Z_OK)
    throw Error("zlib: deflateInit2 failed");

  std::array<unsigned char, kScratchBytes> scratch;
  std::size_t produced = 0;
  // zlib takes uInt lengths; feed very large inputs in slices.
  std::size_t offset = 0;
  int rc = Z_OK;
  do {
    const std::size_t slice = std::min<std::size_t>(data.size() - offset, 1u << 30);
    stream.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data() + offset));
    stream.avail_in = static_cast<uInt>(slice);
    offset += slice;
    const int flush = offset == data.size() ? Z_FINISH : Z_NO_FLUSH;
    do {
      stream.next_out = scratch.data();
      stream.avail_out = static_cast<uInt>(scratch.size());
      rc = deflate(&stream, flush);
      if (rc == Z_STREAM_ERROR) {
        deflateEnd(&stream);
        throw Error("zlib: deflate failed");
      }
      produced += scratch.size() - stream.avail_out;
    } while (stream.avail_out == 0);
  } while (offset < data.size());
  deflateEnd(&stream);
  if (rc != Z_STREAM_END) throw Error("zlib: stream did not finish");
  return produced;
}

CompressedLength xz_length(ByteView data, int level) {
  lzma_stream stream = LZMA_STREAM_INIT;
  if (lzma_easy_encoder(&stream, static_cast<uint32_t>(level), LZMA_CHECK_NONE) != LZMA_OK)
    throw Error("xz: encoder initialisation failed");

  std::array<std::uint8_t, kScratchBytes> scratch;
  std::size_t produced = 0;
  stream.next_in = reinterpret_cast<const std::uint8_t*>(data.data());
  stream.avail_in = data.size();
  lzma_ret rc;
  do {
    stream.next_out = scratch.data();
    stream.avail_out = scratch.size();
    rc = lzma_code(&stream, LZMA_FINISH);
    produced += scratch.size() - stream.avail_out;
  } while (rc == LZMA_OK);
  lzma_end(&stream);
  if (rc != LZMA_STREAM_END) throw Error("xz: encoding failed");
  return produced;
}

}  // namespace

CodecId::CodecId() : CodecId("zlib") {}

CodecId::CodecId(std::string name) : name_(std::move(name)) {
  level_ = lookup(name_).info.default_level;
}

CodecId::CodecId(std::string name, int level) : name_(std::move(name)), level_(level) {
  const auto& info = lookup(name_).info;
  if (level < info.min_level || level > info.max_level) {
    std::ostringstream msg;
    msg << "codec '" << name_ << "' level " << level << " outside [" << info.min_level << ", "
        << info.max_level << "]";
    throw ConfigError(msg.str());
  }
}

std::string CodecId::to_string() const { return name_ + ":" + std::to_string(level_); }

CodecId CodecId::parse(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) return CodecId(std::string(text));
  const std::string level_text(text.substr(colon + 1));
  std::size_t used = 0;
  int level = 0;
  try {
    level = std::stoi(level_text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != level_text.size())
    throw ConfigError("codec level '" + level_text + "' is not an integer");
  return CodecId(std::string(text.substr(0, colon)), level);
}

const std::vector<CodecInfo>& registered_codecs() {
  static const std::vector<CodecInfo> infos = [] {
    std::vector<CodecInfo> out;
    for (const auto& e : codec_table()) out.push_back(e.info);
    return out;
  }();
  return infos;
}

CompressedLength compressed_length(const CodecId& codec, ByteView data) {
  switch (lookup(codec.name()).backend) {
    case Backend::zlib_container:
      return deflate_length(data, codec.level(), MAX_WBITS);
    case Backend::raw_deflate:
      return deflate_length(data, codec.level(), -MAX_WBITS);
    case Backend::gzip_container:
      return deflate_length(data, codec.level(), MAX_WBITS + 16);
    case Backend::xz:
      return xz_length(data, codec.level());
  }
  throw Error("unreachable codec backend");
}

CompressedLength concat_length(const CodecId& codec, std::span<const ByteView> parts) {
  if (parts.empty()) throw UsageError("concat_length: parts must not be empty");
  if (parts.size() == 1) return compressed_length(codec, parts.front());

  thread_local Bytes buffer;
  buffer.clear();
  std::size_t total = 0;
  for (ByteView part : parts) total += part.size();
  buffer.reserve(total);
  for (ByteView part : parts) buffer.append(part);
  return compressed_length(codec, buffer);
}

CompressedLength empty_overhead(const CodecId& codec) { return compressed_length(codec, {}); }

}  // namespace tsdm
