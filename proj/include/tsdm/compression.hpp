#pragma once

// Compressed-length measurement: the only stand-in for Kolmogorov complexity
// used by the distance and selection code.

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tsdm {

using Bytes = std::string;
using ByteView = std::string_view;

/// Length in bytes of a compressed encoding.
using CompressedLength = std::size_t;

/// Inputs larger than this exceed the DEFLATE window; NCD on them is unreliable.
inline constexpr std::size_t kLargeInputWarningBytes = 32 * 1024;

/// A registered codec and its effort level. Construction validates both, so a
/// CodecId that exists is always usable.
class CodecId {
 public:
  /// Default codec: zlib at maximum level.
  CodecId();
  /// Throws ConfigError for an unregistered name or an out-of-range level.
  CodecId(std::string name, int level);
  /// Uses the codec's default level.
  explicit CodecId(std::string name);

  const std::string& name() const { return name_; }
  int level() const { return level_; }
  /// "name:level", the form recorded in reports.
  std::string to_string() const;
  /// Inverse of to_string(); a bare "name" takes the default level.
  static CodecId parse(std::string_view text);

  friend bool operator==(const CodecId&, const CodecId&) = default;

 private:
  std::string name_;
  int level_;
};

struct CodecInfo {
  std::string name;
  int min_level;
  int max_level;
  int default_level;
  std::string description;
};

/// All registered codecs, in a fixed order.
const std::vector<CodecInfo>& registered_codecs();

/// Compressed size of data. Thread-safe; each call uses its own codec state.
CompressedLength compressed_length(const CodecId& codec, ByteView data);

/// Compressed size of the byte-wise concatenation of parts, in order, with no
/// delimiter. Throws UsageError for an empty list.
CompressedLength concat_length(const CodecId& codec, std::span<const ByteView> parts);

/// compressed_length of the empty string: the codec's fixed overhead h.
CompressedLength empty_overhead(const CodecId& codec);

}  // namespace tsdm
