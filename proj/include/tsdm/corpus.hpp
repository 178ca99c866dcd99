#pragma once

// Pool ingestion and synthetic experiment corpora: manifests, generators, and
// the deterministic coverage / fault oracle used in place of an instrumented
// system under test.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tsdm/compression.hpp"
#include "tsdm/distance.hpp"
#include "tsdm/selection.hpp"

namespace tsdm {

// ---------------------------------------------------------------------------
// Manifests
// ---------------------------------------------------------------------------

/// One manifest line: {"id": int, "path": str | "inline_hex": str, "label": str?}
struct ManifestEntry {
  std::size_t id = 0;
  std::optional<std::filesystem::path> path;
  std::optional<Bytes> inline_payload;
  std::optional<std::string> label;
};

/// A JSON-lines manifest. An optional first line without "id" may carry
/// {"codec": "name:level", "metadata": {...}}.
struct Manifest {
  std::vector<ManifestEntry> entries;
  std::optional<CodecId> codec;
  std::map<std::string, std::string> metadata;
};

/// Parses a manifest; relative paths stay relative (resolved by load_pool).
/// Throws IngestionError naming the offending line.
Manifest parse_manifest(std::istream& in, const std::string& source_name = "<manifest>");

/// Loads a pool from a manifest file or, when path is a directory, from its
/// regular files in byte-wise filename order. codec overrides the manifest's.
/// Throws IngestionError on missing files, duplicate or non-dense ids.
Pool load_pool(const std::filesystem::path& path, std::optional<CodecId> codec = std::nullopt);

/// Writes every payload inline as hex, so load_pool reproduces it bit-exactly.
void write_manifest(const Pool& pool, std::ostream& out,
                    const std::map<std::string, std::string>& metadata = {});
void write_manifest(const Pool& pool, const std::filesystem::path& path,
                    const std::map<std::string, std::string>& metadata = {});

std::string to_hex(ByteView bytes);
/// Throws IngestionError on odd length or non-hex characters.
Bytes from_hex(std::string_view hex);

/// "sha256:<hex>" over the length-prefixed payloads in id order.
std::string pool_digest(const Pool& pool);

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

enum class Grammar { balanced_xml_like, regex_like, random_bytes };

std::string to_string(Grammar grammar);
/// Accepts "balanced-xml-like", "regex-like", "random-bytes".
Grammar grammar_from_string(const std::string& text);

/// The 64 printable symbols '!' (0x21) through '`' (0x60). Random-bytes
/// payloads and the default synthetic SUT universe both draw from it.
const std::string& base_alphabet();

/// Payload lengths are uniform on [min_length, max_length].
struct GeneratorSpec {
  Grammar grammar = Grammar::random_bytes;
  std::size_t count = 0;
  std::size_t min_length = 0;
  std::size_t max_length = 0;
  std::uint64_t seed = 0;
};

/// Shortest payload the balanced-xml-like grammar can emit ("<a></a>").
inline constexpr std::size_t kMinXmlLength = 7;

/// Deterministic under spec.seed. Random-bytes payloads draw from
/// base_alphabet(); a log-uniform share between 0 and 7/8 of each payload
/// repeats earlier chunks of itself, so compressibility varies independently
/// of length. Throws GenerationError for unsatisfiable specs.
Pool generate_pool(const GeneratorSpec& spec, CodecId codec = {});

/// Generate-and-filter: draws candidates from spec (spec.count is ignored) and
/// keeps those within [target(1-tol), target(1+tol)] until `keep` are found.
/// Throws GenerationError if max_candidates draws are not enough.
Pool generate_filtered_pool(const GeneratorSpec& spec, std::size_t target, double tolerance,
                            std::size_t keep, std::size_t max_candidates = 1'000'000,
                            CodecId codec = {});

// ---------------------------------------------------------------------------
// Synthetic system under test
// ---------------------------------------------------------------------------

enum class SutKind { ngram_coverage, fault_panel };

std::string to_string(SutKind kind);
SutKind sut_kind_from_string(const std::string& text);

struct SyntheticSUT {
  SutKind kind = SutKind::ngram_coverage;
  /// n-gram width for ngram_coverage (1..8).
  std::size_t ngram_width = 2;
  /// Universe size for ngram_coverage, number of faults for fault_panel.
  std::size_t units = 256;
  std::string alphabet = base_alphabet();
  std::uint64_t seed = 0;
};

/// One seeded fault of the fault panel.
struct FaultPredicate {
  enum class Kind {
    substring,        ///< payload contains `symbols` as a substring
    distinct_symbols, ///< at least `threshold` of `symbols` occur in payload
    symbol_count,     ///< symbols[0] occurs at least `threshold` times
  };
  Kind kind = Kind::substring;
  std::string symbols;
  std::size_t threshold = 0;

  bool detects(ByteView payload) const;
  std::string describe() const;
};

/// The n-gram universe of an ngram_coverage SUT, in unit order.
std::vector<Bytes> ngram_universe(const SyntheticSUT& sut);
/// The faults of a fault_panel SUT, in unit order.
std::vector<FaultPredicate> fault_panel(const SyntheticSUT& sut);

/// Coverage row for one payload; a pure function of (sut, payload).
UnitSet synth_row(const SyntheticSUT& sut, ByteView payload);
CoverageMatrix synth_coverage(const SyntheticSUT& sut, const Pool& pool);

// ---------------------------------------------------------------------------
// Coverage CSV: header "id,<unit>,...", then one "id,0/1,..." row per test.
// ---------------------------------------------------------------------------

void write_coverage_csv(const CoverageMatrix& matrix, std::ostream& out);
void write_coverage_csv(const CoverageMatrix& matrix, const std::filesystem::path& path);
CoverageMatrix read_coverage_csv(std::istream& in, CoverageKind kind = CoverageKind::structural,
                                 const std::string& source_name = "<csv>");
CoverageMatrix read_coverage_csv(const std::filesystem::path& path,
                                 CoverageKind kind = CoverageKind::structural);

}  // namespace tsdm
