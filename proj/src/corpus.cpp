#include "tsdm/corpus.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <memory>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"

#include "tsdm/errors.hpp"
#include "tsdm/parallel.hpp"
#include "tsdm/random.hpp"

namespace tsdm {
namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Hex and digests
// ---------------------------------------------------------------------------

std::string to_hex(ByteView bytes) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (unsigned char c : bytes) {
    out.push_back(digits[c >> 4]);
    out.push_back(digits[c & 0xF]);
  }
  return out;
}

Bytes from_hex(std::string_view hex) {
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  if (hex.size() % 2 != 0) throw IngestionError("hex payload has odd length");
  Bytes out;
  out.reserve(hex.size() / 2);
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    const int hi = nibble(hex[i]);
    const int lo = nibble(hex[i + 1]);
    if (hi < 0 || lo < 0)
      throw IngestionError("hex payload has a non-hex character at offset " + std::to_string(i));
    out.push_back(static_cast<char>((hi << 4) | lo));
  }
  return out;
}

std::string pool_digest(const Pool& pool) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
    throw Error("sha256 initialisation failed");
  for (const auto& item : pool.items()) {
    std::array<unsigned char, 8> length{};
    std::uint64_t n = item.payload.size();
    for (auto& byte : length) {
      byte = static_cast<unsigned char>(n & 0xFF);
      n >>= 8;
    }
    EVP_DigestUpdate(ctx.get(), length.data(), length.size());
    EVP_DigestUpdate(ctx.get(), item.payload.data(), item.payload.size());
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int size = 0;
  EVP_DigestFinal_ex(ctx.get(), digest.data(), &size);
  return "sha256:" +
         to_hex(ByteView(reinterpret_cast<const char*>(digest.data()), static_cast<std::size_t>(size)));
}

// ---------------------------------------------------------------------------
// Manifests
// ---------------------------------------------------------------------------

namespace {

std::string location(const std::string& source, std::size_t line) {
  return source + ":" + std::to_string(line);
}

Bytes read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("cannot read file '" + path.string() + "'");
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

Manifest parse_manifest(std::istream& in, const std::string& source_name) {
  Manifest manifest;
  std::string line;
  std::size_t line_no = 0;
  bool seen_content = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = location(source_name, line_no);

    nlohmann::json value;
    try {
      value = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw IngestionError(where + ": malformed JSON: " + e.what());
    }
    if (!value.is_object()) throw IngestionError(where + ": entry must be a JSON object");

    if (!value.contains("id")) {
      if (seen_content || !(value.contains("codec") || value.contains("metadata")))
        throw IngestionError(where + ": entry has no \"id\"");
      if (value.contains("codec")) {
        if (!value["codec"].is_string())
          throw IngestionError(where + ": \"codec\" must be a string like \"zlib:9\"");
        try {
          manifest.codec = CodecId::parse(value["codec"].get<std::string>());
        } catch (const ConfigError& e) {
          throw IngestionError(where + ": " + e.what());
        }
      }
      if (value.contains("metadata")) {
        if (!value["metadata"].is_object())
          throw IngestionError(where + ": \"metadata\" must be an object");
        for (const auto& [key, v] : value["metadata"].items())
          manifest.metadata[key] = v.is_string() ? v.get<std::string>() : v.dump();
      }
      seen_content = true;
      continue;
    }
    seen_content = true;

    ManifestEntry entry;
    const auto& id = value["id"];
    if (!id.is_number_integer() || id.get<std::int64_t>() < 0)
      throw IngestionError(where + ": \"id\" must be a non-negative integer");
    entry.id = id.get<std::size_t>();

    const bool has_path = value.contains("path");
    const bool has_hex = value.contains("inline_hex");
    if (has_path == has_hex)
      throw IngestionError(where + ": entry id " + std::to_string(entry.id) +
                           " needs exactly one of \"path\" or \"inline_hex\"");
    if (has_path) {
      if (!value["path"].is_string())
        throw IngestionError(where + ": \"path\" must be a string");
      entry.path = fs::path(value["path"].get<std::string>());
    } else {
      if (!value["inline_hex"].is_string())
        throw IngestionError(where + ": \"inline_hex\" must be a string");
      try {
        entry.inline_payload = from_hex(value["inline_hex"].get<std::string>());
      } catch (const IngestionError& e) {
        throw IngestionError(where + ": entry id " + std::to_string(entry.id) + ": " + e.what());
      }
    }
    if (value.contains("label")) {
      if (!value["label"].is_string())
        throw IngestionError(where + ": \"label\" must be a string");
      entry.label = value["label"].get<std::string>();
    }
    manifest.entries.push_back(std::move(entry));
  }
  return manifest;
}

Pool load_pool(const fs::path& path, std::optional<CodecId> codec) {
  std::error_code ec;
  if (fs::is_directory(path, ec)) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(path))
      if (entry.is_regular_file()) files.push_back(entry.path());
    // Byte-wise filename order.
    std::sort(files.begin(), files.end(), [](const fs::path& a, const fs::path& b) {
      return a.filename().string() < b.filename().string();
    });
    std::vector<TestCase> items;
    for (const auto& file : files)
      items.push_back(TestCase{items.size(), read_file(file), file.filename().string()});
    return Pool(std::move(items), codec.value_or(CodecId{}));
  }

  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open manifest '" + path.string() + "'");
  Manifest manifest = parse_manifest(in, path.string());

  std::vector<const ManifestEntry*> by_id(manifest.entries.size(), nullptr);
  for (const auto& entry : manifest.entries) {
    if (entry.id >= by_id.size())
      throw IngestionError(path.string() + ": id " + std::to_string(entry.id) +
                           " breaks the dense 0.." + std::to_string(by_id.size() - 1) + " range");
    if (by_id[entry.id])
      throw IngestionError(path.string() + ": duplicate id " + std::to_string(entry.id));
    by_id[entry.id] = &entry;
  }

  const fs::path base = path.parent_path();
  std::vector<TestCase> items;
  items.reserve(by_id.size());
  for (const ManifestEntry* entry : by_id) {
    TestCase item{entry->id, {}, entry->label};
    if (entry->inline_payload) {
      item.payload = *entry->inline_payload;
    } else {
      const fs::path file = entry->path->is_absolute() ? *entry->path : base / *entry->path;
      std::ifstream data(file, std::ios::binary);
      if (!data)
        throw IngestionError("entry id " + std::to_string(entry->id) + ": cannot read file '" +
                             file.string() + "'");
      item.payload.assign(std::istreambuf_iterator<char>(data), std::istreambuf_iterator<char>());
    }
    items.push_back(std::move(item));
  }
  return Pool(std::move(items), codec.value_or(manifest.codec.value_or(CodecId{})));
}

void write_manifest(const Pool& pool, std::ostream& out,
                    const std::map<std::string, std::string>& metadata) {
  ordered_json header;
  header["codec"] = pool.codec().to_string();
  header["metadata"] = ordered_json::object();
  for (const auto& [key, value] : metadata) header["metadata"][key] = value;
  out << header.dump() << '\n';
  for (const auto& item : pool.items()) {
    ordered_json entry;
    entry["id"] = item.id;
    entry["inline_hex"] = to_hex(item.payload);
    if (item.label) entry["label"] = *item.label;
    out << entry.dump() << '\n';
  }
}

void write_manifest(const Pool& pool, const fs::path& path,
                    const std::map<std::string, std::string>& metadata) {
  std::ofstream out(path);
  if (!out) throw IngestionError("cannot write manifest '" + path.string() + "'");
  write_manifest(pool, out, metadata);
}

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

std::string to_string(Grammar grammar) {
  switch (grammar) {
    case Grammar::balanced_xml_like: return "balanced-xml-like";
    case Grammar::regex_like: return "regex-like";
    case Grammar::random_bytes: return "random-bytes";
  }
  return "?";
}

Grammar grammar_from_string(const std::string& text) {
  if (text == "balanced-xml-like") return Grammar::balanced_xml_like;
  if (text == "regex-like") return Grammar::regex_like;
  if (text == "random-bytes") return Grammar::random_bytes;
  throw ConfigError("unknown grammar '" + text +
                    "' (expected balanced-xml-like, regex-like or random-bytes)");
}

const std::string& base_alphabet() {
  static const std::string alphabet = [] {
    std::string s;
    for (char c = '!'; c <= '`'; ++c) s.push_back(c);
    return s;
  }();
  return alphabet;
}

namespace {

constexpr std::string_view kLetters = "abcdefghijklmnopqrstuvwxyz";
constexpr std::string_view kTextSymbols =
    "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789 .,;:=-_";
constexpr std::string_view kRegexLiterals = "abcdefghijklmnopqrstuvwxyz0123456789";

char pick(Rng& rng, std::string_view symbols) { return symbols[rng.below(symbols.size())]; }

Bytes random_bytes_payload(Rng& rng, std::size_t length) {
  constexpr std::size_t kMinChunk = 4, kMaxChunk = 16;
  constexpr double kMeanChunk = (kMinChunk + kMaxChunk) / 2.0;
  constexpr double kSpan = 8;
  // Fraction of fresh symbols is log-uniform on [1/kSpan, 1]; the rest are
  // copies of earlier chunks of the same payload.
  const double fresh = std::exp2(-std::log2(kSpan) * rng.unit());
  const double copy_probability = (1 - fresh) / (1 + (kMeanChunk - 1) * fresh);
  const std::string& base = base_alphabet();

  Bytes out;
  out.reserve(length);
  while (out.size() < length) {
    if (out.size() >= kMinChunk && rng.unit() < copy_probability) {
      const auto chunk = std::min({static_cast<std::size_t>(rng.between(kMinChunk, kMaxChunk)),
                                   length - out.size(), out.size()});
      const auto start = static_cast<std::size_t>(rng.below(out.size() - chunk + 1));
      for (std::size_t i = 0; i < chunk; ++i) out.push_back(out[start + i]);
    } else {
      out.push_back(base[rng.below(base.size())]);
    }
  }
  return out;
}

void xml_text(Rng& rng, std::size_t length, Bytes& out) {
  for (std::size_t i = 0; i < length; ++i) out.push_back(pick(rng, kTextSymbols));
}

void xml_element(Rng& rng, std::size_t length, Bytes& out);

// Mixed content of exactly `length` bytes.
void xml_content(Rng& rng, std::size_t length, Bytes& out) {
  while (length > 0) {
    if (length >= kMinXmlLength && rng.below(2) == 0) {
      const auto child = static_cast<std::size_t>(
          rng.between(static_cast<std::int64_t>(kMinXmlLength), static_cast<std::int64_t>(length)));
      xml_element(rng, child, out);
      length -= child;
    } else {
      const auto text = static_cast<std::size_t>(
          rng.between(1, static_cast<std::int64_t>(std::min<std::size_t>(length, 16))));
      xml_text(rng, text, out);
      length -= text;
    }
  }
}

// <name>content</name> of exactly `length` >= 7 bytes.
void xml_element(Rng& rng, std::size_t length, Bytes& out) {
  const std::size_t max_name = std::min<std::size_t>(3, (length - 5) / 2);
  const auto name_len = static_cast<std::size_t>(rng.between(1, static_cast<std::int64_t>(max_name)));
  std::string name;
  for (std::size_t i = 0; i < name_len; ++i) name.push_back(pick(rng, kLetters));
  out += '<' + name + '>';
  xml_content(rng, length - (2 * name_len + 5), out);
  out += "</" + name + '>';
}

Bytes xml_payload(Rng& rng, std::size_t length) {
  Bytes out;
  out.reserve(length);
  xml_element(rng, length, out);
  return out;
}

void regex_sequence(Rng& rng, std::size_t length, Bytes& out) {
  const std::size_t end = out.size() + length;
  bool quantifiable = false;
  while (out.size() < end) {
    const std::size_t remaining = end - out.size();
    const auto roll = rng.below(10);
    if (roll == 0 && remaining >= 3) {
      const auto inner = static_cast<std::size_t>(
          rng.between(1, static_cast<std::int64_t>(std::min<std::size_t>(remaining - 2, 12))));
      out.push_back('(');
      const std::size_t start = out.size();
      regex_sequence(rng, inner, out);
      // Turn an unquantified middle literal into an alternation.
      const std::size_t at = start + inner / 2;
      if (inner >= 3 && kRegexLiterals.find(out[at]) != std::string_view::npos &&
          std::string_view("*+?").find(out[at + 1]) == std::string_view::npos && rng.below(2) == 0)
        out[at] = '|';
      out.push_back(')');
      quantifiable = true;
    } else if (roll <= 2 && remaining >= 3) {
      const auto members = static_cast<std::size_t>(
          rng.between(1, static_cast<std::int64_t>(std::min<std::size_t>(remaining - 2, 5))));
      out.push_back('[');
      for (std::size_t i = 0; i < members; ++i) out.push_back(pick(rng, kRegexLiterals));
      out.push_back(']');
      quantifiable = true;
    } else if (roll == 3 && quantifiable) {
      out.push_back(pick(rng, "*+?"));
      quantifiable = false;
    } else if (roll == 4) {
      out.push_back('.');
      quantifiable = true;
    } else {
      out.push_back(pick(rng, kRegexLiterals));
      quantifiable = true;
    }
  }
}

Bytes regex_payload(Rng& rng, std::size_t length) {
  Bytes out;
  out.reserve(length);
  regex_sequence(rng, length, out);
  return out;
}

void check_spec(const GeneratorSpec& spec) {
  if (spec.min_length > spec.max_length)
    throw GenerationError("length range [" + std::to_string(spec.min_length) + ", " +
                          std::to_string(spec.max_length) + "] is empty");
  if (spec.grammar == Grammar::balanced_xml_like && spec.min_length < kMinXmlLength)
    throw GenerationError("balanced-xml-like payloads need at least " +
                          std::to_string(kMinXmlLength) + " bytes; min_length is " +
                          std::to_string(spec.min_length));
}

// Payload i of a spec; each index has its own random stream.
Bytes generate_one(const GeneratorSpec& spec, std::size_t index) {
  Rng rng(spec.seed, index);
  const auto length = static_cast<std::size_t>(rng.between(
      static_cast<std::int64_t>(spec.min_length), static_cast<std::int64_t>(spec.max_length)));
  switch (spec.grammar) {
    case Grammar::balanced_xml_like: return xml_payload(rng, length);
    case Grammar::regex_like: return regex_payload(rng, length);
    case Grammar::random_bytes: return random_bytes_payload(rng, length);
  }
  throw GenerationError("unknown grammar");
}

}  // namespace

Pool generate_pool(const GeneratorSpec& spec, CodecId codec) {
  if (spec.count < 1) throw GenerationError("count must be at least 1");
  check_spec(spec);
  std::vector<Bytes> payloads(spec.count);
  parallel_for(spec.count, [&](std::size_t i) { payloads[i] = generate_one(spec, i); });
  return Pool(std::move(payloads), std::move(codec));
}

Pool generate_filtered_pool(const GeneratorSpec& spec, std::size_t target, double tolerance,
                            std::size_t keep, std::size_t max_candidates, CodecId codec) {
  check_spec(spec);
  if (!(tolerance >= 0)) throw GenerationError("tolerance must be >= 0");
  const double t = static_cast<double>(target);
  const double lo = std::ceil(t * (1.0 - tolerance) - 1e-9);
  const double hi = std::floor(t * (1.0 + tolerance) + 1e-9);
  if (hi < static_cast<double>(spec.min_length) || lo > static_cast<double>(spec.max_length))
    throw GenerationError("target band does not intersect the generator's length range");

  std::vector<TestCase> items;
  for (std::size_t i = 0; i < max_candidates && items.size() < keep; ++i) {
    Bytes payload = generate_one(spec, i);
    const auto len = static_cast<double>(payload.size());
    if (len >= lo && len <= hi)
      items.push_back(TestCase{items.size(), std::move(payload), "candidate " + std::to_string(i)});
  }
  if (items.size() < keep)
    throw GenerationError("only " + std::to_string(items.size()) + " of " + std::to_string(keep) +
                          " inputs fell in the length band after " +
                          std::to_string(max_candidates) + " candidates");
  return Pool(std::move(items), std::move(codec));
}

// ---------------------------------------------------------------------------
// Synthetic SUT
// ---------------------------------------------------------------------------

std::string to_string(SutKind kind) {
  return kind == SutKind::ngram_coverage ? "ngram-coverage" : "fault-panel";
}

SutKind sut_kind_from_string(const std::string& text) {
  if (text == "ngram-coverage") return SutKind::ngram_coverage;
  if (text == "fault-panel") return SutKind::fault_panel;
  throw ConfigError("unknown SUT kind '" + text + "' (expected ngram-coverage or fault-panel)");
}

bool FaultPredicate::detects(ByteView payload) const {
  switch (kind) {
    case Kind::substring:
      return payload.find(symbols) != ByteView::npos;
    case Kind::distinct_symbols: {
      std::size_t present = 0;
      for (char c : symbols)
        if (payload.find(c) != ByteView::npos) ++present;
      return present >= threshold;
    }
    case Kind::symbol_count:
      return static_cast<std::size_t>(std::count(payload.begin(), payload.end(), symbols[0])) >=
             threshold;
  }
  return false;
}

std::string FaultPredicate::describe() const {
  switch (kind) {
    case Kind::substring: return "contains \"" + symbols + "\"";
    case Kind::distinct_symbols:
      return "at least " + std::to_string(threshold) + " of \"" + symbols + "\"";
    case Kind::symbol_count:
      return "'" + symbols + "' at least " + std::to_string(threshold) + " times";
  }
  return "?";
}

namespace {

std::string checked_alphabet(const SyntheticSUT& sut) {
  std::string alphabet = sut.alphabet;
  std::sort(alphabet.begin(), alphabet.end());
  if (alphabet.empty() || std::adjacent_find(alphabet.begin(), alphabet.end()) != alphabet.end())
    throw ConfigError("SUT alphabet must be non-empty with distinct symbols");
  return sut.alphabet;
}

std::uint64_t pack(ByteView gram) {
  std::uint64_t key = 0;
  for (unsigned char c : gram) key = (key << 8) | c;
  return key;
}

// Universe lookup shared by synth_row and synth_coverage.
class NgramIndex {
 public:
  explicit NgramIndex(const SyntheticSUT& sut) : width_(sut.ngram_width), units_(sut.units) {
    const auto universe = ngram_universe(sut);
    for (std::size_t u = 0; u < universe.size(); ++u) unit_of_[pack(universe[u])] = u;
  }

  UnitSet row(ByteView payload) const {
    UnitSet covered(units_);
    if (payload.size() < width_) return covered;
    for (std::size_t i = 0; i + width_ <= payload.size(); ++i) {
      const auto it = unit_of_.find(pack(payload.substr(i, width_)));
      if (it != unit_of_.end()) covered.set(it->second);
    }
    return covered;
  }

 private:
  std::size_t width_;
  std::size_t units_;
  std::unordered_map<std::uint64_t, std::size_t> unit_of_;
};

UnitSet fault_row(const std::vector<FaultPredicate>& faults, ByteView payload) {
  UnitSet detected(faults.size());
  for (std::size_t f = 0; f < faults.size(); ++f)
    if (faults[f].detects(payload)) detected.set(f);
  return detected;
}

std::vector<std::string> unit_names(const SyntheticSUT& sut) {
  std::vector<std::string> names;
  if (sut.kind == SutKind::ngram_coverage) {
    for (const auto& gram : ngram_universe(sut)) names.push_back("ng_" + to_hex(gram));
  } else {
    for (std::size_t f = 0; f < sut.units; ++f) {
      std::string digits = std::to_string(f);
      if (digits.size() < 2) digits.insert(0, 2 - digits.size(), '0');
      names.push_back("fault_" + digits);
    }
  }
  return names;
}

}  // namespace

std::vector<Bytes> ngram_universe(const SyntheticSUT& sut) {
  if (sut.ngram_width < 1 || sut.ngram_width > 8)
    throw ConfigError("n-gram width must be in 1..8, got " + std::to_string(sut.ngram_width));
  const std::string alphabet = checked_alphabet(sut);

  // |alphabet|^width, saturating.
  double possible = 1;
  for (std::size_t i = 0; i < sut.ngram_width; ++i) possible *= static_cast<double>(alphabet.size());
  if (static_cast<double>(sut.units) > possible)
    throw ConfigError("universe of " + std::to_string(sut.units) + " units exceeds the " +
                      std::to_string(static_cast<std::uint64_t>(possible)) +
                      " distinct n-grams available");

  Rng rng(sut.seed, 0);
  std::vector<Bytes> universe;
  std::unordered_set<std::uint64_t> seen;
  while (universe.size() < sut.units) {
    Bytes gram;
    for (std::size_t i = 0; i < sut.ngram_width; ++i) gram.push_back(pick(rng, alphabet));
    if (seen.insert(pack(gram)).second) universe.push_back(std::move(gram));
  }
  return universe;
}

std::vector<FaultPredicate> fault_panel(const SyntheticSUT& sut) {
  const std::string alphabet = checked_alphabet(sut);
  if (alphabet.size() < 16) throw ConfigError("fault panel needs an alphabet of at least 16 symbols");

  auto sample = [&](Rng& rng, std::size_t count) {
    std::string symbols = alphabet;
    for (std::size_t i = 0; i < count; ++i)
      std::swap(symbols[i], symbols[i + rng.below(symbols.size() - i)]);
    symbols.resize(count);
    return symbols;
  };

  Rng rng(sut.seed, 1);
  std::vector<FaultPredicate> faults;
  for (std::size_t f = 0; f < sut.units; ++f) {
    FaultPredicate p;
    switch (f % 4) {
      case 0:
        p.kind = FaultPredicate::Kind::substring;
        p.symbols = {pick(rng, alphabet), pick(rng, alphabet)};
        break;
      case 1:
        p.kind = FaultPredicate::Kind::distinct_symbols;
        p.symbols = sample(rng, 8);
        p.threshold = static_cast<std::size_t>(rng.between(4, 7));
        break;
      case 2:
        p.kind = FaultPredicate::Kind::distinct_symbols;
        p.symbols = sample(rng, 16);
        p.threshold = static_cast<std::size_t>(rng.between(8, 12));
        break;
      default:
        p.kind = FaultPredicate::Kind::symbol_count;
        p.symbols = std::string(1, pick(rng, alphabet));
        p.threshold = static_cast<std::size_t>(rng.between(2, 4));
        break;
    }
    faults.push_back(std::move(p));
  }
  return faults;
}

UnitSet synth_row(const SyntheticSUT& sut, ByteView payload) {
  if (sut.kind == SutKind::ngram_coverage) return NgramIndex(sut).row(payload);
  return fault_row(fault_panel(sut), payload);
}

CoverageMatrix synth_coverage(const SyntheticSUT& sut, const Pool& pool) {
  std::vector<UnitSet> rows(pool.size());
  if (sut.kind == SutKind::ngram_coverage) {
    const NgramIndex index(sut);
    parallel_for(pool.size(), [&](std::size_t i) { rows[i] = index.row(pool.payload(i)); });
    return CoverageMatrix(unit_names(sut), std::move(rows), CoverageKind::structural);
  }
  const auto faults = fault_panel(sut);
  parallel_for(pool.size(), [&](std::size_t i) { rows[i] = fault_row(faults, pool.payload(i)); });
  return CoverageMatrix(unit_names(sut), std::move(rows), CoverageKind::fault);
}

// ---------------------------------------------------------------------------
// Coverage CSV
// ---------------------------------------------------------------------------

void write_coverage_csv(const CoverageMatrix& matrix, std::ostream& out) {
  out << "id";
  for (const auto& name : matrix.unit_names()) {
    if (name.find_first_of(",\"\r\n") != std::string::npos)
      throw UsageError("unit name '" + name + "' cannot be written to CSV unquoted");
    out << ',' << name;
  }
  out << '\n';
  for (std::size_t id = 0; id < matrix.tests(); ++id) {
    out << id;
    const auto& row = matrix.row(id);
    for (std::size_t u = 0; u < matrix.units(); ++u) out << (row.test(u) ? ",1" : ",0");
    out << '\n';
  }
}

void write_coverage_csv(const CoverageMatrix& matrix, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IngestionError("cannot write coverage CSV '" + path.string() + "'");
  write_coverage_csv(matrix, out);
}

namespace {

std::vector<std::string> split_csv_line(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> cells;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    cells.push_back(line.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

}  // namespace

CoverageMatrix read_coverage_csv(std::istream& in, CoverageKind kind,
                                 const std::string& source_name) {
  std::string line;
  if (!std::getline(in, line)) throw IngestionError(source_name + ": empty coverage CSV");
  auto header = split_csv_line(line);
  if (header.empty() || header.front() != "id")
    throw IngestionError(source_name + ":1: header must start with \"id\"");
  std::vector<std::string> names(header.begin() + 1, header.end());

  std::vector<UnitSet> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = location(source_name, line_no);
    const auto cells = split_csv_line(line);
    if (cells.size() != names.size() + 1)
      throw IngestionError(where + ": expected " + std::to_string(names.size() + 1) +
                           " cells, found " + std::to_string(cells.size()));
    if (cells[0] != std::to_string(rows.size()))
      throw IngestionError(where + ": expected test id " + std::to_string(rows.size()) +
                           ", found '" + cells[0] + "'");
    UnitSet row(names.size());
    for (std::size_t u = 0; u < names.size(); ++u) {
      const auto& cell = cells[u + 1];
      if (cell == "1") {
        row.set(u);
      } else if (cell != "0") {
        throw IngestionError(where + ": cell for unit '" + names[u] + "' must be 0 or 1");
      }
    }
    rows.push_back(std::move(row));
  }
  return CoverageMatrix(std::move(names), std::move(rows), kind);
}

CoverageMatrix read_coverage_csv(const fs::path& path, CoverageKind kind) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open coverage CSV '" + path.string() + "'");
  return read_coverage_csv(in, kind, path.string());
}

}  // namespace tsdm
