#include <gtest/gtest.h>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "support/oracles.hpp"
#include "tsdm/corpus.hpp"
#include "tsdm/errors.hpp"
#include "tsdm/evaluation.hpp"

using namespace tsdm;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("tsdm_corpus_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& path, const std::string& data) {
  std::ofstream(path, std::ios::binary) << data;
}

// Minimal checker for the xml-like grammar: <name>content</name> where content
// mixes text and nested elements.
bool balanced(const std::string& s, std::size_t& i) {
  if (i >= s.size() || s[i] != '<') return false;
  const auto close = s.find('>', i);
  if (close == std::string::npos) return false;
  const std::string name = s.substr(i + 1, close - i - 1);
  if (name.empty() || name[0] == '/') return false;
  i = close + 1;
  while (i < s.size()) {
    if (s.compare(i, 2, "</") == 0) {
      const std::string end = "</" + name + ">";
      if (s.compare(i, end.size(), end) != 0) return false;
      i += end.size();
      return true;
    }
    if (s[i] == '<') {
      if (!balanced(s, i)) return false;
    } else {
      ++i;
    }
  }
  return false;
}

bool balanced_document(const std::string& s) {
  std::size_t i = 0;
  return balanced(s, i) && i == s.size();
}

}  // namespace

TEST(Manifest, LoadsPathsInlineAndLabels) {
  const auto dir = scratch_dir("manifest");
  write_file(dir / "a.bin", "alpha");
  write_file(dir / "b.bin", std::string("be\0ta", 5));
  write_file(dir / "pool.jsonl",
             "{\"id\": 0, \"path\": \"a.bin\", \"label\": \"first\"}\n"
             "{\"id\": 1, \"path\": \"b.bin\"}\n"
             "{\"id\": 2, \"inline_hex\": \"6869\"}\n");
  const auto pool = load_pool(dir / "pool.jsonl");
  ASSERT_EQ(pool.size(), 3u);
  EXPECT_EQ(pool[0].payload, "alpha");
  EXPECT_EQ(pool[0].label, "first");
  EXPECT_EQ(pool[1].payload, std::string("be\0ta", 5));
  EXPECT_EQ(pool[2].payload, "hi");
}

TEST(Manifest, MissingFileNamesThePath) {
  const auto dir = scratch_dir("missing");
  write_file(dir / "pool.jsonl", "{\"id\": 0, \"path\": \"nowhere.bin\"}\n");
  try {
    load_pool(dir / "pool.jsonl");
    FAIL() << "expected IngestionError";
  } catch (const IngestionError& e) {
    EXPECT_NE(std::string(e.what()).find("nowhere.bin"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("id 0"), std::string::npos) << e.what();
  }
}

TEST(Manifest, DuplicateAndSparseIdsAreRejected) {
  const auto dir = scratch_dir("dup");
  write_file(dir / "dup.jsonl", "{\"id\": 0, \"inline_hex\": \"00\"}\n{\"id\": 0, \"inline_hex\": \"01\"}\n");
  EXPECT_THROW(load_pool(dir / "dup.jsonl"), IngestionError);
  write_file(dir / "gap.jsonl", "{\"id\": 0, \"inline_hex\": \"00\"}\n{\"id\": 2, \"inline_hex\": \"01\"}\n");
  EXPECT_THROW(load_pool(dir / "gap.jsonl"), IngestionError);
  write_file(dir / "bad.jsonl", "{\"id\": 0, \"inline_hex\": \"0\"}\n");
  EXPECT_THROW(load_pool(dir / "bad.jsonl"), IngestionError);
  std::istringstream syntax("{\"id\": 0,\n");
  try {
    parse_manifest(syntax, "m.jsonl");
    FAIL();
  } catch (const IngestionError& e) {
    EXPECT_NE(std::string(e.what()).find("m.jsonl:1"), std::string::npos) << e.what();
  }
}

TEST(Manifest, DirectoryModeSortsByFilename) {
  const auto dir = scratch_dir("dirmode");
  write_file(dir / "b", "second");
  write_file(dir / "B", "first");
  write_file(dir / "c", "third");
  const auto pool = load_pool(dir);
  ASSERT_EQ(pool.size(), 3u);
  EXPECT_EQ(pool[0].payload, "first");
  EXPECT_EQ(pool[1].payload, "second");
  EXPECT_EQ(pool[2].payload, "third");
  EXPECT_EQ(pool[2].label, "c");
}

TEST(Manifest, RoundTripIsBitExact) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    std::vector<Bytes> xs;
    for (std::size_t i = 0; i < 1 + s * 3; ++i) xs.push_back(oracle::random_bytes(s * 100 + i, i * 13));
    const Pool pool(xs, CodecId("xz", 4));
    const auto path = scratch_dir("roundtrip") / "pool.jsonl";
    write_manifest(pool, path, {{"origin", "test"}});
    const auto back = load_pool(path);
    ASSERT_EQ(back.size(), pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) EXPECT_EQ(back[i].payload, pool[i].payload);
    EXPECT_EQ(back.codec(), pool.codec());
    EXPECT_EQ(pool_digest(back), pool_digest(pool));
  }
}

TEST(Manifest, DigestDependsOnBoundaries) {
  const Pool a(std::vector<Bytes>{"ab", "c"}), b(std::vector<Bytes>{"a", "bc"});
  EXPECT_NE(pool_digest(a), pool_digest(b));
  EXPECT_EQ(pool_digest(a).rfind("sha256:", 0), 0u);
  EXPECT_EQ(pool_digest(a).size(), 7u + 64u);
}

TEST(Hex, RoundTrip) {
  const std::string raw("\x00\x7f\xff ab", 6);
  EXPECT_EQ(to_hex(raw), "007fff206162");
  EXPECT_EQ(from_hex("007FFF206162"), raw);
  EXPECT_THROW(from_hex("zz"), IngestionError);
}

TEST(Generator, DeterministicPerSeed) {
  for (auto g : {Grammar::balanced_xml_like, Grammar::regex_like, Grammar::random_bytes}) {
    const GeneratorSpec spec{g, 20, 10, 300, 42};
    const auto a = generate_pool(spec), b = generate_pool(spec);
    EXPECT_EQ(pool_digest(a), pool_digest(b));
    auto other = spec;
    other.seed = 43;
    EXPECT_NE(pool_digest(a), pool_digest(generate_pool(other)));
    for (const auto& item : a.items()) {
      EXPECT_GE(item.payload.size(), 10u);
      EXPECT_LE(item.payload.size(), 300u);
    }
  }
}

TEST(Generator, XmlIsBalanced) {
  const auto pool = generate_pool({Grammar::balanced_xml_like, 200, 7, 400, 9});
  for (const auto& item : pool.items()) EXPECT_TRUE(balanced_document(item.payload)) << item.payload;
  EXPECT_FALSE(balanced_document("<a><b></a></b>"));
}

TEST(Generator, RegexIsWellFormed) {
  const auto pool = generate_pool({Grammar::regex_like, 200, 1, 200, 10});
  for (const auto& item : pool.items()) {
    EXPECT_NO_THROW(std::regex(item.payload, std::regex::ECMAScript)) << item.payload;
  }
}

TEST(Generator, FixedLength) {
  const auto pool = generate_pool({Grammar::regex_like, 30, 200, 200, 3});
  EXPECT_DOUBLE_EQ(pool.mean_length(), 200.0);
}

TEST(Generator, RandomBytesStayInAlphabet) {
  const auto pool = generate_pool({Grammar::random_bytes, 50, 1, 500, 8});
  for (const auto& item : pool.items())
    for (char c : item.payload) EXPECT_NE(base_alphabet().find(c), std::string::npos);
  EXPECT_EQ(base_alphabet().size(), 64u);
}

TEST(Generator, UnsatisfiableSpecs) {
  EXPECT_THROW(generate_pool({Grammar::random_bytes, 0, 1, 2, 0}), GenerationError);
  EXPECT_THROW(generate_pool({Grammar::random_bytes, 3, 5, 2, 0}), GenerationError);
  EXPECT_THROW(generate_pool({Grammar::balanced_xml_like, 3, 3, 20, 0}), GenerationError);
  EXPECT_THROW(generate_filtered_pool({Grammar::random_bytes, 0, 10, 20, 0}, 100, 0.1, 5, 1000),
               GenerationError);
}

TEST(Generator, FilteredPoolHitsTheBand) {
  const auto pool = generate_filtered_pool({Grammar::random_bytes, 0, 20, 600, 2}, 100, 0.1, 50);
  ASSERT_EQ(pool.size(), 50u);
  for (const auto& item : pool.items()) {
    EXPECT_GE(item.payload.size(), 90u);
    EXPECT_LE(item.payload.size(), 110u);
  }
}

TEST(SyntheticSut, EmptyPayloadCoversNothing) {
  SyntheticSUT sut;
  sut.seed = 99;
  EXPECT_EQ(synth_row(sut, "").count(), 0u);
  sut.kind = SutKind::fault_panel;
  sut.units = 32;
  EXPECT_EQ(synth_row(sut, "").count(), 0u);
}

TEST(SyntheticSut, SingleUniverseGramCoversOneUnit) {
  SyntheticSUT sut;
  sut.seed = 99;
  const auto universe = ngram_universe(sut);
  ASSERT_EQ(universe.size(), 256u);
  EXPECT_EQ(std::set<Bytes>(universe.begin(), universe.end()).size(), 256u);
  for (std::size_t u : {0u, 17u, 255u}) {
    const auto row = synth_row(sut, universe[u]);
    EXPECT_EQ(row.count(), 1u);
    EXPECT_TRUE(row.test(u));
  }
}

TEST(SyntheticSut, UnionCoverageMatchesDirectScan) {
  const auto pool = generate_pool({Grammar::random_bytes, 250, 20, 600, 1});
  SyntheticSUT sut;
  sut.seed = 99;
  const auto matrix = synth_coverage(sut, pool);
  const auto universe = ngram_universe(sut);
  std::size_t scanned = 0;
  for (const auto& gram : universe) {
    bool hit = false;
    for (const auto& item : pool.items())
      if (item.payload.find(gram) != std::string::npos) hit = true;
    scanned += hit;
  }
  EXPECT_EQ(matrix.union_count(), scanned);
  EXPECT_EQ(matrix.union_count(), 256u);
  for (std::size_t id = 0; id < pool.size(); ++id)
    for (std::size_t u = 0; u < universe.size(); ++u)
      ASSERT_EQ(matrix.row(id).test(u), pool[id].payload.find(universe[u]) != std::string::npos);
}

TEST(SyntheticSut, LongerInputsCoverMore) {
  const auto pool = generate_pool({Grammar::random_bytes, 250, 20, 600, 1});
  SyntheticSUT sut;
  sut.seed = 99;
  const auto matrix = synth_coverage(sut, pool);
  std::vector<double> lengths, counts;
  for (std::size_t id = 0; id < pool.size(); ++id) {
    lengths.push_back(static_cast<double>(pool[id].payload.size()));
    counts.push_back(static_cast<double>(matrix.row(id).count()));
  }
  EXPECT_GT(oracle::spearman(lengths, counts), 0.5);
}

TEST(SyntheticSut, FaultPanelPredicates) {
  SyntheticSUT sut{SutKind::fault_panel, 2, 32, base_alphabet(), 4242};
  const auto faults = fault_panel(sut);
  ASSERT_EQ(faults.size(), 32u);
  const auto pool = generate_pool({Grammar::random_bytes, 100, 20, 600, 5});
  const auto matrix = synth_coverage(sut, pool);
  for (std::size_t id = 0; id < pool.size(); ++id)
    for (std::size_t f = 0; f < faults.size(); ++f) {
      const auto& p = faults[f];
      const auto& x = pool[id].payload;
      bool expect = false;
      switch (p.kind) {
        case FaultPredicate::Kind::substring: expect = x.find(p.symbols) != std::string::npos; break;
        case FaultPredicate::Kind::distinct_symbols: {
          std::size_t present = 0;
          for (char c : p.symbols) present += x.find(c) != std::string::npos;
          expect = present >= p.threshold;
          break;
        }
        case FaultPredicate::Kind::symbol_count:
          expect = static_cast<std::size_t>(std::count(x.begin(), x.end(), p.symbols[0])) >= p.threshold;
          break;
      }
      ASSERT_EQ(matrix.row(id).test(f), expect) << p.describe();
    }
  EXPECT_EQ(matrix.kind(), CoverageKind::fault);
}

TEST(SyntheticSut, InvalidConfig) {
  SyntheticSUT sut;
  sut.ngram_width = 0;
  EXPECT_THROW(ngram_universe(sut), ConfigError);
  sut.ngram_width = 1;
  sut.units = 65;
  EXPECT_THROW(ngram_universe(sut), ConfigError);
}

TEST(CoverageCsv, RoundTrip) {
  SyntheticSUT sut;
  sut.seed = 3;
  sut.units = 20;
  const auto pool = generate_pool({Grammar::random_bytes, 15, 20, 300, 6});
  const auto matrix = synth_coverage(sut, pool);
  std::stringstream buffer;
  write_coverage_csv(matrix, buffer);
  const auto back = read_coverage_csv(buffer);
  ASSERT_EQ(back.tests(), matrix.tests());
  EXPECT_EQ(back.unit_names(), matrix.unit_names());
  for (std::size_t i = 0; i < matrix.tests(); ++i) EXPECT_EQ(back.row(i), matrix.row(i));
}

TEST(CoverageCsv, Errors) {
  std::istringstream bad_cell("id,u1,u2\n0,1,2\n");
  EXPECT_THROW(read_coverage_csv(bad_cell), IngestionError);
  std::istringstream short_row("id,u1,u2\n0,1\n");
  EXPECT_THROW(read_coverage_csv(short_row), IngestionError);
  std::istringstream wrong_id("id,u1\n1,1\n");
  try {
    read_coverage_csv(wrong_id, CoverageKind::structural, "cov.csv");
    FAIL();
  } catch (const IngestionError& e) {
    EXPECT_NE(std::string(e.what()).find("cov.csv:2"), std::string::npos) << e.what();
  }
}
