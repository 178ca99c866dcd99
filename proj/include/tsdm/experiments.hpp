#pragma once

// Declarative experiment runs: a JSON spec names a pool, a coverage source and
// a list of analyses; running it yields a self-describing JSON report plus a
// plot-ready CSV of coverage curves.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"

#include "tsdm/compression.hpp"
#include "tsdm/corpus.hpp"

namespace tsdm {

struct LengthBand {
  std::size_t target = 0;
  double tolerance = 0.10;
  /// Generate-and-filter draw budget (generated pools only).
  std::size_t max_candidates = 1'000'000;
};

struct PoolSource {
  enum class Kind { generate, manifest, directory } kind = Kind::generate;
  GeneratorSpec generator;
  std::filesystem::path path;
  std::optional<LengthBand> band;
};

struct CoverageSource {
  std::optional<SyntheticSUT> sut;
  std::optional<std::filesystem::path> csv;
  CoverageKind csv_kind = CoverageKind::structural;
};

struct CurvesExperiment {
  std::optional<std::size_t> k_max;  ///< default: pool size
  std::size_t seeds = 10;
  std::vector<double> thresholds{0.90, 0.95, 0.99};
};

struct CorrelationExperiment {
  std::size_t strata = 10;
  std::vector<std::size_t> set_sizes{10, 25, 50};
  std::size_t samples = 100;
};

struct LengthConfoundExperiment {};

struct RuntimeExperiment {
  std::vector<std::size_t> sizes{50, 100, 200, 400};
  /// Pools to time; default: prefixes of the experiment pool.
  std::optional<GeneratorSpec> generator;
};

using Experiment =
    std::variant<CurvesExperiment, CorrelationExperiment, LengthConfoundExperiment, RuntimeExperiment>;

struct ExperimentSpec {
  std::string name;
  std::uint64_t seed = 0;
  CodecId codec;
  PoolSource pool;
  std::optional<CoverageSource> coverage;
  std::vector<Experiment> experiments;
  /// The spec as written, echoed into the report.
  nlohmann::ordered_json echo;
};

/// Parses and validates a spec. Relative paths resolve against base_dir.
/// Throws ConfigError naming the line/column (syntax) or field (schema).
ExperimentSpec parse_experiment_spec(std::string_view text,
                                     const std::filesystem::path& base_dir = {});
ExperimentSpec load_experiment_spec(const std::filesystem::path& path);

/// Materializes the spec's pool (generated, filtered or loaded).
Pool build_pool(const PoolSource& source, const CodecId& codec);

struct EvaluationResult {
  nlohmann::ordered_json report;
  /// "k,method,normalized_coverage" rows for every curves experiment.
  std::string curves_csv;
  bool all_succeeded = true;
};

/// Runs every experiment; a failing experiment is recorded in the report and
/// clears all_succeeded without stopping the others. Pool or coverage
/// construction failures propagate. Wall-clock values appear only under
/// "timing" keys.
EvaluationResult run_evaluation(const ExperimentSpec& spec);

}  // namespace tsdm
