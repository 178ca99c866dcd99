// tsdm: measure test-set diameter, select diverse test sets, and run
// evaluation experiments from the command line.
//
// Exit codes: 0 success, 1 experiment or internal failure, 2 usage/config error.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "tsdm/compression.hpp"
#include "tsdm/corpus.hpp"
#include "tsdm/distance.hpp"
#include "tsdm/errors.hpp"
#include "tsdm/evaluation.hpp"
#include "tsdm/experiments.hpp"
#include "tsdm/parallel.hpp"
#include "tsdm/selection.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct CodecOptions {
  std::string name = "zlib";
  std::optional<int> level;

  tsdm::CodecId resolve() const {
    return level ? tsdm::CodecId(name, *level) : tsdm::CodecId(name);
  }
};

struct PoolOptions {
  std::string source;                   // manifest file or directory
  std::string generate;                 // key=value,... generator spec
  std::optional<std::size_t> target_length;
  double tolerance = 0.10;
};

void add_codec_options(CLI::App* cmd, CodecOptions& codec) {
  cmd->add_option("--codec", codec.name, "Compressor: zlib, deflate, gzip or xz")
      ->capture_default_str();
  cmd->add_option("--level", codec.level, "Compression level (default: codec maximum for DEFLATE)");
}

void add_pool_options(CLI::App* cmd, PoolOptions& pool) {
  cmd->add_option("pool", pool.source, "Manifest (JSON lines) or directory of test files");
  cmd->add_option("--generate", pool.generate,
                  "Generate the pool instead: grammar=random-bytes,count=250,min=20,max=600,seed=1");
  cmd->add_option("--target-length", pool.target_length,
                  "Keep only inputs within --tolerance of this length");
  cmd->add_option("--tolerance", pool.tolerance, "Relative length tolerance")->capture_default_str();
}

std::size_t parse_size(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  unsigned long long parsed = 0;
  try {
    parsed = std::stoull(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != value.size())
    throw tsdm::ConfigError("--generate: '" + key + "' needs a non-negative integer, got '" + value + "'");
  return static_cast<std::size_t>(parsed);
}

tsdm::GeneratorSpec parse_generate(const std::string& text) {
  tsdm::GeneratorSpec spec;
  bool have_count = false, have_min = false, have_max = false;
  std::stringstream in(text);
  std::string field;
  while (std::getline(in, field, ',')) {
    const auto eq = field.find('=');
    if (eq == std::string::npos) throw tsdm::ConfigError("--generate: expected key=value, got '" + field + "'");
    const std::string key = field.substr(0, eq);
    const std::string value = field.substr(eq + 1);
    if (key == "grammar") {
      spec.grammar = tsdm::grammar_from_string(value);
    } else if (key == "count") {
      spec.count = parse_size(key, value);
      have_count = true;
    } else if (key == "min") {
      spec.min_length = parse_size(key, value);
      have_min = true;
    } else if (key == "max") {
      spec.max_length = parse_size(key, value);
      have_max = true;
    } else if (key == "seed") {
      spec.seed = parse_size(key, value);
    } else {
      throw tsdm::ConfigError("--generate: unknown key '" + key + "'");
    }
  }
  if (!have_count || !have_min || !have_max)
    throw tsdm::ConfigError("--generate needs count, min and max");
  return spec;
}

tsdm::Pool load_pool(const PoolOptions& options, const tsdm::CodecId& codec) {
  if (options.source.empty() == options.generate.empty())
    throw tsdm::UsageError("give exactly one pool source: a manifest/directory path or --generate");
  tsdm::Pool pool = options.generate.empty()
                        ? tsdm::load_pool(options.source, codec)
                        : tsdm::generate_pool(parse_generate(options.generate), codec);
  if (options.target_length)
    pool = tsdm::length_filter(pool, *options.target_length, options.tolerance);
  return pool;
}

ordered_json pool_echo(const PoolOptions& options) {
  ordered_json echo;
  if (!options.source.empty()) echo["source"] = options.source;
  if (!options.generate.empty()) echo["generate"] = options.generate;
  if (options.target_length) {
    echo["target_length"] = *options.target_length;
    echo["tolerance"] = options.tolerance;
  }
  return echo;
}

void emit(const ordered_json& report, const std::string& out_path) {
  const std::string text = report.dump(2);
  std::cout << text << '\n';
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out) throw tsdm::ConfigError("cannot write '" + out_path + "'");
    out << text << '\n';
  }
}

ordered_json sequence_json(const tsdm::SelectionSequence& seq) {
  ordered_json j;
  j["codec"] = seq.codec.to_string();
  j["members"] = seq.members;
  j["removal_order"] = seq.removal_order;
  j["step_diameters"] = seq.step_diameters;
  j["diameter"] = seq.diameter;
  j["survivors"] = seq.survivors;
  j["final_survivor"] = seq.final_survivor;
  return j;
}

tsdm::Bytes read_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw tsdm::IngestionError("cannot read file '" + path + "'");
  return tsdm::Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Test-set diameter: compression-based diversity measurement and test selection"};
  app.require_subcommand(1);
  std::size_t threads = 0;
  app.add_option("--threads", threads, "Worker threads (0 = available parallelism)");

  // ncd
  CodecOptions ncd_codec;
  std::string ncd_a, ncd_b;
  auto* ncd = app.add_subcommand("ncd", "Normalized compression distance between two files");
  ncd->add_option("first", ncd_a, "First file")->required();
  ncd->add_option("second", ncd_b, "Second file")->required();
  add_codec_options(ncd, ncd_codec);

  // diameter
  CodecOptions diameter_codec;
  PoolOptions diameter_pool;
  bool diameter_exact = false;
  std::string diameter_out;
  auto* diameter = app.add_subcommand("diameter", "Test-set diameter of a pool");
  add_pool_options(diameter, diameter_pool);
  add_codec_options(diameter, diameter_codec);
  diameter->add_flag("--exact", diameter_exact, "Also compute the exact multiset value (<= 12 items)");
  diameter->add_option("--out", diameter_out, "Also write the JSON report here");

  // select
  CodecOptions select_codec;
  PoolOptions select_pool;
  std::size_t select_k = 0;
  std::string select_method = "tsdm";
  std::uint64_t select_seed = 0;
  std::string select_coverage, select_out;
  auto* select = app.add_subcommand("select", "Select a test set of size k from a pool");
  add_pool_options(select, select_pool);
  add_codec_options(select, select_codec);
  select->add_option("--k", select_k, "Size of the selected set")->required();
  select->add_option("--method", select_method, "tsdm, greedy or random")
      ->check(CLI::IsMember({"tsdm", "greedy", "random"}))
      ->capture_default_str();
  select->add_option("--seed", select_seed, "Seed for --method random")->capture_default_str();
  select->add_option("--coverage", select_coverage, "Coverage matrix CSV (needed by greedy)");
  select->add_option("--out", select_out, "Write the selected tests as a manifest here");

  // strata
  CodecOptions strata_codec;
  PoolOptions strata_pool;
  std::size_t strata_count = 10, strata_samples = 100, strata_k = 10;
  std::uint64_t strata_seed = 0;
  std::string strata_out;
  auto* strata = app.add_subcommand("strata", "Sample test sets from consecutive strata of the removal order");
  add_pool_options(strata, strata_pool);
  add_codec_options(strata, strata_codec);
  strata->add_option("--strata", strata_count, "Number of strata")->capture_default_str();
  strata->add_option("--samples", strata_samples, "Number of sampled sets")->capture_default_str();
  strata->add_option("--k", strata_k, "Size of each sampled set")->capture_default_str();
  strata->add_option("--seed", strata_seed, "Sampling seed")->capture_default_str();
  strata->add_option("--out", strata_out, "Also write the JSON report here");

  // generate
  std::string generate_spec, generate_out;
  CodecOptions generate_codec;
  auto* generate = app.add_subcommand("generate", "Write a generated pool as a manifest");
  generate->add_option("spec", generate_spec, "grammar=random-bytes,count=250,min=20,max=600,seed=1")
      ->required();
  generate->add_option("--out", generate_out, "Manifest path (default: stdout)");
  add_codec_options(generate, generate_codec);

  // coverage
  PoolOptions coverage_pool;
  std::string coverage_kind = "ngram-coverage", coverage_out;
  std::size_t coverage_width = 2, coverage_units = 256;
  std::uint64_t coverage_seed = 0;
  auto* coverage = app.add_subcommand("coverage", "Synthetic coverage matrix CSV for a pool");
  add_pool_options(coverage, coverage_pool);
  coverage->add_option("--kind", coverage_kind, "ngram-coverage or fault-panel")->capture_default_str();
  coverage->add_option("--width", coverage_width, "n-gram width")->capture_default_str();
  coverage->add_option("--units", coverage_units, "Universe size or number of faults")
      ->capture_default_str();
  coverage->add_option("--seed", coverage_seed, "Oracle seed")->capture_default_str();
  coverage->add_option("--out", coverage_out, "CSV path (default: stdout)");

  // eval
  std::string eval_spec, eval_out, eval_csv;
  auto* eval = app.add_subcommand("eval", "Run an experiment spec and write its report");
  eval->add_option("spec", eval_spec, "Experiment spec (JSON)")->required();
  eval->add_option("--out", eval_out, "Report path (default: stdout)");
  eval->add_option("--csv", eval_csv, "Coverage-curve CSV path (default: <out stem>.curves.csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    tsdm::set_max_threads(threads);
    ordered_json config;
    config["command"] = app.get_subcommands().front()->get_name();

    if (*ncd) {
      const auto codec = ncd_codec.resolve();
      const auto a = read_input(ncd_a);
      const auto b = read_input(ncd_b);
      std::cout << std::setprecision(17) << tsdm::ncd_pair(codec, a, b) << '\n';
      return kExitOk;
    }

    if (*diameter) {
      const auto codec = diameter_codec.resolve();
      const auto pool = load_pool(diameter_pool, codec);
      if (pool.size() < 2) throw tsdm::UsageError("pool must contain at least 2 items");
      if (diameter_exact && pool.size() > tsdm::kExactNcdMaxItems)
        throw tsdm::UsageError("--exact supports at most " + std::to_string(tsdm::kExactNcdMaxItems) +
                               " items (pool has " + std::to_string(pool.size()) +
                               "); drop --exact to use the reduction-chain approximation");
      const auto seq = tsdm::tsdm_reduce(pool);
      config["pool"] = pool_echo(diameter_pool);
      config["codec"] = codec.to_string();
      config["exact"] = diameter_exact;

      ordered_json report;
      report["config"] = config;
      report["pool_digest"] = tsdm::pool_digest(pool);
      report["pool_size"] = pool.size();
      report["diameter"] = seq.diameter;
      if (diameter_exact) {
        const auto ids = pool.ids();
        report["exact_diameter"] = tsdm::ncd_multiset_exact(pool, ids);
      }
      report["selection"] = sequence_json(seq);
      emit(report, diameter_out);
      return kExitOk;
    }

    if (*select) {
      const auto codec = select_codec.resolve();
      const auto pool = load_pool(select_pool, codec);
      const auto method = tsdm::method_from_string(select_method);
      std::vector<std::size_t> ids;
      switch (method) {
        case tsdm::Method::tsdm:
          ids = tsdm::select_k(tsdm::tsdm_reduce(pool), select_k);
          break;
        case tsdm::Method::random:
          ids = tsdm::random_select(pool, select_k, select_seed);
          break;
        case tsdm::Method::greedy: {
          if (select_coverage.empty())
            throw tsdm::UsageError("--method greedy needs --coverage <matrix.csv>");
          const auto matrix = tsdm::read_coverage_csv(fs::path(select_coverage));
          if (matrix.tests() != pool.size())
            throw tsdm::UsageError("coverage matrix has " + std::to_string(matrix.tests()) +
                                   " rows but the pool has " + std::to_string(pool.size()));
          ids = tsdm::greedy_select(matrix, select_k);
          break;
        }
      }

      config["pool"] = pool_echo(select_pool);
      config["codec"] = codec.to_string();
      config["k"] = select_k;
      config["method"] = select_method;
      if (method == tsdm::Method::random) config["seed"] = select_seed;
      if (method == tsdm::Method::greedy) config["coverage"] = select_coverage;

      ordered_json report;
      report["config"] = config;
      report["pool_digest"] = tsdm::pool_digest(pool);
      report["ids"] = ids;
      emit(report, "");

      if (!select_out.empty()) {
        std::vector<tsdm::TestCase> chosen;
        for (std::size_t id : ids) {
          const auto& item = pool[id];
          chosen.push_back({chosen.size(), item.payload, item.label.value_or(std::to_string(id))});
        }
        tsdm::write_manifest(tsdm::Pool(std::move(chosen), codec), fs::path(select_out),
                             {{"method", select_method},
                              {"source_digest", tsdm::pool_digest(pool)},
                              {"k", std::to_string(select_k)}});
      }
      return kExitOk;
    }

    if (*strata) {
      const auto codec = strata_codec.resolve();
      const auto pool = load_pool(strata_pool, codec);
      const auto seq = tsdm::tsdm_reduce(pool);
      const auto sets = tsdm::strata_sample(seq, strata_count, strata_k, strata_samples, strata_seed);
      config["pool"] = pool_echo(strata_pool);
      config["codec"] = codec.to_string();
      config["strata"] = strata_count;
      config["samples"] = strata_samples;
      config["k"] = strata_k;
      config["seed"] = strata_seed;

      ordered_json report;
      report["config"] = config;
      report["pool_digest"] = tsdm::pool_digest(pool);
      ordered_json rows = ordered_json::array();
      for (const auto& set : sets)
        rows.push_back({{"ids", set}, {"diameter", tsdm::tsdm_reduce(pool, set).diameter}});
      report["sets"] = rows;
      emit(report, strata_out);
      return kExitOk;
    }

    if (*generate) {
      const auto pool = tsdm::generate_pool(parse_generate(generate_spec), generate_codec.resolve());
      const std::map<std::string, std::string> metadata{{"generate", generate_spec},
                                                        {"digest", tsdm::pool_digest(pool)}};
      if (generate_out.empty()) {
        tsdm::write_manifest(pool, std::cout, metadata);
      } else {
        tsdm::write_manifest(pool, fs::path(generate_out), metadata);
      }
      return kExitOk;
    }

    if (*coverage) {
      const auto pool = load_pool(coverage_pool, tsdm::CodecId{});
      tsdm::SyntheticSUT sut;
      sut.kind = tsdm::sut_kind_from_string(coverage_kind);
      sut.ngram_width = coverage_width;
      sut.units = coverage_units;
      sut.seed = coverage_seed;
      const auto matrix = tsdm::synth_coverage(sut, pool);
      if (coverage_out.empty()) {
        tsdm::write_coverage_csv(matrix, std::cout);
      } else {
        tsdm::write_coverage_csv(matrix, fs::path(coverage_out));
      }
      return kExitOk;
    }

    if (*eval) {
      const auto spec = tsdm::load_experiment_spec(eval_spec);
      const auto result = tsdm::run_evaluation(spec);
      const std::string text = result.report.dump(2);
      if (eval_out.empty()) {
        std::cout << text << '\n';
      } else {
        std::ofstream out(eval_out);
        if (!out) throw tsdm::ConfigError("cannot write '" + eval_out + "'");
        out << text << '\n';
      }
      std::string csv_path = eval_csv;
      if (csv_path.empty() && !eval_out.empty()) {
        fs::path p(eval_out);
        csv_path = (p.parent_path() / (p.stem().string() + ".curves.csv")).string();
      }
      if (!csv_path.empty()) {
        std::ofstream csv(csv_path);
        if (!csv) throw tsdm::ConfigError("cannot write '" + csv_path + "'");
        csv << result.curves_csv;
      }
      if (!result.all_succeeded) {
        std::cerr << "error: one or more experiments failed; see the report\n";
        return kExitFailure;
      }
      return kExitOk;
    }
  } catch (const tsdm::UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const tsdm::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const tsdm::IngestionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const tsdm::GenerationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const tsdm::DegenerateError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}
