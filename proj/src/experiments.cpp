#include "tsdm/experiments.hpp"

#include <chrono>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "tsdm/errors.hpp"
#include "tsdm/evaluation.hpp"
#include "tsdm/random.hpp"
#include "tsdm/selection.hpp"

namespace tsdm {
namespace fs = std::filesystem;
using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

// Stream ids for randomness derived from the run seed.
constexpr std::uint64_t kRandomCurveStream = 1000;
constexpr std::uint64_t kStrataStream = 2000;

// Reads one JSON object, tracking the dotted field path for diagnostics and
// rejecting keys nobody asked about.
class FieldReader {
 public:
  FieldReader(const ordered_json& object, std::string path) : object_(object), path_(std::move(path)) {
    if (!object_.is_object()) fail("", "must be an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return object_.contains(key);
  }

  const ordered_json& raw(const std::string& key) {
    if (!has(key)) fail(key, "is required");
    return object_.at(key);
  }

  std::string string(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_string()) fail(key, "must be a string");
    return v.get<std::string>();
  }

  std::string string_or(const std::string& key, std::string fallback) {
    return has(key) ? string(key) : fallback;
  }

  std::uint64_t unsigned_int(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0))
      fail(key, "must be a non-negative integer");
    return v.get<std::uint64_t>();
  }

  std::uint64_t unsigned_or(const std::string& key, std::uint64_t fallback) {
    return has(key) ? unsigned_int(key) : fallback;
  }

  double number(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_number()) fail(key, "must be a number");
    return v.get<double>();
  }

  double number_or(const std::string& key, double fallback) {
    return has(key) ? number(key) : fallback;
  }

  template <typename T>
  std::vector<T> list(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_array() || v.empty()) fail(key, "must be a non-empty array");
    std::vector<T> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const auto& item = v[i];
      if constexpr (std::is_floating_point_v<T>) {
        if (!item.is_number()) fail(key + "[" + std::to_string(i) + "]", "must be a number");
      } else {
        if (!item.is_number_integer() || item.get<std::int64_t>() < 0)
          fail(key + "[" + std::to_string(i) + "]", "must be a non-negative integer");
      }
      out.push_back(item.get<T>());
    }
    return out;
  }

  std::string child(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  void finish() const {
    for (const auto& [key, value] : object_.items())
      if (!seen_.count(key)) fail(key, "is not a recognized field");
  }

  [[noreturn]] void fail(const std::string& key, const std::string& problem) const {
    const std::string field = key.empty() ? (path_.empty() ? "<root>" : path_) : child(key);
    throw ConfigError("experiment spec: field '" + field + "' " + problem);
  }

 private:
  const ordered_json& object_;
  std::string path_;
  std::set<std::string> seen_;
};

fs::path resolve(const fs::path& base, const std::string& text) {
  fs::path p(text);
  return p.is_absolute() || base.empty() ? p : base / p;
}

GeneratorSpec parse_generator(const ordered_json& object, const std::string& path) {
  FieldReader r(object, path);
  GeneratorSpec g;
  try {
    g.grammar = grammar_from_string(r.string_or("grammar", "random-bytes"));
  } catch (const ConfigError& e) {
    r.fail("grammar", e.what());
  }
  g.count = r.unsigned_int("count");
  g.min_length = r.unsigned_int("min_length");
  g.max_length = r.unsigned_int("max_length");
  g.seed = r.unsigned_or("seed", 0);
  r.finish();
  if (g.count < 1) r.fail("count", "must be at least 1");
  if (g.min_length > g.max_length) r.fail("min_length", "exceeds max_length");
  return g;
}

PoolSource parse_pool(const ordered_json& object, const fs::path& base) {
  FieldReader r(object, "pool");
  PoolSource source;
  const int kinds = int(r.has("generate")) + int(r.has("manifest")) + int(r.has("directory"));
  if (kinds != 1) r.fail("", "needs exactly one of generate, manifest or directory");
  if (r.has("generate")) {
    source.kind = PoolSource::Kind::generate;
    source.generator = parse_generator(r.raw("generate"), r.child("generate"));
  } else if (r.has("manifest")) {
    source.kind = PoolSource::Kind::manifest;
    source.path = resolve(base, r.string("manifest"));
  } else {
    source.kind = PoolSource::Kind::directory;
    source.path = resolve(base, r.string("directory"));
  }
  if (r.has("length_filter")) {
    FieldReader b(r.raw("length_filter"), r.child("length_filter"));
    LengthBand band;
    band.target = b.unsigned_int("target");
    band.tolerance = b.number_or("tolerance", 0.10);
    band.max_candidates = b.unsigned_or("max_candidates", band.max_candidates);
    b.finish();
    if (band.tolerance < 0) b.fail("tolerance", "must be >= 0");
    source.band = band;
  }
  r.finish();
  return source;
}

CoverageSource parse_coverage(const ordered_json& object, const fs::path& base) {
  FieldReader r(object, "sut");
  CoverageSource source;
  if (r.has("coverage_csv")) {
    source.csv = resolve(base, r.string("coverage_csv"));
    try {
      source.csv_kind = coverage_kind_from_string(r.string_or("coverage_kind", "structural"));
    } catch (const ConfigError& e) {
      r.fail("coverage_kind", e.what());
    }
  } else {
    SyntheticSUT sut;
    try {
      sut.kind = sut_kind_from_string(r.string("kind"));
    } catch (const ConfigError& e) {
      r.fail("kind", e.what());
    }
    sut.ngram_width = r.unsigned_or("width", 2);
    sut.units = r.unsigned_or("units", sut.kind == SutKind::fault_panel ? 32 : 256);
    sut.seed = r.unsigned_or("seed", 0);
    if (r.has("alphabet")) sut.alphabet = r.string("alphabet");
    source.sut = sut;
  }
  r.finish();
  return source;
}

Experiment parse_experiment(const ordered_json& object, const std::string& path) {
  FieldReader r(object, path);
  const std::string type = r.string("type");
  if (type == "curves") {
    CurvesExperiment e;
    if (r.has("k_max")) e.k_max = r.unsigned_int("k_max");
    e.seeds = r.unsigned_or("seeds", e.seeds);
    if (r.has("thresholds")) e.thresholds = r.list<double>("thresholds");
    r.finish();
    if (e.seeds < 1) r.fail("seeds", "must be at least 1");
    for (double t : e.thresholds)
      if (!(t > 0 && t <= 1)) r.fail("thresholds", "values must lie in (0, 1]");
    return e;
  }
  if (type == "correlation") {
    CorrelationExperiment e;
    e.strata = r.unsigned_or("strata", e.strata);
    if (r.has("set_sizes")) e.set_sizes = r.list<std::size_t>("set_sizes");
    e.samples = r.unsigned_or("samples", e.samples);
    r.finish();
    if (e.strata < 1) r.fail("strata", "must be at least 1");
    if (e.samples < 3) r.fail("samples", "must be at least 3");
    return e;
  }
  if (type == "length-confound") {
    r.finish();
    return LengthConfoundExperiment{};
  }
  if (type == "runtime") {
    RuntimeExperiment e;
    if (r.has("sizes")) e.sizes = r.list<std::size_t>("sizes");
    if (r.has("generate")) e.generator = parse_generator(r.raw("generate"), r.child("generate"));
    r.finish();
    for (std::size_t n : e.sizes)
      if (n < 2) r.fail("sizes", "pool sizes must be at least 2");
    return e;
  }
  r.fail("type", "must be one of curves, correlation, length-confound, runtime (got '" + type + "')");
}

std::string line_column(std::string_view text, std::size_t byte) {
  std::size_t line = 1, column = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(column);
}

std::string threshold_key(double t) {
  std::ostringstream out;
  out << std::setprecision(6) << t;
  return out.str();
}

ordered_json optional_json(const std::optional<std::size_t>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

ordered_json optional_json(const std::optional<double>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// Lazily computed state shared between experiments of one run.
struct RunState {
  const ExperimentSpec& spec;
  const Pool& pool;
  const CoverageMatrix* matrix;
  std::optional<SelectionSequence> seq;
  double reduce_seconds = 0;

  const SelectionSequence& sequence() {
    if (!seq) {
      const auto start = std::chrono::steady_clock::now();
      seq = tsdm_reduce(pool);
      reduce_seconds = seconds_since(start);
    }
    return *seq;
  }

  const CoverageMatrix& coverage() const {
    if (!matrix) throw ConfigError("this experiment needs a \"sut\" coverage source");
    return *matrix;
  }
};

ordered_json curve_json(const CoverageCurve& curve) {
  ordered_json points = ordered_json::array();
  for (const auto& p : curve.points)
    points.push_back({{"k", p.k}, {"raw", p.raw}, {"normalized", p.normalized}});
  return points;
}

ordered_json run_curves(RunState& state, const CurvesExperiment& e, std::ostringstream& csv) {
  const auto& matrix = state.coverage();
  const std::size_t k_max = e.k_max.value_or(state.pool.size());
  std::vector<std::uint64_t> seeds;
  for (std::size_t i = 0; i < e.seeds; ++i)
    seeds.push_back(derive_seed(state.spec.seed, kRandomCurveStream + i));

  const CurveSet curves = coverage_curves(state.sequence(), matrix, k_max, seeds);

  ordered_json out;
  out["coverage_kind"] = to_string(matrix.kind());
  out["k_max"] = k_max;
  out["random_seeds"] = seeds;
  out["normalizer"] = {{"raw", curves.normalizer},
                       {"method", to_string(curves.normalizer_method)},
                       {"overridden", curves.normalizer_method != Method::greedy}};

  ordered_json table = ordered_json::object();
  for (double t : e.thresholds) {
    const auto tsdm_k = size_to_reach(curves.tsdm, t);
    const auto greedy_k = size_to_reach(curves.greedy, t);
    const auto random_mean = mean_size_to_reach(curves.random, t);
    ordered_json row;
    row["tsdm"] = optional_json(tsdm_k);
    row["greedy"] = optional_json(greedy_k);
    row["random_mean"] = optional_json(random_mean);
    row["random_on_mean_curve"] = optional_json(size_to_reach(curves.random, t));
    row["ratio_random_over_tsdm"] =
        tsdm_k && random_mean ? ordered_json(*random_mean / static_cast<double>(*tsdm_k))
                              : ordered_json(nullptr);
    table[threshold_key(t)] = row;
  }
  out["size_to_reach"] = table;

  ordered_json methods = ordered_json::object();
  for (Method m : {Method::greedy, Method::tsdm, Method::random}) {
    const auto& curve = curves.get(m);
    methods[to_string(m)] = curve_json(curve);
    for (const auto& p : curve.points)
      csv << p.k << ',' << to_string(m) << ',' << std::setprecision(17) << p.normalized << '\n';
  }
  out["curves"] = methods;
  return out;
}

ordered_json run_correlation(RunState& state, const CorrelationExperiment& e) {
  const auto& matrix = state.coverage();
  const auto& seq = state.sequence();
  ordered_json results = ordered_json::array();
  for (std::size_t i = 0; i < e.set_sizes.size(); ++i) {
    const std::size_t size = e.set_sizes[i];
    const auto sets = strata_sample(seq, e.strata, size, e.samples,
                                    derive_seed(state.spec.seed, kStrataStream + i));
    std::vector<double> diameters, coverage;
    for (const auto& set : sets) {
      diameters.push_back(tsdm_reduce(state.pool, set).diameter);
      coverage.push_back(static_cast<double>(matrix.coverage_count(set)) /
                         static_cast<double>(matrix.units()));
    }
    ordered_json row;
    row["set_size"] = size;
    row["samples"] = sets.size();
    try {
      row["spearman"] = spearman(diameters, coverage);
    } catch (const DegenerateError& err) {
      row["spearman"] = nullptr;
      row["error"] = err.what();
    }
    row["n"] = sets.size();
    row["diameters"] = diameters;
    row["coverage"] = coverage;
    results.push_back(row);
  }
  ordered_json out;
  out["strata"] = e.strata;
  out["results"] = results;
  return out;
}

ordered_json run_length_confound(RunState& state) {
  const auto& seq = state.sequence();
  ordered_json out;
  out["spearman"] = length_order_correlation(seq, state.pool);
  out["n"] = seq.size();
  out["mean_length"] = state.pool.mean_length();
  return out;
}

ordered_json run_runtime(RunState& state, const RuntimeExperiment& e) {
  std::vector<RuntimeObservation> observations;
  ordered_json pools = ordered_json::array();
  for (std::size_t n : e.sizes) {
    Pool pool;
    if (e.generator) {
      GeneratorSpec g = *e.generator;
      g.count = n;
      pool = generate_pool(g, state.spec.codec);
    } else {
      if (n > state.pool.size())
        throw UsageError("runtime size " + std::to_string(n) + " exceeds the pool size " +
                         std::to_string(state.pool.size()));
      std::vector<TestCase> items(state.pool.items().begin(),
                                  state.pool.items().begin() + static_cast<std::ptrdiff_t>(n));
      pool = Pool(std::move(items), state.pool.codec());
    }
    const auto start = std::chrono::steady_clock::now();
    const auto seq = tsdm_reduce(pool);
    const double seconds = seconds_since(start);
    observations.push_back({n, pool.mean_length(), seconds});
    pools.push_back({{"n", n}, {"s_avg", pool.mean_length()}, {"diameter", seq.diameter}});
  }

  ordered_json timing;
  ordered_json obs = ordered_json::array();
  for (const auto& o : observations) obs.push_back({{"n", o.n}, {"s_avg", o.s_avg}, {"seconds", o.seconds}});
  timing["observations"] = obs;
  const RuntimeFit fit = fit_runtime_model(observations);
  timing["fit"] = {{"a", fit.a}, {"r2", fit.r2}};

  ordered_json out;
  out["pools"] = pools;
  out["timing"] = timing;
  return out;
}

}  // namespace

ExperimentSpec parse_experiment_spec(std::string_view text, const fs::path& base_dir) {
  ordered_json root;
  try {
    root = ordered_json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("experiment spec: syntax error at " + line_column(text, e.byte) + ": " +
                      e.what());
  }

  FieldReader r(root, "");
  ExperimentSpec spec;
  spec.echo = root;
  spec.name = r.string_or("name", "experiment");
  spec.seed = r.unsigned_or("seed", 0);
  try {
    spec.codec = CodecId::parse(r.string_or("codec", CodecId{}.to_string()));
  } catch (const ConfigError& e) {
    r.fail("codec", e.what());
  }
  spec.pool = parse_pool(r.raw("pool"), base_dir);
  if (r.has("sut")) spec.coverage = parse_coverage(r.raw("sut"), base_dir);

  const auto& experiments = r.raw("experiments");
  if (!experiments.is_array() || experiments.empty())
    r.fail("experiments", "must be a non-empty array");
  for (std::size_t i = 0; i < experiments.size(); ++i)
    spec.experiments.push_back(
        parse_experiment(experiments[i], "experiments[" + std::to_string(i) + "]"));
  r.finish();
  return spec;
}

ExperimentSpec load_experiment_spec(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open experiment spec '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_experiment_spec(text.str(), path.parent_path());
}

Pool build_pool(const PoolSource& source, const CodecId& codec) {
  switch (source.kind) {
    case PoolSource::Kind::generate:
      if (source.band)
        return generate_filtered_pool(source.generator, source.band->target, source.band->tolerance,
                                      source.generator.count, source.band->max_candidates, codec);
      return generate_pool(source.generator, codec);
    case PoolSource::Kind::manifest:
    case PoolSource::Kind::directory: {
      Pool pool = load_pool(source.path, codec);
      if (source.band) return length_filter(pool, source.band->target, source.band->tolerance);
      return pool;
    }
  }
  throw ConfigError("unknown pool source");
}

EvaluationResult run_evaluation(const ExperimentSpec& spec) {
  const auto run_start = std::chrono::steady_clock::now();
  const Pool pool = build_pool(spec.pool, spec.codec);

  std::optional<CoverageMatrix> matrix;
  ordered_json sut_json = nullptr;
  if (spec.coverage) {
    if (spec.coverage->csv) {
      matrix = read_coverage_csv(*spec.coverage->csv, spec.coverage->csv_kind);
      sut_json = {{"coverage_csv", spec.coverage->csv->string()}};
    } else {
      const auto& sut = *spec.coverage->sut;
      matrix = synth_coverage(sut, pool);
      sut_json = {{"kind", to_string(sut.kind)},
                  {"width", sut.ngram_width},
                  {"units", sut.units},
                  {"seed", sut.seed}};
    }
    if (matrix->tests() != pool.size())
      throw ConfigError("coverage matrix has " + std::to_string(matrix->tests()) +
                        " rows but the pool has " + std::to_string(pool.size()) + " tests");
    sut_json["union_coverage"] = matrix->union_count();
  }

  RunState state{spec, pool, matrix ? &*matrix : nullptr, std::nullopt, 0};
  EvaluationResult result;
  std::ostringstream csv;
  csv << "k,method,normalized_coverage\n";

  ordered_json experiments = ordered_json::array();
  for (const auto& experiment : spec.experiments) {
    ordered_json entry;
    const auto start = std::chrono::steady_clock::now();
    try {
      std::visit(
          [&](const auto& e) {
            using T = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<T, CurvesExperiment>) {
              entry["type"] = "curves";
              entry.update(run_curves(state, e, csv));
            } else if constexpr (std::is_same_v<T, CorrelationExperiment>) {
              entry["type"] = "correlation";
              entry.update(run_correlation(state, e));
            } else if constexpr (std::is_same_v<T, LengthConfoundExperiment>) {
              entry["type"] = "length-confound";
              entry.update(run_length_confound(state));
            } else {
              entry["type"] = "runtime";
              entry.update(run_runtime(state, e));
            }
          },
          experiment);
      entry["status"] = "ok";
    } catch (const std::exception& err) {
      entry["status"] = "failed";
      entry["error"] = err.what();
      result.all_succeeded = false;
    }
    if (!entry.contains("timing")) entry["timing"] = ordered_json::object();
    entry["timing"]["seconds"] = seconds_since(start);
    experiments.push_back(entry);
  }

  ordered_json report;
  report["name"] = spec.name;
  report["codec"] = spec.codec.to_string();
  report["seed"] = spec.seed;
  report["config"] = spec.echo;
  report["pool"] = {{"size", pool.size()},
                    {"digest", pool_digest(pool)},
                    {"mean_length", pool.mean_length()}};
  report["sut"] = sut_json;
  if (state.seq) {
    report["selection"] = {{"diameter", state.seq->diameter},
                           {"removal_order", state.seq->removal_order},
                           {"survivors", state.seq->survivors},
                           {"final_survivor", state.seq->final_survivor}};
  }
  report["experiments"] = experiments;
  report["timing"] = {{"reduce_seconds", state.reduce_seconds},
                      {"total_seconds", seconds_since(run_start)}};

  result.report = std::move(report);
  result.curves_csv = csv.str();
  return result;
}

}  // namespace tsdm
