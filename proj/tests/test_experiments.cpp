#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "tsdm/errors.hpp"
#include "tsdm/experiments.hpp"

using namespace tsdm;

namespace {

const char* kSmallSpec = R"({
  "name": "small",
  "seed": 5,
  "pool": {"generate": {"grammar": "random-bytes", "count": 30, "min_length": 20, "max_length": 200, "seed": 1}},
  "sut": {"kind": "ngram-coverage", "width": 2, "units": 64, "seed": 3},
  "experiments": [
    {"type": "curves", "seeds": 3},
    {"type": "correlation", "strata": 3, "set_sizes": [4], "samples": 12},
    {"type": "length-confound"}
  ]
})";

std::string config_error(const std::string& text) {
  try {
    parse_experiment_spec(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(ExperimentSpec, ParsesDefaultsAndEcho) {
  const auto spec = parse_experiment_spec(kSmallSpec);
  EXPECT_EQ(spec.name, "small");
  EXPECT_EQ(spec.codec, CodecId{});
  EXPECT_EQ(spec.pool.generator.count, 30u);
  ASSERT_TRUE(spec.coverage && spec.coverage->sut);
  EXPECT_EQ(spec.coverage->sut->units, 64u);
  ASSERT_EQ(spec.experiments.size(), 3u);
  EXPECT_EQ(std::get<CurvesExperiment>(spec.experiments[0]).seeds, 3u);
  EXPECT_EQ(spec.echo["name"], "small");
}

TEST(ExperimentSpec, ErrorsNameTheProblem) {
  EXPECT_NE(config_error("{\"pool\": }").find("line 1"), std::string::npos);
  EXPECT_NE(config_error(R"({"pool": {"generate": {"count": 3, "min_length": 1, "max_length": 2}},
      "experiments": [{"type": "curves", "bogus": 1}]})").find("bogus"), std::string::npos);
  EXPECT_NE(config_error(R"({"pool": {"generate": {"count": 3, "min_length": 1, "max_length": 2}},
      "experiments": [{"type": "wat"}]})").find("type"), std::string::npos);
  EXPECT_NE(config_error(R"({"pool": {"generate": {"count": -3, "min_length": 1, "max_length": 2}},
      "experiments": [{"type": "curves"}]})").find("count"), std::string::npos);
  EXPECT_NE(config_error(R"({"codec": "nope", "pool": {"generate": {"count": 3, "min_length": 1, "max_length": 2}},
      "experiments": [{"type": "curves"}]})").find("codec"), std::string::npos);
  EXPECT_FALSE(config_error(R"({"pool": {"generate": {"count": 3, "min_length": 1, "max_length": 2}},
      "experiments": []})").empty());
}

TEST(Evaluation, ReportShapeAndDeterminism) {
  const auto spec = parse_experiment_spec(kSmallSpec);
  auto a = run_evaluation(spec), b = run_evaluation(spec);
  EXPECT_TRUE(a.all_succeeded);
  EXPECT_EQ(a.report["pool"]["size"], 30);
  const auto& curves = a.report["experiments"][0];
  EXPECT_EQ(curves["status"], "ok");
  EXPECT_EQ(a.curves_csv.rfind("k,method,normalized_coverage\n", 0), 0u);
  EXPECT_EQ(a.curves_csv, b.curves_csv);
  for (auto* r : {&a.report, &b.report}) {
    r->erase("timing");
    for (auto& e : (*r)["experiments"]) e.erase("timing");
  }
  EXPECT_EQ(a.report.dump(), b.report.dump());
}

TEST(Evaluation, FailingExperimentIsRecorded) {
  // correlation with more strata than items fails; the others still run
  const auto spec = parse_experiment_spec(R"({
    "pool": {"generate": {"count": 8, "min_length": 100, "max_length": 300, "seed": 1}},
    "sut": {"kind": "ngram-coverage", "units": 64, "seed": 2},
    "experiments": [{"type": "correlation", "strata": 50}, {"type": "curves", "seeds": 2}]})");
  const auto result = run_evaluation(spec);
  EXPECT_FALSE(result.all_succeeded);
  EXPECT_EQ(result.report["experiments"][0]["status"], "failed");
  EXPECT_EQ(result.report["experiments"][1]["status"], "ok");
}

TEST(Evaluation, RuntimeFitUnderTiming) {
  const auto spec = parse_experiment_spec(R"({
    "pool": {"generate": {"count": 40, "min_length": 20, "max_length": 60, "seed": 1}},
    "experiments": [{"type": "runtime", "sizes": [10, 20, 40]}]})");
  const auto result = run_evaluation(spec);
  ASSERT_TRUE(result.all_succeeded) << result.report.dump(2);
  const auto& e = result.report["experiments"][0];
  EXPECT_GT(e["timing"]["fit"]["a"].get<double>(), 0.0);
  EXPECT_EQ(e["pools"].size(), 3u);
}

TEST(Evaluation, CsvCoverageSourceResolvesRelativeToSpec) {
  const auto dir = std::filesystem::temp_directory_path() / "tsdm_exp_csv";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "cov.csv") << "id,a,b\n0,1,0\n1,0,1\n2,1,1\n";
  std::ofstream(dir / "pool.jsonl") << "{\"id\":0,\"inline_hex\":\"6161\"}\n{\"id\":1,\"inline_hex\":\"6262\"}\n"
                                       "{\"id\":2,\"inline_hex\":\"616263\"}\n";
  std::ofstream(dir / "spec.json") << R"({"pool": {"manifest": "pool.jsonl"},
      "sut": {"coverage_csv": "cov.csv", "coverage_kind": "fault"},
      "experiments": [{"type": "curves", "seeds": 2}]})";
  const auto spec = load_experiment_spec(dir / "spec.json");
  const auto result = run_evaluation(spec);
  EXPECT_TRUE(result.all_succeeded) << result.report.dump(2);
  EXPECT_EQ(result.report["sut"]["union_coverage"], 2);
}
