#pragma once

// Analysis pipeline: rank correlation, stratified sampling over the reduction
// chain, normalized coverage curves, size-to-threshold lookups, and the
// runtime model fit.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tsdm/distance.hpp"
#include "tsdm/selection.hpp"

namespace tsdm {

/// Average ranks (1-based) with ties sharing the mean of their positions.
std::vector<double> mid_ranks(std::span<const double> values);

/// Spearman rank correlation: Pearson correlation of the mid-ranks.
/// Throws UsageError if sizes differ or fewer than 3 values, and
/// DegenerateError("zero rank variance") if either input is constant.
double spearman(std::span<const double> xs, std::span<const double> ys);

/// Splits seq.exit_order() into `strata` consecutive blocks of size n/strata;
/// the last block absorbs the remainder.
std::vector<std::vector<std::size_t>> strata_partition(const SelectionSequence& seq,
                                                       std::size_t strata);

/// `samples` id-sets of `set_size` distinct ids, each drawn uniformly from one
/// uniformly chosen stratum. Ids within a set are ascending.
std::vector<std::vector<std::size_t>> strata_sample(const SelectionSequence& seq,
                                                    std::size_t strata, std::size_t set_size,
                                                    std::size_t samples, std::uint64_t seed);

enum class Method { tsdm, greedy, random };

std::string to_string(Method method);
Method method_from_string(const std::string& text);

struct CurvePoint {
  std::size_t k = 0;
  double raw = 0;         ///< covered units / total units
  double normalized = 0;  ///< raw / normalizer
};

struct CoverageCurve {
  Method method = Method::tsdm;
  std::vector<CurvePoint> points;  ///< k = 1..k_max
  double normalizer = 1;
  /// Method whose maximum raw coverage set the normalizer. Greedy unless some
  /// other method exceeded greedy's maximum.
  Method normalizer_method = Method::greedy;
  /// Random only: per-seed normalized values, indexed [seed][k-1].
  std::vector<std::vector<double>> per_seed;

  /// Normalized coverage at set size k.
  double at(std::size_t k) const { return points.at(k - 1).normalized; }
};

/// Curves of all three methods on one pool, sharing one normalizer.
struct CurveSet {
  CoverageCurve tsdm;
  CoverageCurve greedy;
  CoverageCurve random;
  double normalizer = 1;
  Method normalizer_method = Method::greedy;

  const CoverageCurve& get(Method method) const;
};

/// Builds the three curves up to k_max. seq must be tsdm_reduce(pool); random
/// curves average random_select over `seeds`.
CurveSet coverage_curves(const SelectionSequence& seq, const CoverageMatrix& matrix,
                         std::size_t k_max, std::span<const std::uint64_t> seeds);

/// One method's curve, normalized against greedy (or a larger maximum as in
/// coverage_curves). Runs the reduction itself when method is tsdm.
CoverageCurve coverage_curve(Method method, const Pool& pool, const CoverageMatrix& matrix,
                             std::size_t k_max, std::span<const std::uint64_t> seeds);

/// Smallest k whose normalized coverage reaches threshold, or nullopt.
/// threshold must lie in (0, 1].
std::optional<std::size_t> size_to_reach(const CoverageCurve& curve, double threshold);
std::optional<std::size_t> size_to_reach(std::span<const double> normalized_by_k,
                                         double threshold);

/// Mean over seeds of the per-seed size_to_reach (random curves); for curves
/// without per-seed data, size_to_reach itself. nullopt if any seed never
/// reaches the threshold.
std::optional<double> mean_size_to_reach(const CoverageCurve& curve, double threshold);

/// Spearman correlation between payload length and the position at which each
/// test leaves the chain (1 = first removed, n = final survivor). Positive
/// when longer inputs are kept longer.
double length_order_correlation(const SelectionSequence& seq, const Pool& pool);

struct RuntimeObservation {
  std::size_t n = 0;
  double s_avg = 0;
  double seconds = 0;
};

struct RuntimeFit {
  double a = 0;
  double r2 = 0;
};

/// Least squares seconds = a * s_avg * n^2 through the origin; R^2 against
/// the mean-seconds baseline. Throws UsageError for fewer than 3 observations
/// or fewer than 3 distinct n, DegenerateError when the fit is undefined.
RuntimeFit fit_runtime_model(std::span<const RuntimeObservation> observations);

}  // namespace tsdm
