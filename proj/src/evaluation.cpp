#include "tsdm/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "tsdm/errors.hpp"
#include "tsdm/random.hpp"

namespace tsdm {

std::vector<double> mid_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    // positions i..j (0-based) share rank mean((i+1)..(j+1))
    const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size())
    throw UsageError("spearman: inputs differ in length (" + std::to_string(xs.size()) + " vs " +
                     std::to_string(ys.size()) + ")");
  if (xs.size() < 3) throw UsageError("spearman: needs at least 3 paired values");
  auto finite = [](double v) { return std::isfinite(v); };
  if (!std::all_of(xs.begin(), xs.end(), finite) || !std::all_of(ys.begin(), ys.end(), finite))
    throw UsageError("spearman: inputs must be finite");

  const auto rx = mid_ranks(xs);
  const auto ry = mid_ranks(ys);
  const double n = static_cast<double>(rx.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;

  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double dx = rx[i] - mx;
    const double dy = ry[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0 || syy == 0) throw DegenerateError("zero rank variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<std::vector<std::size_t>> strata_partition(const SelectionSequence& seq,
                                                       std::size_t strata) {
  const auto order = seq.exit_order();
  const std::size_t n = order.size();
  if (strata < 1 || strata > n)
    throw UsageError("strata must be in [1, " + std::to_string(n) + "], got " +
                     std::to_string(strata));
  const std::size_t width = n / strata;
  std::vector<std::vector<std::size_t>> blocks(strata);
  for (std::size_t s = 0; s < strata; ++s) {
    const std::size_t begin = s * width;
    const std::size_t end = s + 1 == strata ? n : begin + width;
    blocks[s].assign(order.begin() + static_cast<std::ptrdiff_t>(begin),
                     order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return blocks;
}

std::vector<std::vector<std::size_t>> strata_sample(const SelectionSequence& seq,
                                                    std::size_t strata, std::size_t set_size,
                                                    std::size_t samples, std::uint64_t seed) {
  const auto blocks = strata_partition(seq, strata);
  const std::size_t smallest = blocks.front().size();  // the last block is never smaller
  if (set_size < 1 || set_size > smallest)
    throw UsageError("set_size " + std::to_string(set_size) + " must be in [1, " +
                     std::to_string(smallest) + "] (smallest stratum)");

  Rng rng(seed, 0);
  std::vector<std::vector<std::size_t>> sets;
  sets.reserve(samples);
  for (std::size_t s = 0; s < samples; ++s) {
    std::vector<std::size_t> block = blocks[rng.below(blocks.size())];
    for (std::size_t i = 0; i < set_size; ++i)
      std::swap(block[i], block[i + rng.below(block.size() - i)]);
    block.resize(set_size);
    std::sort(block.begin(), block.end());
    sets.push_back(std::move(block));
  }
  return sets;
}

std::string to_string(Method method) {
  switch (method) {
    case Method::tsdm: return "tsdm";
    case Method::greedy: return "greedy";
    case Method::random: return "random";
  }
  return "?";
}

Method method_from_string(const std::string& text) {
  if (text == "tsdm") return Method::tsdm;
  if (text == "greedy") return Method::greedy;
  if (text == "random") return Method::random;
  throw ConfigError("unknown method '" + text + "' (expected tsdm, greedy or random)");
}

const CoverageCurve& CurveSet::get(Method method) const {
  switch (method) {
    case Method::tsdm: return tsdm;
    case Method::greedy: return greedy;
    case Method::random: return random;
  }
  return tsdm;
}

namespace {

// Covered-unit counts of the nested prefixes of `order`, for k = 1..order.size().
std::vector<std::size_t> prefix_counts(const CoverageMatrix& matrix,
                                       std::span<const std::size_t> order) {
  UnitSet covered(matrix.units());
  std::vector<std::size_t> counts;
  counts.reserve(order.size());
  for (std::size_t id : order) {
    covered |= matrix.row(id);
    counts.push_back(covered.count());
  }
  return counts;
}

// tsdm's size-k selection is the first k ids of the reversed exit order.
std::vector<std::size_t> tsdm_inclusion_order(const SelectionSequence& seq) {
  auto order = seq.exit_order();
  std::reverse(order.begin(), order.end());
  return order;
}

struct RawCounts {
  std::vector<std::size_t> single;                // tsdm / greedy
  std::vector<std::vector<std::size_t>> per_seed;  // random

  std::size_t max() const {
    std::size_t best = 0;
    for (auto c : single) best = std::max(best, c);
    for (const auto& seed : per_seed)
      for (auto c : seed) best = std::max(best, c);
    return best;
  }
};

RawCounts raw_counts(Method method, const CoverageMatrix& matrix, std::size_t k_max,
                     const SelectionSequence* seq, std::span<const std::uint64_t> seeds) {
  RawCounts raw;
  switch (method) {
    case Method::tsdm: {
      auto order = tsdm_inclusion_order(*seq);
      order.resize(k_max);
      raw.single = prefix_counts(matrix, order);
      break;
    }
    case Method::greedy:
      raw.single = prefix_counts(matrix, greedy_select(matrix, k_max));
      break;
    case Method::random:
      if (seeds.empty()) throw UsageError("random coverage curve needs at least one seed");
      for (std::uint64_t seed : seeds)
        raw.per_seed.push_back(prefix_counts(matrix, random_order(matrix.tests(), k_max, seed)));
      break;
  }
  return raw;
}

CoverageCurve build_curve(Method method, const RawCounts& raw, std::size_t units,
                          std::size_t normalizer_count, Method normalizer_method) {
  CoverageCurve curve;
  curve.method = method;
  curve.normalizer = static_cast<double>(normalizer_count) / static_cast<double>(units);
  curve.normalizer_method = normalizer_method;
  const double norm = static_cast<double>(normalizer_count);
  const double total = static_cast<double>(units);

  if (!raw.per_seed.empty()) {
    const std::size_t k_max = raw.per_seed.front().size();
    const double seeds = static_cast<double>(raw.per_seed.size());
    curve.per_seed.assign(raw.per_seed.size(), std::vector<double>(k_max));
    for (std::size_t k = 0; k < k_max; ++k) {
      double count_sum = 0;
      double normalized_sum = 0;
      for (std::size_t s = 0; s < raw.per_seed.size(); ++s) {
        const double count = static_cast<double>(raw.per_seed[s][k]);
        curve.per_seed[s][k] = count / norm;
        count_sum += count;
        normalized_sum += count / norm;
      }
      curve.points.push_back({k + 1, count_sum / seeds / total, normalized_sum / seeds});
    }
  } else {
    for (std::size_t k = 0; k < raw.single.size(); ++k) {
      const double count = static_cast<double>(raw.single[k]);
      curve.points.push_back({k + 1, count / total, count / norm});
    }
  }
  return curve;
}

void check_curve_inputs(const CoverageMatrix& matrix, std::size_t pool_size, std::size_t k_max) {
  if (matrix.tests() != pool_size)
    throw UsageError("coverage matrix has " + std::to_string(matrix.tests()) +
                     " rows but the pool has " + std::to_string(pool_size) + " tests");
  if (matrix.units() == 0) throw UsageError("coverage matrix has no units");
  if (k_max < 1 || k_max > pool_size)
    throw UsageError("k_max must be in [1, " + std::to_string(pool_size) + "], got " +
                     std::to_string(k_max));
}

}  // namespace

CurveSet coverage_curves(const SelectionSequence& seq, const CoverageMatrix& matrix,
                         std::size_t k_max, std::span<const std::uint64_t> seeds) {
  check_curve_inputs(matrix, seq.size(), k_max);
  if (seq.members.size() != matrix.tests() || seq.members.back() != matrix.tests() - 1)
    throw UsageError("selection sequence must cover the whole pool");

  const RawCounts tsdm = raw_counts(Method::tsdm, matrix, k_max, &seq, seeds);
  const RawCounts greedy = raw_counts(Method::greedy, matrix, k_max, &seq, seeds);
  const RawCounts random = raw_counts(Method::random, matrix, k_max, &seq, seeds);

  std::size_t normalizer = greedy.max();
  Method source = Method::greedy;
  if (tsdm.max() > normalizer) {
    normalizer = tsdm.max();
    source = Method::tsdm;
  }
  if (random.max() > normalizer) {
    normalizer = random.max();
    source = Method::random;
  }
  if (normalizer == 0) throw DegenerateError("no selected set covers any unit");

  CurveSet set;
  set.tsdm = build_curve(Method::tsdm, tsdm, matrix.units(), normalizer, source);
  set.greedy = build_curve(Method::greedy, greedy, matrix.units(), normalizer, source);
  set.random = build_curve(Method::random, random, matrix.units(), normalizer, source);
  set.normalizer = static_cast<double>(normalizer) / static_cast<double>(matrix.units());
  set.normalizer_method = source;
  return set;
}

CoverageCurve coverage_curve(Method method, const Pool& pool, const CoverageMatrix& matrix,
                             std::size_t k_max, std::span<const std::uint64_t> seeds) {
  check_curve_inputs(matrix, pool.size(), k_max);
  std::optional<SelectionSequence> seq;
  if (method == Method::tsdm) seq = tsdm_reduce(pool);

  const RawCounts greedy = raw_counts(Method::greedy, matrix, k_max, nullptr, seeds);
  const RawCounts own = method == Method::greedy
                            ? greedy
                            : raw_counts(method, matrix, k_max, seq ? &*seq : nullptr, seeds);
  std::size_t normalizer = greedy.max();
  Method source = Method::greedy;
  if (own.max() > normalizer) {
    normalizer = own.max();
    source = method;
  }
  if (normalizer == 0) throw DegenerateError("no selected set covers any unit");
  return build_curve(method, own, matrix.units(), normalizer, source);
}

std::optional<std::size_t> size_to_reach(std::span<const double> normalized_by_k,
                                         double threshold) {
  if (!(threshold > 0 && threshold <= 1))
    throw UsageError("threshold must be in (0, 1], got " + std::to_string(threshold));
  for (std::size_t k = 0; k < normalized_by_k.size(); ++k)
    if (normalized_by_k[k] >= threshold) return k + 1;
  return std::nullopt;
}

std::optional<std::size_t> size_to_reach(const CoverageCurve& curve, double threshold) {
  std::vector<double> values;
  values.reserve(curve.points.size());
  for (const auto& p : curve.points) values.push_back(p.normalized);
  return size_to_reach(values, threshold);
}

std::optional<double> mean_size_to_reach(const CoverageCurve& curve, double threshold) {
  if (curve.per_seed.empty()) {
    const auto k = size_to_reach(curve, threshold);
    if (!k) return std::nullopt;
    return static_cast<double>(*k);
  }
  double total = 0;
  for (const auto& seed : curve.per_seed) {
    const auto k = size_to_reach(seed, threshold);
    if (!k) return std::nullopt;
    total += static_cast<double>(*k);
  }
  return total / static_cast<double>(curve.per_seed.size());
}

double length_order_correlation(const SelectionSequence& seq, const Pool& pool) {
  const auto order = seq.exit_order();
  std::vector<double> lengths;
  std::vector<double> positions;
  lengths.reserve(order.size());
  positions.reserve(order.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    lengths.push_back(static_cast<double>(pool.payload(order[pos]).size()));
    positions.push_back(static_cast<double>(pos + 1));
  }
  return spearman(lengths, positions);
}

RuntimeFit fit_runtime_model(std::span<const RuntimeObservation> observations) {
  if (observations.size() < 3) throw UsageError("runtime fit needs at least 3 observations");
  std::set<std::size_t> sizes;
  for (const auto& o : observations) {
    if (o.n == 0 || !(o.s_avg > 0) || !(o.seconds > 0))
      throw UsageError("runtime observations must have positive n, s_avg and seconds");
    sizes.insert(o.n);
  }
  if (sizes.size() < 3) throw UsageError("runtime fit needs at least 3 distinct pool sizes");

  double sxy = 0, sxx = 0, mean_y = 0;
  for (const auto& o : observations) {
    const double x = o.s_avg * static_cast<double>(o.n) * static_cast<double>(o.n);
    sxy += x * o.seconds;
    sxx += x * x;
    mean_y += o.seconds;
  }
  mean_y /= static_cast<double>(observations.size());

  RuntimeFit fit;
  fit.a = sxy / sxx;
  double ss_res = 0, ss_tot = 0;
  for (const auto& o : observations) {
    const double x = o.s_avg * static_cast<double>(o.n) * static_cast<double>(o.n);
    ss_res += (o.seconds - fit.a * x) * (o.seconds - fit.a * x);
    ss_tot += (o.seconds - mean_y) * (o.seconds - mean_y);
  }
  if (ss_tot == 0) throw DegenerateError("runtime fit is degenerate: every observation is identical");
  fit.r2 = 1.0 - ss_res / ss_tot;
  return fit;
}

}  // namespace tsdm
