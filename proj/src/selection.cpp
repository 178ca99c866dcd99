#include "tsdm/selection.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tsdm/errors.hpp"
#include "tsdm/parallel.hpp"
#include "tsdm/random.hpp"

namespace tsdm {

std::vector<std::size_t> SelectionSequence::exit_order() const {
  std::vector<std::size_t> order = removal_order;
  for (std::size_t id : survivors)
    if (id != final_survivor) order.push_back(id);
  order.push_back(final_survivor);
  return order;
}

SelectionSequence tsdm_reduce(const Pool& pool) {
  const auto all = pool.ids();
  return tsdm_reduce(pool, all);
}

SelectionSequence tsdm_reduce(const Pool& pool, std::span<const std::size_t> members) {
  if (members.size() < 2) throw UsageError("pool must contain at least 2 items");
  std::vector<std::size_t> current(members.begin(), members.end());
  std::sort(current.begin(), current.end());
  if (std::adjacent_find(current.begin(), current.end()) != current.end())
    throw UsageError("tsdm_reduce: duplicate id in member list");
  if (current.back() >= pool.size())
    throw UsageError("tsdm_reduce: id " + std::to_string(current.back()) + " outside pool");
  if (std::all_of(current.begin(), current.end(),
                  [&](std::size_t id) { return pool.payload(id).empty(); }))
    throw DegenerateError("degenerate multiset: every payload is empty");

  const CodecId& codec = pool.codec();
  SelectionSequence seq;
  seq.members = current;
  seq.codec = codec;

  std::vector<CompressedLength> single(pool.size(), 0);
  parallel_for(current.size(), [&](std::size_t i) {
    single[current[i]] = compressed_length(codec, pool.payload(current[i]));
  });

  std::vector<ByteView> parts;
  for (std::size_t id : current) parts.push_back(pool.payload(id));
  CompressedLength whole = concat_length(codec, parts);

  for (;;) {
    const std::size_t m = current.size();
    std::vector<CompressedLength> leave_one_out(m);
    parallel_for(m, [&](std::size_t skip) {
      std::vector<ByteView> rest;
      rest.reserve(m - 1);
      for (std::size_t j = 0; j < m; ++j)
        if (j != skip) rest.push_back(pool.payload(current[j]));
      leave_one_out[skip] = concat_length(codec, rest);
    });

    // current is ascending, so the first maximum is the smallest id.
    std::size_t remove_at = 0;
    CompressedLength min_single = single[current[0]];
    for (std::size_t j = 1; j < m; ++j) {
      if (leave_one_out[j] > leave_one_out[remove_at]) remove_at = j;
      min_single = std::min(min_single, single[current[j]]);
    }
    const CompressedLength max_part = leave_one_out[remove_at];
    seq.step_diameters.push_back(
        (static_cast<double>(whole) - static_cast<double>(min_single)) /
        static_cast<double>(max_part));

    if (m == 2) {
      seq.survivors = current;
      seq.final_survivor = single[current[1]] < single[current[0]] ? current[1] : current[0];
      break;
    }
    seq.removal_order.push_back(current[remove_at]);
    current.erase(current.begin() + static_cast<std::ptrdiff_t>(remove_at));
    whole = max_part;  // C(Y_{k+1}) was just measured as a leave-one-out length.
  }

  seq.diameter = *std::max_element(seq.step_diameters.begin(), seq.step_diameters.end());
  return seq;
}

std::vector<std::size_t> select_k(const SelectionSequence& seq, std::size_t k) {
  const std::size_t n = seq.size();
  if (k < 1 || k > n) {
    std::ostringstream msg;
    msg << "select_k: k = " << k << " outside [1, " << n << "]";
    throw UsageError(msg.str());
  }
  if (k == 1) return {seq.final_survivor};
  std::vector<std::size_t> removed(seq.removal_order.begin(),
                                   seq.removal_order.begin() + static_cast<std::ptrdiff_t>(n - k));
  std::sort(removed.begin(), removed.end());
  std::vector<std::size_t> out;
  out.reserve(k);
  std::set_difference(seq.members.begin(), seq.members.end(), removed.begin(), removed.end(),
                      std::back_inserter(out));
  return out;
}

std::string to_string(CoverageKind kind) {
  return kind == CoverageKind::structural ? "structural" : "fault";
}

CoverageKind coverage_kind_from_string(const std::string& text) {
  if (text == "structural") return CoverageKind::structural;
  if (text == "fault") return CoverageKind::fault;
  throw ConfigError("unknown coverage kind '" + text + "' (expected structural or fault)");
}

CoverageMatrix::CoverageMatrix(std::vector<std::string> unit_names, std::vector<UnitSet> rows,
                               CoverageKind kind)
    : unit_names_(std::move(unit_names)), rows_(std::move(rows)), kind_(kind) {
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    if (rows_[i].size() != unit_names_.size())
      throw UsageError("coverage row " + std::to_string(i) + " has " +
                       std::to_string(rows_[i].size()) + " cells, expected " +
                       std::to_string(unit_names_.size()));
  }
}

UnitSet CoverageMatrix::covered_by(std::span<const std::size_t> ids) const {
  UnitSet covered(units());
  for (std::size_t id : ids) covered |= rows_.at(id);
  return covered;
}

std::size_t CoverageMatrix::coverage_count(std::span<const std::size_t> ids) const {
  return covered_by(ids).count();
}

std::size_t CoverageMatrix::union_count() const {
  UnitSet covered(units());
  for (const auto& row : rows_) covered |= row;
  return covered.count();
}

std::vector<std::size_t> greedy_select(const CoverageMatrix& matrix, std::size_t k) {
  const std::size_t n = matrix.tests();
  if (n == 0) throw UsageError("greedy_select: coverage matrix is empty");
  if (k > n)
    throw UsageError("greedy_select: k = " + std::to_string(k) + " exceeds " +
                     std::to_string(n) + " rows");

  UnitSet covered(matrix.units());
  std::vector<bool> taken(n, false);
  std::vector<std::size_t> order;
  order.reserve(k);
  for (std::size_t step = 0; step < k; ++step) {
    std::size_t best = n;
    std::size_t best_gain = 0;
    for (std::size_t id = 0; id < n; ++id) {
      if (taken[id]) continue;
      const std::size_t gain = (matrix.row(id) - covered).count();
      if (best == n || gain > best_gain) {
        best = id;
        best_gain = gain;
      }
    }
    taken[best] = true;
    covered |= matrix.row(best);
    order.push_back(best);
  }
  return order;
}

std::vector<std::size_t> random_order(std::size_t pool_size, std::size_t k, std::uint64_t seed) {
  if (k > pool_size)
    throw UsageError("random selection: k = " + std::to_string(k) + " exceeds pool size " +
                     std::to_string(pool_size));
  std::vector<std::size_t> ids(pool_size);
  for (std::size_t i = 0; i < pool_size; ++i) ids[i] = i;
  Rng rng(seed, 0);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(pool_size - i));
    std::swap(ids[i], ids[j]);
  }
  ids.resize(k);
  return ids;
}

std::vector<std::size_t> random_select(std::size_t pool_size, std::size_t k, std::uint64_t seed) {
  auto ids = random_order(pool_size, k, seed);
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::vector<std::size_t> random_select(const Pool& pool, std::size_t k, std::uint64_t seed) {
  return random_select(pool.size(), k, seed);
}

Pool length_filter(const Pool& pool, std::size_t target, double tolerance) {
  if (!(tolerance >= 0)) throw UsageError("length_filter: tolerance must be >= 0");
  const double t = static_cast<double>(target);
  // The epsilon absorbs representation error in target*(1 +- tol).
  const double lo = std::ceil(t * (1.0 - tolerance) - 1e-9);
  const double hi = std::floor(t * (1.0 + tolerance) + 1e-9);

  std::vector<TestCase> kept;
  for (const auto& item : pool.items()) {
    const double len = static_cast<double>(item.payload.size());
    if (len >= lo && len <= hi)
      kept.push_back(TestCase{kept.size(), item.payload, std::to_string(item.id)});
  }
  if (kept.size() < 2) {
    std::ostringstream msg;
    msg << "length filter [" << lo << ", " << hi << "] kept " << kept.size()
        << " items; selection needs at least 2";
    throw UsageError(msg.str());
  }
  return Pool(std::move(kept), pool.codec());
}

}  // namespace tsdm
