#pragma once

// Test-set selection: the diameter-driven reduction chain and the two
// baselines it is compared against (coverage-greedy and uniform random).

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <boost/dynamic_bitset.hpp>

#include "tsdm/compression.hpp"
#include "tsdm/distance.hpp"

namespace tsdm {

/// The nested chain Y_0 = X, Y_1, ..., Y_{n-2} produced by repeatedly removing
/// the element whose removal leaves the largest compressed concatenation.
struct SelectionSequence {
  std::vector<std::size_t> members;        ///< Y_0, ascending ids
  std::vector<std::size_t> removal_order;  ///< n - 2 ids, in removal order
  std::vector<Distance> step_diameters;    ///< NCD1(Y_k) for k = 0..n-2
  Distance diameter = 0;                   ///< max of step_diameters
  std::vector<std::size_t> survivors;      ///< Y_{n-2}, ascending ids
  /// The survivor with the smaller compressed length, smallest id on ties
  /// (backs select_k with k = 1, where NCD1 is undefined).
  std::size_t final_survivor = 0;
  CodecId codec;

  std::size_t size() const { return members.size(); }

  /// Every member in the order it leaves the chain: removal_order, then the
  /// other survivor, then final_survivor.
  std::vector<std::size_t> exit_order() const;
};

/// Runs the reduction over the whole pool. Throws UsageError below 2 items.
SelectionSequence tsdm_reduce(const Pool& pool);
/// Runs the reduction over a sub-multiset of the pool (distinct ids).
SelectionSequence tsdm_reduce(const Pool& pool, std::span<const std::size_t> members);

/// Y_{n-k}, ascending ids. 1 <= k <= n; k = 1 returns {final_survivor}.
std::vector<std::size_t> select_k(const SelectionSequence& seq, std::size_t k);

enum class CoverageKind { structural, fault };

std::string to_string(CoverageKind kind);
CoverageKind coverage_kind_from_string(const std::string& text);

using UnitSet = boost::dynamic_bitset<>;

/// Per-test binary coverage (or fault detection) over named units. Row i
/// belongs to test id i.
class CoverageMatrix {
 public:
  CoverageMatrix() = default;
  /// Throws UsageError if any row length differs from unit_names.size().
  CoverageMatrix(std::vector<std::string> unit_names, std::vector<UnitSet> rows,
                 CoverageKind kind = CoverageKind::structural);

  std::size_t tests() const { return rows_.size(); }
  std::size_t units() const { return unit_names_.size(); }
  const std::vector<std::string>& unit_names() const { return unit_names_; }
  const UnitSet& row(std::size_t id) const { return rows_.at(id); }
  CoverageKind kind() const { return kind_; }

  /// Union of the rows of ids.
  UnitSet covered_by(std::span<const std::size_t> ids) const;
  /// Number of units covered by the union of the rows of ids.
  std::size_t coverage_count(std::span<const std::size_t> ids) const;
  /// Units covered by at least one row.
  std::size_t union_count() const;

 private:
  std::vector<std::string> unit_names_;
  std::vector<UnitSet> rows_;
  CoverageKind kind_ = CoverageKind::structural;
};

/// Greedy "additional" selection: repeatedly picks the row adding the most
/// not-yet-covered units, smallest id on ties, and keeps going by smallest id
/// once nothing adds coverage. Returns k ids in pick order.
std::vector<std::size_t> greedy_select(const CoverageMatrix& matrix, std::size_t k);

/// The first k positions of a seeded uniform shuffle of 0..n-1. Prefixes are
/// nested: random_order(n, k, s) starts with random_order(n, j, s) for j < k.
std::vector<std::size_t> random_order(std::size_t pool_size, std::size_t k, std::uint64_t seed);

/// Uniform k-subset of 0..n-1 without replacement (random_order, sorted).
std::vector<std::size_t> random_select(std::size_t pool_size, std::size_t k, std::uint64_t seed);
std::vector<std::size_t> random_select(const Pool& pool, std::size_t k, std::uint64_t seed);

/// Keeps payloads whose length lies in [target(1-tol), target(1+tol)].
/// Ids are reassigned densely and each kept item's label becomes its original
/// id. Throws UsageError when fewer than two items remain.
Pool length_filter(const Pool& pool, std::size_t target, double tolerance);

}  // namespace tsdm
