#include "tsdm/distance.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <numeric>
#include <sstream>

#include "tsdm/diagnostics.hpp"
#include "tsdm/errors.hpp"
#include "tsdm/parallel.hpp"
#include "tsdm/random.hpp"

namespace tsdm {
namespace {

Distance ratio(CompressedLength whole, CompressedLength min_single, CompressedLength max_part) {
  return (static_cast<double>(whole) - static_cast<double>(min_single)) /
         static_cast<double>(max_part);
}

std::vector<std::size_t> canonical_members(const Pool& pool, std::span<const std::size_t> members,
                                           const char* op) {
  std::vector<std::size_t> sorted(members.begin(), members.end());
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw UsageError(std::string(op) + ": duplicate id in member list");
  if (!sorted.empty() && sorted.back() >= pool.size())
    throw UsageError(std::string(op) + ": id " + std::to_string(sorted.back()) +
                     " outside pool of size " + std::to_string(pool.size()));
  return sorted;
}

void reject_all_empty(const Pool& pool, std::span<const std::size_t> members, const char* what) {
  const bool all_empty = std::all_of(members.begin(), members.end(),
                                     [&](std::size_t id) { return pool.payload(id).empty(); });
  if (all_empty) throw DegenerateError(what);
}

// Terms for an explicit concatenation order (members need not be sorted).
Ncd1Terms terms_in_order(const Pool& pool, std::span<const std::size_t> ordered) {
  const std::size_t n = ordered.size();
  std::vector<ByteView> parts(n);
  for (std::size_t i = 0; i < n; ++i) parts[i] = pool.payload(ordered[i]);

  std::vector<CompressedLength> singles(n);
  std::vector<CompressedLength> leave_one_out(n);
  parallel_for(n, [&](std::size_t i) {
    singles[i] = compressed_length(pool.codec(), parts[i]);
    std::vector<ByteView> rest;
    rest.reserve(n - 1);
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) rest.push_back(parts[j]);
    leave_one_out[i] = concat_length(pool.codec(), rest);
  });

  Ncd1Terms t;
  t.whole = concat_length(pool.codec(), parts);
  bool first = true;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t id = ordered[i];
    if (first || singles[i] < t.min_single ||
        (singles[i] == t.min_single && id < t.argmin_single)) {
      t.min_single = singles[i];
      t.argmin_single = id;
    }
    if (first || leave_one_out[i] > t.max_leave_one_out ||
        (leave_one_out[i] == t.max_leave_one_out && id < t.argmax_leave_one_out)) {
      t.max_leave_one_out = leave_one_out[i];
      t.argmax_leave_one_out = id;
    }
    first = false;
  }
  return t;
}

}  // namespace

Pool::Pool(std::vector<Bytes> payloads, CodecId codec) : codec_(std::move(codec)) {
  items_.reserve(payloads.size());
  for (std::size_t i = 0; i < payloads.size(); ++i)
    items_.push_back(TestCase{i, std::move(payloads[i]), std::nullopt});
  check_payloads();
}

Pool::Pool(std::vector<TestCase> items, CodecId codec)
    : items_(std::move(items)), codec_(std::move(codec)) {
  for (std::size_t i = 0; i < items_.size(); ++i) {
    if (items_[i].id != i)
      throw UsageError("pool ids must be dense 0..n-1 in order; position " + std::to_string(i) +
                       " has id " + std::to_string(items_[i].id));
  }
  check_payloads();
}

void Pool::check_payloads() const {
  for (const auto& item : items_) {
    if (item.payload.empty()) {
      warn("test case " + std::to_string(item.id) + " has an empty payload");
    } else if (item.payload.size() > kLargeInputWarningBytes) {
      warn("test case " + std::to_string(item.id) + " is " + std::to_string(item.payload.size()) +
           " bytes, beyond the 32 KiB codec window; distances involving it are unreliable");
    }
  }
}

std::vector<std::size_t> Pool::ids() const {
  std::vector<std::size_t> out(items_.size());
  std::iota(out.begin(), out.end(), std::size_t{0});
  return out;
}

double Pool::mean_length() const {
  if (items_.empty()) return 0;
  double total = 0;
  for (const auto& item : items_) total += static_cast<double>(item.payload.size());
  return total / static_cast<double>(items_.size());
}

Distance ncd_pair(const CodecId& codec, ByteView x, ByteView y) {
  if (x.empty() && y.empty()) throw DegenerateError("degenerate pair: both payloads are empty");
  const CompressedLength cx = compressed_length(codec, x);
  const CompressedLength cy = compressed_length(codec, y);
  const std::array<ByteView, 2> parts{x, y};
  const CompressedLength cxy = concat_length(codec, parts);
  return ratio(cxy, std::min(cx, cy), std::max(cx, cy));
}

Distance ncd_pair(const Pool& pool, std::size_t x, std::size_t y) {
  return ncd_pair(pool.codec(), pool.payload(x), pool.payload(y));
}

Distance Ncd1Terms::value() const { return ratio(whole, min_single, max_leave_one_out); }

Ncd1Terms ncd1_terms(const Pool& pool, std::span<const std::size_t> members) {
  if (members.size() < 2) throw UsageError("ncd1 needs at least 2 members");
  const auto sorted = canonical_members(pool, members, "ncd1");
  reject_all_empty(pool, sorted, "degenerate multiset: every payload is empty");
  return terms_in_order(pool, sorted);
}

Distance ncd1(const Pool& pool, std::span<const std::size_t> members) {
  return ncd1_terms(pool, members).value();
}

Distance ncd_multiset_exact(const Pool& pool, std::span<const std::size_t> members) {
  if (members.empty()) throw UsageError("ncd_multiset_exact needs at least 1 member");
  if (members.size() > kExactNcdMaxItems) {
    std::ostringstream msg;
    msg << "exact multiset NCD is exponential and capped at " << kExactNcdMaxItems
        << " items (got " << members.size() << "); use the reduction-chain approximation instead";
    throw UsageError(msg.str());
  }
  const auto sorted = canonical_members(pool, members, "ncd_multiset_exact");
  if (sorted.size() == 1) return 0.0;
  reject_all_empty(pool, sorted, "degenerate multiset: every payload is empty");

  const std::size_t n = sorted.size();
  const std::size_t subsets = std::size_t{1} << n;

  // C(Y) for every sub-multiset Y, concatenated in ascending id order.
  std::vector<CompressedLength> length_of(subsets, 0);
  parallel_for(subsets, [&](std::size_t mask) {
    if (mask == 0) return;
    std::vector<ByteView> parts;
    parts.reserve(static_cast<std::size_t>(std::popcount(mask)));
    for (std::size_t i = 0; i < n; ++i)
      if (mask & (std::size_t{1} << i)) parts.push_back(pool.payload(sorted[i]));
    length_of[mask] = concat_length(pool.codec(), parts);
  });

  // The recursion max(NCD1(X), max over proper Y of NCD(Y)) unrolls to the
  // max of NCD1 over every sub-multiset with at least two elements.
  Distance best = 0;
  bool have = false;
  for (std::size_t mask = 0; mask < subsets; ++mask) {
    if (std::popcount(mask) < 2) continue;
    CompressedLength min_single = 0, max_part = 0;
    bool first = true;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t bit = std::size_t{1} << i;
      if (!(mask & bit)) continue;
      const CompressedLength single = length_of[bit];
      const CompressedLength part = length_of[mask & ~bit];
      if (first) {
        min_single = single;
        max_part = part;
        first = false;
      } else {
        min_single = std::min(min_single, single);
        max_part = std::max(max_part, part);
      }
    }
    const Distance value = ratio(length_of[mask], min_single, max_part);
    if (!have || value > best) {
      best = value;
      have = true;
    }
  }
  return best;
}

OrderSensitivity ncd1_order_sensitivity(const Pool& pool, std::span<const std::size_t> members,
                                        std::uint64_t seed, std::size_t permutations) {
  OrderSensitivity out;
  out.canonical = ncd1(pool, members);
  out.min = out.max = out.canonical;
  out.permutations = permutations;

  auto order = canonical_members(pool, members, "ncd1_order_sensitivity");
  Rng rng(seed, 0);
  for (std::size_t p = 0; p < permutations; ++p) {
    for (std::size_t i = order.size() - 1; i > 0; --i)
      std::swap(order[i], order[rng.below(i + 1)]);
    const Distance value = terms_in_order(pool, order).value();
    out.min = std::min(out.min, value);
    out.max = std::max(out.max, value);
  }
  return out;
}

}  // namespace tsdm
