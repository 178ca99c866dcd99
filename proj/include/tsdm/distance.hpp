#pragma once

// Pairwise and multiset normalized compression distance.
//
// The normalized information distance these approximate is uncomputable and
// is not offered as an operation. Real codecs also break the metric axioms
// slightly (triangle inequality, symmetry), so none of those are promised.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tsdm/compression.hpp"

namespace tsdm {

/// Distances are never clamped: values a little above 1 are expected codec
/// slack, and anything outside [0, 1.1] on the default codec indicates a codec
/// problem that tests should see.
using Distance = double;

struct TestCase {
  std::size_t id = 0;
  Bytes payload;
  std::optional<std::string> label;
};

/// An indexed multiset of test cases. Ids are dense 0..n-1 in list order and
/// duplicate payloads are allowed.
class Pool {
 public:
  Pool() = default;
  explicit Pool(std::vector<Bytes> payloads, CodecId codec = {});
  /// Items must already carry ids 0..n-1 in order; throws UsageError otherwise.
  Pool(std::vector<TestCase> items, CodecId codec);

  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  const TestCase& operator[](std::size_t id) const { return items_.at(id); }
  const std::vector<TestCase>& items() const { return items_; }
  const CodecId& codec() const { return codec_; }
  ByteView payload(std::size_t id) const { return items_.at(id).payload; }

  /// 0..n-1.
  std::vector<std::size_t> ids() const;
  double mean_length() const;

 private:
  void check_payloads() const;

  std::vector<TestCase> items_;
  CodecId codec_;
};

/// (C(xy) - min{C(x),C(y)}) / max{C(x),C(y)} with x concatenated before y.
/// Throws DegenerateError("degenerate pair") when both inputs are empty.
Distance ncd_pair(const CodecId& codec, ByteView x, ByteView y);
Distance ncd_pair(const Pool& pool, std::size_t x, std::size_t y);

/// The compressed lengths entering NCD1 for one multiset. Set concatenation
/// runs in ascending id order; arg fields break ties by smallest id.
struct Ncd1Terms {
  CompressedLength whole = 0;               ///< C(X)
  CompressedLength min_single = 0;          ///< min over x of C(x)
  std::size_t argmin_single = 0;
  CompressedLength max_leave_one_out = 0;   ///< max over x of C(X \ {x})
  std::size_t argmax_leave_one_out = 0;

  Distance value() const;
};

/// members: distinct pool ids, any order, at least two.
Ncd1Terms ncd1_terms(const Pool& pool, std::span<const std::size_t> members);
Distance ncd1(const Pool& pool, std::span<const std::size_t> members);

/// Largest multiset the exact recursive definition accepts.
inline constexpr std::size_t kExactNcdMaxItems = 12;

/// Exact multiset NCD: the max of NCD1 over every sub-multiset with at least
/// two elements (a singleton has distance 0). Exponential in |members|;
/// throws UsageError beyond kExactNcdMaxItems.
Distance ncd_multiset_exact(const Pool& pool, std::span<const std::size_t> members);

/// NCD1 recomputed under seeded random concatenation orders, against the
/// canonical ascending-id value.
struct OrderSensitivity {
  Distance canonical = 0;
  Distance min = 0;
  Distance max = 0;
  std::size_t permutations = 0;

  Distance spread() const { return max - min; }
};

OrderSensitivity ncd1_order_sensitivity(const Pool& pool, std::span<const std::size_t> members,
                                        std::uint64_t seed, std::size_t permutations);

}  // namespace tsdm
