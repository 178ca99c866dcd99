#pragma once

// Test-only reference computations. None of these call into the library's
// distance, selection or evaluation code; they rebuild each quantity from its
// definition so the library can be checked against them.

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace tsdm::oracle {

/// zlib one-shot compression at level 9 (the library's default codec).
inline std::size_t zlib_length(const std::string& data) {
  uLongf size = compressBound(static_cast<uLong>(data.size()));
  std::vector<Bytef> out(size);
  compress2(out.data(), &size, reinterpret_cast<const Bytef*>(data.data()),
            static_cast<uLong>(data.size()), 9);
  return size;
}

inline std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) out += p;
  return out;
}

/// NCD1 straight from its definition, concatenating in the given order.
inline double ncd1(const std::vector<std::string>& xs) {
  std::size_t min_single = SIZE_MAX, max_rest = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    min_single = std::min(min_single, zlib_length(xs[i]));
    std::vector<std::string> rest;
    for (std::size_t j = 0; j < xs.size(); ++j)
      if (j != i) rest.push_back(xs[j]);
    max_rest = std::max(max_rest, zlib_length(join(rest)));
  }
  return (static_cast<double>(zlib_length(join(xs))) - static_cast<double>(min_single)) /
         static_cast<double>(max_rest);
}

/// Exact multiset NCD by the literal recursion: NCD(X) = max(NCD1(X), NCD(Y))
/// over proper sub-multisets Y, singletons 0. Memoized on member index sets.
inline double ncd_exact(const std::vector<std::string>& xs) {
  std::map<std::vector<std::size_t>, double> memo;
  std::function<double(const std::vector<std::size_t>&)> rec =
      [&](const std::vector<std::size_t>& idx) -> double {
    if (idx.size() <= 1) return 0.0;
    if (auto it = memo.find(idx); it != memo.end()) return it->second;
    std::vector<std::string> members;
    for (auto i : idx) members.push_back(xs[i]);
    double best = ncd1(members);
    // proper subsets obtained by dropping one element cover all proper subsets recursively
    for (std::size_t drop = 0; drop < idx.size(); ++drop) {
      std::vector<std::size_t> sub;
      for (std::size_t j = 0; j < idx.size(); ++j)
        if (j != drop) sub.push_back(idx[j]);
      best = std::max(best, rec(sub));
    }
    memo[idx] = best;
    return best;
  };
  std::vector<std::size_t> all(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) all[i] = i;
  return rec(all);
}

/// Average ranks by counting: rank = 1 + #smaller + (#equal - 1) / 2.
inline std::vector<double> count_ranks(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double less = 0, equal = 0;
    for (double w : v) {
      if (w < v[i]) ++less;
      if (w == v[i]) ++equal;
    }
    r[i] = 1 + less + (equal - 1) / 2;
  }
  return r;
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double cxy = 0, cxx = 0, cyy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    cxy += (x[i] - mx) * (y[i] - my);
    cxx += (x[i] - mx) * (x[i] - mx);
    cyy += (y[i] - my) * (y[i] - my);
  }
  return cxy / std::sqrt(cxx * cyy);
}

inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  return pearson(count_ranks(x), count_ranks(y));
}

/// Seeded bytes straight from the mt19937_64 output (no distributions).
inline std::string random_bytes(std::uint64_t seed, std::size_t n) {
  std::mt19937_64 engine(seed);
  std::string out(n, '\0');
  for (auto& c : out) c = static_cast<char>(engine() & 0xFF);
  return out;
}

}  // namespace tsdm::oracle
