#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace rkde::detail {

// Pairwise (cascade) summation. Deterministic for a fixed input order and
// much better conditioned than a running sum; used wherever trial results
// are aggregated so that thread count cannot affect the result.
inline double pairwise_sum(std::span<const double> v) {
  const std::size_t n = v.size();
  if (n == 0) return 0.0;
  if (n <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(v.subspan(0, half)) + pairwise_sum(v.subspan(half));
}

inline double mean(std::span<const double> v) {
  if (v.empty()) return 0.0;
  return pairwise_sum(v) / static_cast<double>(v.size());
}

// Population variance (divide by n) about the sample mean.
inline double variance(std::span<const double> v) {
  const std::size_t n = v.size();
  if (n == 0) return 0.0;
  const double m = mean(v);
  std::vector<double> sq(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double d = v[i] - m;
    sq[i] = d * d;
  }
  return pairwise_sum(sq) / static_cast<double>(n);
}

}  // namespace rkde::detail
