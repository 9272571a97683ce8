#pragma once

// Closed-form n-variable arithmetic, geometric and harmonic means, and the
// explicit extrema of the arithmetic variation iteration.

#include <algorithm>
#include <cmath>
#include <span>

#include "itermean/errors.hpp"
#include "itermean/means.hpp"

namespace itermean::oracles {

namespace detail {

inline void require_positive(std::span<const double> xs) {
  if (xs.empty()) throw DomainError("oracle needs at least one input");
  for (double x : xs) {
    if (!(x > 0.0) || !std::isfinite(x)) {
      throw DomainError("oracle inputs must be positive and finite, got " + format_tuple(xs));
    }
  }
}

}  // namespace detail

inline double arithmetic_n(std::span<const double> xs) {
  detail::require_positive(xs);
  double sum = 0.0;
  for (double x : xs) sum += x;
  return sum / static_cast<double>(xs.size());
}

/// Computed as exp of the mean logarithm so large products cannot overflow.
inline double geometric_n(std::span<const double> xs) {
  detail::require_positive(xs);
  long double log_sum = 0.0L;
  for (double x : xs) log_sum += std::log(static_cast<long double>(x));
  return static_cast<double>(std::exp(log_sum / static_cast<long double>(xs.size())));
}

inline double harmonic_n(std::span<const double> xs) {
  detail::require_positive(xs);
  double inv_sum = 0.0;
  for (double x : xs) inv_sum += 1.0 / x;
  return static_cast<double>(xs.size()) / inv_sum;
}

struct TraceEndpoints {
  double x1k = 0.0;  // smallest element after k variation steps
  double xnk = 0.0;  // largest element after k variation steps
  int k = 0;
};

/// Extrema of the arithmetic variation iteration after k steps, from sorted
/// inputs, with q = (n-1)^k and S the input sum:
///   k even: x_1^k = (S (q-1)/n + x_1) / q,  x_n^k = (S (q-1)/n + x_n) / q
///   k odd:  x_1^k = (S (q+1)/n - x_n) / q,  x_n^k = (S (q+1)/n - x_1) / q
/// Evaluated in long double: for inputs spanning several decades the
/// subtraction loses roughly log10(S / x_1^k) digits.
inline TraceEndpoints arithmetic_trace_endpoints(std::span<const double> sorted, int k) {
  detail::require_positive(sorted);
  if (!std::is_sorted(sorted.begin(), sorted.end())) {
    throw PreconditionError("trace endpoints need inputs sorted ascending");
  }
  if (k < 0) throw PreconditionError("step index must be non-negative");
  const long double n = static_cast<long double>(sorted.size());
  long double sum = 0.0L;
  for (double x : sorted) sum += x;
  const long double q = std::pow(n - 1.0L, static_cast<long double>(k));
  const long double lo = sorted.front();
  const long double hi = sorted.back();

  TraceEndpoints out;
  out.k = k;
  if (k % 2 == 0) {
    const long double common = sum * (q - 1.0L) / n;
    out.x1k = static_cast<double>((common + lo) / q);
    out.xnk = static_cast<double>((common + hi) / q);
  } else {
    const long double common = sum * (q + 1.0L) / n;
    out.x1k = static_cast<double>((common - hi) / q);
    out.xnk = static_cast<double>((common - lo) / q);
  }
  return out;
}

}  // namespace itermean::oracles
