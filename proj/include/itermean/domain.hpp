#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <span>

#include "itermean/means.hpp"

namespace itermean {

/// Element domain the iteration engine runs over: how to take the mean of two
/// elements, how far apart elements are, and how spread out a state is.
/// Domains with a total order set `is_ordered` and provide `less`.
template <class D>
concept ElementDomain =
    requires(const D& d, const typename D::element_type& a, const typename D::mean_type& m,
             std::span<const typename D::element_type> xs) {
      typename D::element_type;
      typename D::mean_type;
      { d.mean(m, a, a) } -> std::same_as<typename D::element_type>;
      { d.distance(a, a) } -> std::convertible_to<double>;
      { d.spread(xs) } -> std::convertible_to<double>;
      { d.magnitude(a) } -> std::convertible_to<double>;
      { D::is_ordered } -> std::convertible_to<bool>;
    };

template <class D>
concept OrderedDomain = ElementDomain<D> && D::is_ordered &&
    requires(const D& d, const typename D::element_type& a) {
      { d.less(a, a) } -> std::convertible_to<bool>;
    };

/// Positive reals.
struct ScalarDomain {
  using element_type = double;
  using mean_type = TwoVarMean;
  static constexpr bool is_ordered = true;

  double mean(const TwoVarMean& m, double x, double y) const { return eval_mean(m, x, y); }
  double distance(double x, double y) const { return std::abs(x - y); }
  double magnitude(double x) const { return std::abs(x); }
  bool less(double x, double y) const { return x < y; }

  /// max - min
  double spread(std::span<const double> xs) const {
    if (xs.empty()) return 0.0;
    const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
    return *hi - *lo;
  }
};

static_assert(OrderedDomain<ScalarDomain>);

}  // namespace itermean
