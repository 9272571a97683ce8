#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "itermean/errors.hpp"

namespace itermean {

enum class MeanKind { arithmetic, geometric, harmonic, logarithmic, power };

inline std::string_view kind_name(MeanKind k) {
  switch (k) {
    case MeanKind::arithmetic: return "arithmetic";
    case MeanKind::geometric: return "geometric";
    case MeanKind::harmonic: return "harmonic";
    case MeanKind::logarithmic: return "logarithmic";
    case MeanKind::power: return "power";
  }
  return "?";
}

/// A two-variable mean on the positive reals. `parameter` is the exponent of
/// the power mean and is empty for every other kind.
class TwoVarMean {
 public:
  static TwoVarMean arithmetic() { return TwoVarMean(MeanKind::arithmetic, std::nullopt); }
  static TwoVarMean geometric() { return TwoVarMean(MeanKind::geometric, std::nullopt); }
  static TwoVarMean harmonic() { return TwoVarMean(MeanKind::harmonic, std::nullopt); }
  static TwoVarMean logarithmic() { return TwoVarMean(MeanKind::logarithmic, std::nullopt); }

  static TwoVarMean power(double p) {
    if (p == 0.0) {
      throw ConfigError("power mean requires p != 0 (use geometric for the p -> 0 limit)");
    }
    if (!std::isfinite(p)) throw ConfigError("power mean exponent must be finite");
    return TwoVarMean(MeanKind::power, p);
  }

  MeanKind kind() const noexcept { return kind_; }
  std::optional<double> parameter() const noexcept { return parameter_; }

  /// Canonical spec string, e.g. "geometric" or "power:2".
  std::string name() const {
    std::string out(kind_name(kind_));
    if (parameter_) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", *parameter_);
      out += ':';
      out += buf;
    }
    return out;
  }

  friend bool operator==(const TwoVarMean&, const TwoVarMean&) = default;

 private:
  TwoVarMean(MeanKind k, std::optional<double> p) : kind_(k), parameter_(p) {}

  MeanKind kind_;
  std::optional<double> parameter_;
};

namespace detail {

// Below this relative gap the logarithmic mean switches to its series form.
inline constexpr double kLogMeanSeriesGap = 1e-8;

inline double logarithmic_mean(double x, double y) {
  if (x > y) std::swap(x, y);  // exact symmetry
  const double hi = y;
  if (std::abs(x - y) <= kLogMeanSeriesGap * hi) {
    // L = m * t / atanh(t) with m the midpoint and t the half-gap over m;
    // t/atanh(t) = 1 - t^2/3 - 4t^4/45 - ...
    const double m = 0.5 * (x + y);
    const double t = (y - x) / (y + x);
    const double t2 = t * t;
    return m * (1.0 - t2 / 3.0 - 4.0 * t2 * t2 / 45.0);
  }
  // log(y/x) = 2 atanh((y - x)/(y + x)) avoids cancellation for close
  // arguments; atanh is ill-conditioned near 1, so far-apart ones use the log.
  const double t = (y - x) / (y + x);
  if (std::abs(t) < 0.5) return (y - x) / (2.0 * std::atanh(t));
  return (y - x) / std::log(y / x);
}

inline double power_mean(double x, double y, double p) {
  const double lo = std::min(x, y);
  const double hi = std::max(x, y);
  // Scale by the element whose ratio keeps the other term <= 1.
  if (p > 0.0) {
    return hi * std::pow(0.5 * (1.0 + std::pow(lo / hi, p)), 1.0 / p);
  }
  return lo * std::pow(0.5 * (1.0 + std::pow(hi / lo, p)), 1.0 / p);
}

}  // namespace detail

/// Evaluates M(x, y). Throws DomainError unless both arguments are positive
/// and finite.
inline double eval_mean(const TwoVarMean& mean, double x, double y) {
  if (!(x > 0.0) || !(y > 0.0) || !std::isfinite(x) || !std::isfinite(y)) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "mean arguments must be positive and finite, got (%.17g, %.17g)",
                  x, y);
    throw DomainError(buf);
  }
  if (x == y) return x;
  switch (mean.kind()) {
    case MeanKind::arithmetic: return 0.5 * (x + y);
    case MeanKind::geometric: return std::sqrt(x) * std::sqrt(y);
    case MeanKind::harmonic: return 2.0 * x * y / (x + y);
    case MeanKind::logarithmic: return detail::logarithmic_mean(x, y);
    case MeanKind::power: return detail::power_mean(x, y, *mean.parameter());
  }
  return x;
}

/// Parses `arithmetic | geometric | harmonic | logarithmic | power:<p>`.
inline TwoVarMean parse_mean_spec(std::string_view spec) {
  if (spec == "arithmetic") return TwoVarMean::arithmetic();
  if (spec == "geometric") return TwoVarMean::geometric();
  if (spec == "harmonic") return TwoVarMean::harmonic();
  if (spec == "logarithmic") return TwoVarMean::logarithmic();
  constexpr std::string_view prefix = "power:";
  if (spec.starts_with(prefix)) {
    const std::string_view lit = spec.substr(prefix.size());
    double p = 0.0;
    const auto [ptr, ec] = std::from_chars(lit.data(), lit.data() + lit.size(), p);
    if (lit.empty() || ec != std::errc{} || ptr != lit.data() + lit.size()) {
      throw ConfigError("invalid power exponent '" + std::string(lit) + "' in mean spec");
    }
    return TwoVarMean::power(p);
  }
  throw ConfigError("unknown mean spec '" + std::string(spec) +
                    "' (expected arithmetic|geometric|harmonic|logarithmic|power:<p>)");
}

/// Renders a tuple of reals as "(a, b, ...)" with round-trip precision.
inline std::string format_tuple(std::span<const double> xs) {
  std::string out = "(";
  char buf[32];
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ", ";
    std::snprintf(buf, sizeof buf, "%.17g", xs[i]);
    out += buf;
  }
  out += ')';
  return out;
}

}  // namespace itermean
