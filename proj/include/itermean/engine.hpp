#pragma once

// Iterative extension of a two-variable mean to n variables.
//
// Three update rules are provided, all synchronous (X^{k+1} depends on X^k only):
//   variation  x_i <- M_{n-1}(all elements except x_i)
//   neighbor   on a sorted vector: x_1 <- M(x_1,x_2), x_n <- M(x_{n-1},x_n),
//              x_i <- M(x_{i-1},x_{i+1}) otherwise
//   cycle      each edge {j,l} of a Hamiltonian cycle feeds M(x_j,x_l) into
//              one target slot, the edge-to-slot map being a bijection
// All three share the limit for the builtin means; the engine iterates until
// the relative spread of the state falls below the configured tolerance.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "itermean/domain.hpp"
#include "itermean/errors.hpp"

namespace itermean {

template <class E>
struct IterationState {
  std::vector<E> elements;
  std::size_t step = 0;

  std::size_t size() const noexcept { return elements.size(); }
};

/// A Hamiltonian cycle on vertices {0..n-1} plus the slot each of its edges
/// writes to. Edge e joins cycle()[e] and cycle()[(e+1) % n] and feeds
/// target(e).
class CycleMapping {
 public:
  CycleMapping(std::vector<std::size_t> cycle, std::vector<std::size_t> assignment)
      : cycle_(std::move(cycle)), assignment_(std::move(assignment)) {
    const std::size_t n = cycle_.size();
    if (n < 3) throw ConfigError("cycle mapping needs n >= 3");
    if (assignment_.size() != n) {
      throw ConfigError("cycle mapping needs exactly one target per edge");
    }
    if (!is_permutation_of_range(cycle_)) {
      throw ConfigError("cycle must visit every vertex exactly once");
    }
    if (!is_permutation_of_range(assignment_)) {
      throw ConfigError("edge assignment must be a bijection onto the slots");
    }
  }

  /// Uniform random cycle and uniform random edge-to-slot bijection.
  template <class Rng>
  static CycleMapping random(std::size_t n, Rng& rng) {
    if (n < 3) throw ConfigError("cycle mapping needs n >= 3");
    std::vector<std::size_t> cycle(n), assignment(n);
    std::iota(cycle.begin(), cycle.end(), 0);
    std::iota(assignment.begin(), assignment.end(), 0);
    std::shuffle(cycle.begin(), cycle.end(), rng);
    std::shuffle(assignment.begin(), assignment.end(), rng);
    return CycleMapping(std::move(cycle), std::move(assignment));
  }

  static CycleMapping random(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return random(n, rng);
  }

  std::size_t size() const noexcept { return cycle_.size(); }
  const std::vector<std::size_t>& cycle() const noexcept { return cycle_; }
  const std::vector<std::size_t>& assignment() const noexcept { return assignment_; }

  std::pair<std::size_t, std::size_t> edge(std::size_t e) const {
    return {cycle_[e], cycle_[(e + 1) % cycle_.size()]};
  }
  std::size_t target(std::size_t e) const { return assignment_[e]; }

  friend bool operator==(const CycleMapping&, const CycleMapping&) = default;

 private:
  static bool is_permutation_of_range(const std::vector<std::size_t>& v) {
    std::vector<bool> seen(v.size(), false);
    for (auto x : v) {
      if (x >= v.size() || seen[x]) return false;
      seen[x] = true;
    }
    return true;
  }

  std::vector<std::size_t> cycle_;
  std::vector<std::size_t> assignment_;
};

/// The cycle whose edges are exactly the neighbor scheme's pairs:
/// 0-1-3-5-...(odd indices up)...(even indices down)...-4-2-0, i.e. 1-2-4-...-5-3-1
/// in one-based numbering.
inline CycleMapping neighbor_as_cycle(std::size_t n) {
  if (n < 3) throw ConfigError("neighbor_as_cycle needs n >= 3");
  std::vector<std::size_t> cycle{0};
  for (std::size_t v = 1; v < n; v += 2) cycle.push_back(v);
  const std::size_t top_even = (n - 1) % 2 == 0 ? n - 1 : n - 2;
  for (std::size_t v = top_even; v >= 2; v -= 2) cycle.push_back(v);

  std::vector<std::size_t> assignment(n);
  for (std::size_t e = 0; e < n; ++e) {
    const std::size_t a = std::min(cycle[e], cycle[(e + 1) % n]);
    const std::size_t b = std::max(cycle[e], cycle[(e + 1) % n]);
    if (a == 0 && b == 1) {
      assignment[e] = 0;
    } else if (a == n - 2 && b == n - 1) {
      assignment[e] = n - 1;
    } else {
      assignment[e] = a + 1;  // b == a + 2
    }
  }
  return CycleMapping(std::move(cycle), std::move(assignment));
}

struct ConvergenceConfig {
  double tolerance = 1e-12;  // relative spread threshold
  std::size_t max_iterations = 10000;
  bool capture_trace = false;

  void validate() const {
    if (!(tolerance > 0.0)) throw ConfigError("tolerance must be positive");
    if (max_iterations < 1) throw ConfigError("max-iterations must be >= 1");
  }
};

inline constexpr double kDefaultScalarTolerance = 1e-12;
inline constexpr double kDefaultMatrixTolerance = 1e-10;

// Inner (n-1)-variable runs of the variation scheme use a tenth of the outer
// tolerance, but never less than a few ulps.
inline constexpr double kInnerToleranceFloor = 8.0 * std::numeric_limits<double>::epsilon();

inline ConvergenceConfig inner_config(const ConvergenceConfig& outer) {
  ConvergenceConfig inner = outer;
  inner.tolerance = std::max(outer.tolerance / 10.0, kInnerToleranceFloor);
  inner.capture_trace = false;
  return inner;
}

struct VariationScheme {};
struct NeighborScheme {};
struct CycleScheme {
  CycleMapping mapping;
};
using Scheme = std::variant<VariationScheme, NeighborScheme, CycleScheme>;

inline std::string scheme_name(const Scheme& s) {
  if (std::holds_alternative<VariationScheme>(s)) return "variation";
  if (std::holds_alternative<NeighborScheme>(s)) return "neighbor";
  return "cycle";
}

template <class E>
struct ExtensionResult {
  E value{};
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<IterationState<E>> trace;  // empty unless capture_trace
  std::vector<double> spread_history;    // one entry per step, step 0 included
  std::vector<double> relative_spread_history;
};

template <ElementDomain D>
double spread(const D& domain, const IterationState<typename D::element_type>& state) {
  return domain.spread(std::span<const typename D::element_type>(state.elements));
}

/// Spread divided by the largest element magnitude.
template <ElementDomain D>
double relative_spread(const D& domain, std::span<const typename D::element_type> xs) {
  double scale = 0.0;
  for (const auto& x : xs) scale = std::max(scale, static_cast<double>(domain.magnitude(x)));
  return domain.spread(xs) / std::max(scale, 1e-300);
}

namespace detail {

template <class E>
std::string describe(std::span<const E> xs) {
  if constexpr (std::is_same_v<E, double>) {
    return format_tuple(xs);
  } else {
    return "<" + std::to_string(xs.size()) + " elements>";
  }
}

}  // namespace detail

template <ElementDomain D>
IterationState<typename D::element_type> step_neighbor(
    const D& domain, const typename D::mean_type& mean,
    const IterationState<typename D::element_type>& state) {
  const auto& x = state.elements;
  const std::size_t n = x.size();
  if (n < 2) throw ConfigError("neighbor step needs n >= 2");
  IterationState<typename D::element_type> next;
  next.step = state.step + 1;
  next.elements.reserve(n);
  next.elements.push_back(domain.mean(mean, x[0], x[1]));
  for (std::size_t i = 1; i + 1 < n; ++i) {
    next.elements.push_back(domain.mean(mean, x[i - 1], x[i + 1]));
  }
  next.elements.push_back(domain.mean(mean, x[n - 2], x[n - 1]));
  return next;
}

template <ElementDomain D>
IterationState<typename D::element_type> step_cycle(
    const D& domain, const typename D::mean_type& mean, const CycleMapping& mapping,
    const IterationState<typename D::element_type>& state) {
  const auto& x = state.elements;
  if (mapping.size() != x.size()) {
    throw PreconditionError("cycle mapping size " + std::to_string(mapping.size()) +
                            " does not match state size " + std::to_string(x.size()));
  }
  IterationState<typename D::element_type> next;
  next.step = state.step + 1;
  next.elements.resize(x.size());
  for (std::size_t e = 0; e < mapping.size(); ++e) {
    const auto [j, l] = mapping.edge(e);
    next.elements[mapping.target(e)] = domain.mean(mean, x[j], x[l]);
  }
  return next;
}

template <ElementDomain D>
ExtensionResult<typename D::element_type> extend_mean(
    const D& domain, const typename D::mean_type& mean,
    std::vector<typename D::element_type> inputs, const Scheme& scheme,
    const ConvergenceConfig& config);

/// One variation step: output i is the (n-1)-variable extension of every
/// element except the i-th. The inner means come from neighbor-scheme runs
/// under `sub_config`; with n = 3 the inner mean is the two-variable mean.
template <ElementDomain D>
IterationState<typename D::element_type> step_variation(
    const D& domain, const typename D::mean_type& mean,
    const IterationState<typename D::element_type>& state, const ConvergenceConfig& sub_config) {
  using E = typename D::element_type;
  const auto& x = state.elements;
  const std::size_t n = x.size();
  if (n < 3) throw ConfigError("variation step needs n >= 3");
  IterationState<E> next;
  next.step = state.step + 1;
  next.elements.reserve(n);
  std::vector<E> rest;
  rest.reserve(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    rest.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) rest.push_back(x[j]);
    }
    if (rest.size() == 2) {
      next.elements.push_back(domain.mean(mean, rest[0], rest[1]));
      continue;
    }
    auto inner = extend_mean(domain, mean, rest, NeighborScheme{}, sub_config);
    if (!inner.converged) {
      throw ConvergenceError("inner mean did not converge after " +
                                 std::to_string(inner.iterations) + " iterations",
                             1, detail::describe<E>(rest));
    }
    next.elements.push_back(std::move(inner.value));
  }
  return next;
}

/// Iterates `scheme` from `inputs` until the relative spread is at most
/// config.tolerance or the iteration budget runs out. Running out of budget
/// is reported through `converged`, not thrown.
template <ElementDomain D>
ExtensionResult<typename D::element_type> extend_mean(
    const D& domain, const typename D::mean_type& mean,
    std::vector<typename D::element_type> inputs, const Scheme& scheme,
    const ConvergenceConfig& config) {
  using E = typename D::element_type;
  config.validate();
  const std::size_t n = inputs.size();
  if (n < 2) throw ConfigError("extension needs at least two inputs");

  const bool neighbor = std::holds_alternative<NeighborScheme>(scheme);
  if constexpr (OrderedDomain<D>) {
    if (neighbor) {
      std::sort(inputs.begin(), inputs.end(),
                [&](const E& a, const E& b) { return domain.less(a, b); });
    }
  }
  if (const auto* c = std::get_if<CycleScheme>(&scheme); c && n >= 3 && c->mapping.size() != n) {
    throw PreconditionError("cycle mapping size does not match the number of inputs");
  }

  ExtensionResult<E> result;
  IterationState<E> state{std::move(inputs), 0};
  auto record = [&] {
    const std::span<const E> xs(state.elements);
    const double rel = relative_spread(domain, xs);
    result.spread_history.push_back(domain.spread(xs));
    result.relative_spread_history.push_back(rel);
    if (config.capture_trace) result.trace.push_back(state);
    return rel <= config.tolerance;
  };

  const ConvergenceConfig sub = inner_config(config);
  bool done = record();
  while (!done && state.step < config.max_iterations) {
    if (n == 2) {
      // Every scheme reduces to the two-variable mean itself.
      E m = domain.mean(mean, state.elements[0], state.elements[1]);
      state.elements = {m, m};
      ++state.step;
    } else if (neighbor) {
      state = step_neighbor(domain, mean, state);
      if constexpr (OrderedDomain<D>) {
        for (std::size_t i = 1; i < n; ++i) {
          const E& a = state.elements[i - 1];
          const E& b = state.elements[i];
          if (domain.less(b, a) && domain.distance(a, b) > 1e-13 * domain.magnitude(a)) {
            throw std::logic_error("neighbor iteration lost sortedness at step " +
                                   std::to_string(state.step));
          }
        }
      }
    } else if (std::holds_alternative<VariationScheme>(scheme)) {
      state = step_variation(domain, mean, state, sub);
    } else {
      state = step_cycle(domain, mean, std::get<CycleScheme>(scheme).mapping, state);
    }
    done = record();
  }

  result.converged = done;
  result.iterations = state.step;
  result.value = state.elements.front();
  return result;
}

/// Per-step extrema of one scheme inside a rate comparison.
struct SchemeTable {
  std::string name;
  std::optional<CycleMapping> mapping;
  std::vector<double> min;
  std::vector<double> max;
  std::vector<double> spread;
  std::optional<std::size_t> steps_to_tolerance;
  double value = 0.0;
};

/// A step where a cycle scheme's extrema escaped the neighbor baseline's.
struct RateViolation {
  std::size_t mapping_index = 0;
  std::size_t step = 0;
  double baseline_min = 0.0;
  double cycle_min = 0.0;
  double baseline_max = 0.0;
  double cycle_max = 0.0;
};

struct RateReport {
  SchemeTable baseline;
  std::vector<SchemeTable> cycles;
  std::vector<RateViolation> violations;
  double slack = 0.0;
  std::size_t steps = 0;  // common table length minus one

  /// Mappings whose steps-to-tolerance exceeded the baseline's.
  std::vector<std::size_t> slower_than_baseline() const {
    std::vector<std::size_t> out;
    const auto base = baseline.steps_to_tolerance.value_or(std::numeric_limits<std::size_t>::max());
    for (std::size_t m = 0; m < cycles.size(); ++m) {
      const auto s = cycles[m].steps_to_tolerance.value_or(std::numeric_limits<std::size_t>::max());
      if (s > base) out.push_back(m);
    }
    return out;
  }
};

/// Runs the neighbor baseline and every cycle mapping in lockstep from the
/// same sorted scalar input, until all have converged or the budget is spent,
/// and records each step where min_baseline > min_cycle + slack or
/// max_baseline < max_cycle - slack.
inline RateReport compare_rates(const TwoVarMean& mean, std::span<const double> inputs,
                                const std::vector<CycleMapping>& mappings,
                                const ConvergenceConfig& config, double slack = 1e-12) {
  config.validate();
  const std::size_t n = inputs.size();
  if (n < 3) throw ConfigError("rate comparison needs n >= 3");
  if (!std::is_sorted(inputs.begin(), inputs.end())) {
    throw PreconditionError("rate comparison needs inputs sorted ascending");
  }
  for (const auto& m : mappings) {
    if (m.size() != n) throw PreconditionError("cycle mapping size does not match inputs");
  }

  const ScalarDomain domain;
  const std::size_t schemes = mappings.size() + 1;
  std::vector<IterationState<double>> states(
      schemes, IterationState<double>{std::vector<double>(inputs.begin(), inputs.end()), 0});

  RateReport report;
  report.slack = slack;
  report.baseline.name = "neighbor";
  for (std::size_t m = 0; m < mappings.size(); ++m) {
    SchemeTable t;
    t.name = "cycle#" + std::to_string(m);
    t.mapping = mappings[m];
    report.cycles.push_back(std::move(t));
  }
  auto table = [&](std::size_t s) -> SchemeTable& {
    return s == 0 ? report.baseline : report.cycles[s - 1];
  };

  auto record = [&](std::size_t k) {
    bool all = true;
    for (std::size_t s = 0; s < schemes; ++s) {
      const auto& xs = states[s].elements;
      const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
      SchemeTable& t = table(s);
      t.min.push_back(*lo);
      t.max.push_back(*hi);
      t.spread.push_back(*hi - *lo);
      if (!t.steps_to_tolerance && relative_spread(domain, std::span<const double>(xs)) <= config.tolerance) {
        t.steps_to_tolerance = k;
      }
      all = all && t.steps_to_tolerance.has_value();
    }
    for (std::size_t m = 0; m < mappings.size(); ++m) {
      const SchemeTable& c = report.cycles[m];
      const double bmin = report.baseline.min.back(), bmax = report.baseline.max.back();
      if (bmin > c.min.back() + slack || bmax < c.max.back() - slack) {
        report.violations.push_back({m, k, bmin, c.min.back(), bmax, c.max.back()});
      }
    }
    return all;
  };

  std::size_t k = 0;
  bool done = record(k);
  while (!done && k < config.max_iterations) {
    ++k;
    states[0] = step_neighbor(domain, mean, states[0]);
    for (std::size_t m = 0; m < mappings.size(); ++m) {
      states[m + 1] = step_cycle(domain, mean, mappings[m], states[m + 1]);
    }
    done = record(k);
  }
  report.steps = k;
  for (std::size_t s = 0; s < schemes; ++s) table(s).value = states[s].elements.front();
  return report;
}

}  // namespace itermean
