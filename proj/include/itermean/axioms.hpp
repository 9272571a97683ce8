#pragma once

// Randomized checkers for the two-variable and n-variable mean axioms.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "itermean/errors.hpp"
#include "itermean/means.hpp"

namespace itermean {

struct DomainBox {
  double low = 1e-3;
  double high = 1e3;
};

struct AxiomVerdict {
  std::string axiom;
  bool passed = true;
  // First violation found: the arguments and the values that exhibit it.
  std::vector<double> counterexample_inputs;
  std::vector<double> counterexample_values;
  std::string detail;
};

struct AxiomReport {
  std::vector<AxiomVerdict> verdicts;
  std::size_t samples = 0;
  std::size_t n = 2;
  DomainBox box;
  // Largest finite-difference ratio |dM|/h seen by the continuity probe.
  double continuity_constant = 0.0;

  bool all_passed() const {
    return std::all_of(verdicts.begin(), verdicts.end(),
                       [](const AxiomVerdict& v) { return v.passed; });
  }

  const AxiomVerdict& verdict(std::string_view axiom) const {
    for (const auto& v : verdicts) {
      if (v.axiom == axiom) return v;
    }
    throw ConfigError("no verdict for axiom '" + std::string(axiom) + "'");
  }
};

using TwoVarFunction = std::function<double(double, double)>;
using NVarEvaluator = std::function<double(std::span<const double>)>;

namespace detail {

inline constexpr double kMonotoneSlack = 1e-12;
inline constexpr std::array<double, 4> kProbeSteps = {1e-3, 1e-4, 1e-5, 1e-6};

inline void validate_box(const DomainBox& box) {
  if (!(box.low > 0.0) || !(box.low < box.high) || !std::isfinite(box.high)) {
    throw ConfigError("domain box must satisfy 0 < low < high < inf");
  }
}

// Log-uniform sampler over the box.
class BoxSampler {
 public:
  BoxSampler(const DomainBox& box, std::uint64_t seed)
      : rng_(seed), dist_(std::log(box.low), std::log(box.high)) {}

  double operator()() { return std::exp(dist_(rng_)); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
  std::uniform_real_distribution<double> dist_;
};

inline void fail_once(AxiomVerdict& v, std::vector<double> inputs, std::vector<double> values,
                      std::string detail) {
  if (!v.passed) return;
  v.passed = false;
  v.counterexample_inputs = std::move(inputs);
  v.counterexample_values = std::move(values);
  v.detail = std::move(detail);
}

// Finite-difference probe: the increment must shrink with the step. A jump of
// size J shows up as a ratio J/h that blows up as h decreases.
template <class F>
bool continuity_probe(F&& shifted, double base, double& constant_out) {
  std::array<double, kProbeSteps.size()> diff{};
  for (std::size_t j = 0; j < kProbeSteps.size(); ++j) {
    diff[j] = std::abs(shifted(kProbeSteps[j]) - base);
    if (!std::isfinite(diff[j])) return false;
    constant_out = std::max(constant_out, diff[j] / kProbeSteps[j]);
  }
  const double reference = std::max(diff[0] / kProbeSteps[0], 1e-300);
  const double noise = 1e-9 * (1.0 + std::abs(base));
  for (std::size_t j = 1; j < kProbeSteps.size(); ++j) {
    if (diff[j] > 10.0 * reference * kProbeSteps[j] + noise) return false;
  }
  return true;
}

}  // namespace detail

/// Checks idempotence, symmetry, strict internality, strict joint
/// monotonicity and continuity of `f` on `samples` random pairs.
inline AxiomReport check_two_var_axioms(const TwoVarFunction& f, std::size_t samples,
                                        const DomainBox& box = {}, std::uint64_t seed = 0) {
  if (samples < 1) throw ConfigError("samples must be >= 1");
  detail::validate_box(box);

  AxiomReport report;
  report.samples = samples;
  report.box = box;
  report.n = 2;
  AxiomVerdict idem, sym, internal, mono, cont;
  idem.axiom = "idempotence";
  sym.axiom = "symmetry";
  internal.axiom = "internality";
  mono.axiom = "monotonicity";
  cont.axiom = "continuity";

  detail::BoxSampler sample(box, seed);
  for (std::size_t s = 0; s < samples; ++s) {
    double x = sample();
    double y = sample();
    if (x > y) std::swap(x, y);

    const double fxx = f(x, x);
    if (std::abs(fxx - x) > 4.0 * std::numeric_limits<double>::epsilon() * x) {
      detail::fail_once(idem, {x, x}, {fxx}, "M(x,x) != x");
    }

    const double fxy = f(x, y);
    const double fyx = f(y, x);
    if (std::abs(fxy - fyx) > 1e-14 * std::max(std::abs(fxy), std::abs(fyx))) {
      detail::fail_once(sym, {x, y}, {fxy, fyx}, "M(x,y) != M(y,x)");
    }

    if (x < y && !(x < fxy && fxy < y)) {
      detail::fail_once(internal, {x, y}, {fxy}, "M(x,y) not strictly between x and y");
    }

    const double xp = x * (1.0 + sample.uniform(1e-3, 0.5));
    const double yp = y * (1.0 + sample.uniform(1e-3, 0.5));
    const double fp = f(xp, yp);
    if (!(fp - fxy > -detail::kMonotoneSlack)) {
      detail::fail_once(mono, {x, y, xp, yp}, {fxy, fp}, "M(x',y') <= M(x,y) with x<x', y<y'");
    }

    if (!detail::continuity_probe([&](double h) { return f(x + h, y); }, fxy,
                                  report.continuity_constant)) {
      detail::fail_once(cont, {x, y}, {fxy}, "finite differences do not shrink with the step");
    }
  }
  report.verdicts = {idem, sym, internal, mono, cont};
  return report;
}

inline AxiomReport check_two_var_axioms(const TwoVarMean& mean, std::size_t samples,
                                        const DomainBox& box = {}, std::uint64_t seed = 0) {
  return check_two_var_axioms([&](double x, double y) { return eval_mean(mean, x, y); }, samples,
                              box, seed);
}

/// Checks the n-variable axioms on `evaluator`: idempotence, permutation
/// invariance (all n! orderings for n <= 5, 24 random shuffles otherwise),
/// internality, monotonicity in one coordinate, strict monotonicity in all
/// coordinates, and continuity. `tolerance` is relative to the largest input.
inline AxiomReport check_n_var_axioms(const NVarEvaluator& evaluator, std::size_t n,
                                      std::size_t samples, const DomainBox& box = {},
                                      double tolerance = 1e-9, std::uint64_t seed = 0) {
  if (n < 3) throw ConfigError("n-variable axiom check needs n >= 3");
  if (samples < 1) throw ConfigError("samples must be >= 1");
  if (!(tolerance > 0.0)) throw ConfigError("tolerance must be positive");
  detail::validate_box(box);

  auto eval = [&](std::span<const double> xs) {
    try {
      return evaluator(xs);
    } catch (const std::exception& e) {
      throw EvaluationError(e.what(), format_tuple(xs));
    }
  };

  AxiomReport report;
  report.samples = samples;
  report.box = box;
  report.n = n;
  AxiomVerdict idem, perm, internal, mono_one, mono_all, cont;
  idem.axiom = "idempotence";
  perm.axiom = "permutation_invariance";
  internal.axiom = "internality";
  mono_one.axiom = "monotonicity_single";
  mono_all.axiom = "monotonicity_strict_all";
  cont.axiom = "continuity";

  detail::BoxSampler sample(box, seed);
  std::vector<double> xs(n), ys(n);
  for (std::size_t s = 0; s < samples; ++s) {
    for (auto& x : xs) x = sample();
    const double lo = *std::min_element(xs.begin(), xs.end());
    const double hi = *std::max_element(xs.begin(), xs.end());
    const double slack = tolerance * hi;
    const double m = eval(xs);

    const double c = xs[0];
    std::vector<double> constant(n, c);
    const double mc = eval(constant);
    if (std::abs(mc - c) > tolerance * c) {
      detail::fail_once(idem, constant, {mc}, "M_n(x,...,x) != x");
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    auto check_order = [&] {
      for (std::size_t i = 0; i < n; ++i) ys[i] = xs[order[i]];
      const double mp = eval(ys);
      if (std::abs(mp - m) > slack) {
        detail::fail_once(perm, ys, {m, mp}, "limit depends on the ordering of the inputs");
      }
    };
    if (n <= 5) {
      while (std::next_permutation(order.begin(), order.end())) check_order();
    } else {
      for (int r = 0; r < 24; ++r) {
        std::shuffle(order.begin(), order.end(), sample.engine());
        check_order();
      }
    }

    if (m < lo - slack || m > hi + slack) {
      detail::fail_once(internal, xs, {m}, "M_n outside [min, max]");
    }

    const std::size_t i = s % n;
    ys = xs;
    ys[i] *= 1.0 + sample.uniform(1e-3, 0.5);
    const double m_one = eval(ys);
    if (m_one < m - slack) {
      detail::fail_once(mono_one, ys, {m, m_one}, "raising one coordinate lowered M_n");
    }

    for (std::size_t j = 0; j < n; ++j) ys[j] = xs[j] * (1.0 + sample.uniform(1e-3, 0.5));
    const double m_all = eval(ys);
    if (!(m_all > m)) {
      detail::fail_once(mono_all, ys, {m, m_all}, "raising every coordinate did not raise M_n");
    }

    if (!detail::continuity_probe(
            [&](double h) {
              ys = xs;
              ys[i] += h * xs[i];
              return eval(ys);
            },
            m, report.continuity_constant)) {
      detail::fail_once(cont, xs, {m}, "finite differences do not shrink with the step");
    }
  }
  report.verdicts = {idem, perm, internal, mono_one, mono_all, cont};
  return report;
}

}  // namespace itermean
