#pragma once

// Symmetric positive-definite matrices as an element domain: validated
// storage, spectral kernels, the arithmetic/harmonic/geometric operator means,
// the Loewner order, and the equal-norm sandwich verifier.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "itermean/engine.hpp"
#include "itermean/errors.hpp"

namespace itermean {

inline constexpr std::size_t kMaxSpdDimension = 64;

namespace detail {

inline Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigen_of(const Eigen::MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a);
  if (solver.info() != Eigen::Success) throw DomainError("symmetric eigensolver failed");
  return solver;
}

// V f(Lambda) V^T, symmetrized.
template <class F>
Eigen::MatrixXd spectral_apply(const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>& es, F&& f) {
  const Eigen::VectorXd mapped = es.eigenvalues().unaryExpr(std::forward<F>(f));
  Eigen::MatrixXd out = es.eigenvectors() * mapped.asDiagonal() * es.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

/// Largest absolute eigenvalue of a symmetric matrix.
inline double symmetric_norm(const Eigen::MatrixXd& a) {
  if (a.size() == 0) return 0.0;
  const Eigen::VectorXd ev = eigen_of(a).eigenvalues();
  return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
}

}  // namespace detail

/// Dense symmetric positive-definite matrix. Construction validates symmetry
/// (|a_ij - a_ji| <= 1e-12 (1 + |a_ij|)) and definiteness
/// (lambda_min > 1e-12 lambda_max), then stores the symmetrized matrix.
class SpdMatrix {
 public:
  /// 1x1 identity.
  SpdMatrix() : m_(Eigen::MatrixXd::Identity(1, 1)) {}

  explicit SpdMatrix(const Eigen::MatrixXd& m) : m_(validated(m)) {}

  static SpdMatrix from_row_major(std::size_t d, std::span<const double> entries) {
    if (d < 1 || d > kMaxSpdDimension) {
      throw ConfigError("dimension must be in [1, " + std::to_string(kMaxSpdDimension) + "]");
    }
    if (entries.size() != d * d) {
      throw ConfigError("expected " + std::to_string(d * d) + " entries, got " +
                        std::to_string(entries.size()));
    }
    Eigen::MatrixXd m(d, d);
    for (std::size_t r = 0; r < d; ++r) {
      for (std::size_t c = 0; c < d; ++c) m(r, c) = entries[r * d + c];
    }
    return SpdMatrix(m);
  }

  static SpdMatrix identity(std::size_t d) {
    return SpdMatrix(Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d)));
  }

  static SpdMatrix diagonal(std::span<const double> diag) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(diag.size()));
    for (std::size_t i = 0; i < diag.size(); ++i) v(static_cast<Eigen::Index>(i)) = diag[i];
    return SpdMatrix(Eigen::MatrixXd(v.asDiagonal()));
  }

  std::size_t dimension() const noexcept { return static_cast<std::size_t>(m_.rows()); }
  const Eigen::MatrixXd& matrix() const noexcept { return m_; }
  double operator()(std::size_t r, std::size_t c) const {
    return m_(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  }

  std::vector<double> row_major() const {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(m_.size()));
    for (Eigen::Index r = 0; r < m_.rows(); ++r) {
      for (Eigen::Index c = 0; c < m_.cols(); ++c) out.push_back(m_(r, c));
    }
    return out;
  }

 private:
  static Eigen::MatrixXd validated(const Eigen::MatrixXd& m) {
    const Eigen::Index d = m.rows();
    if (d < 1 || m.cols() != d || static_cast<std::size_t>(d) > kMaxSpdDimension) {
      throw DomainError("SPD matrix must be square with dimension in [1, 64]");
    }
    if (!m.allFinite()) throw DomainError("matrix has non-finite entries");
    for (Eigen::Index r = 0; r < d; ++r) {
      for (Eigen::Index c = r + 1; c < d; ++c) {
        if (std::abs(m(r, c) - m(c, r)) > 1e-12 * (1.0 + std::abs(m(r, c)))) {
          throw DomainError("matrix is not symmetric at (" + std::to_string(r) + ", " +
                            std::to_string(c) + ")");
        }
      }
    }
    Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
    const Eigen::VectorXd ev = detail::eigen_of(sym).eigenvalues();
    const double lo = ev(0), hi = ev(d - 1);
    if (!(hi > 0.0) || !(lo > 1e-12 * hi)) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "matrix is not positive definite (eigenvalue %.17g)", lo);
      throw DomainError(buf);
    }
    return sym;
  }

  Eigen::MatrixXd m_;
};

inline void require_same_dimension(const SpdMatrix& a, const SpdMatrix& b) {
  if (a.dimension() != b.dimension()) {
    throw ConfigError("dimension mismatch: " + std::to_string(a.dimension()) + " vs " +
                      std::to_string(b.dimension()));
  }
}

inline SpdMatrix spd_add(const SpdMatrix& a, const SpdMatrix& b) {
  require_same_dimension(a, b);
  return SpdMatrix(a.matrix() + b.matrix());
}

inline SpdMatrix spd_scale(const SpdMatrix& a, double c) {
  if (!(c > 0.0) || !std::isfinite(c)) throw DomainError("scale factor must be positive");
  return SpdMatrix(c * a.matrix());
}

inline SpdMatrix spd_inverse(const SpdMatrix& a) {
  return SpdMatrix(detail::spectral_apply(detail::eigen_of(a.matrix()), [](double l) { return 1.0 / l; }));
}

inline SpdMatrix spd_sqrt(const SpdMatrix& a) {
  return SpdMatrix(detail::spectral_apply(detail::eigen_of(a.matrix()), [](double l) { return std::sqrt(l); }));
}

/// Operator (spectral) norm: the largest eigenvalue.
inline double spd_norm(const SpdMatrix& a) {
  return detail::eigen_of(a.matrix()).eigenvalues().maxCoeff();
}

/// Operator norm of A - B.
inline double spd_distance(const SpdMatrix& a, const SpdMatrix& b) {
  require_same_dimension(a, b);
  return detail::symmetric_norm(a.matrix() - b.matrix());
}

/// A <= B in the Loewner order, up to tol * ||B||.
inline bool loewner_leq(const SpdMatrix& a, const SpdMatrix& b, double tol = 1e-12) {
  require_same_dimension(a, b);
  const Eigen::MatrixXd diff = b.matrix() - a.matrix();
  const double lo = detail::eigen_of(0.5 * (diff + diff.transpose())).eigenvalues()(0);
  return lo >= -tol * spd_norm(b);
}

enum class OperatorMeanKind { arithmetic, harmonic, geometric };

struct OperatorMean {
  OperatorMeanKind kind = OperatorMeanKind::arithmetic;

  std::string name() const {
    switch (kind) {
      case OperatorMeanKind::arithmetic: return "arithmetic";
      case OperatorMeanKind::harmonic: return "harmonic";
      case OperatorMeanKind::geometric: return "geometric";
    }
    return "?";
  }

  friend bool operator==(const OperatorMean&, const OperatorMean&) = default;
};

inline OperatorMean parse_operator_mean_spec(std::string_view spec) {
  if (spec == "arithmetic") return {OperatorMeanKind::arithmetic};
  if (spec == "harmonic") return {OperatorMeanKind::harmonic};
  if (spec == "geometric") return {OperatorMeanKind::geometric};
  throw ConfigError("mean spec '" + std::string(spec) +
                    "' has no operator version (expected arithmetic|geometric|harmonic)");
}

/// (A+B)/2, 2(A^-1 + B^-1)^-1, or A^1/2 (A^-1/2 B A^-1/2)^1/2 A^1/2.
inline SpdMatrix eval_operator_mean(const OperatorMean& mean, const SpdMatrix& a, const SpdMatrix& b) {
  require_same_dimension(a, b);
  switch (mean.kind) {
    case OperatorMeanKind::arithmetic:
      return SpdMatrix(0.5 * (a.matrix() + b.matrix()));
    case OperatorMeanKind::harmonic: {
      const Eigen::MatrixXd inv_sum = spd_inverse(a).matrix() + spd_inverse(b).matrix();
      const auto es = detail::eigen_of(0.5 * (inv_sum + inv_sum.transpose()));
      return SpdMatrix(detail::spectral_apply(es, [](double l) { return 2.0 / l; }));
    }
    case OperatorMeanKind::geometric: {
      const auto ea = detail::eigen_of(a.matrix());
      const Eigen::MatrixXd a_half = detail::spectral_apply(ea, [](double l) { return std::sqrt(l); });
      const Eigen::MatrixXd a_inv_half =
          detail::spectral_apply(ea, [](double l) { return 1.0 / std::sqrt(l); });
      Eigen::MatrixXd inner = a_inv_half * b.matrix() * a_inv_half;
      inner = 0.5 * (inner + inner.transpose());
      const Eigen::MatrixXd inner_half =
          detail::spectral_apply(detail::eigen_of(inner), [](double l) { return std::sqrt(std::max(l, 0.0)); });
      Eigen::MatrixXd out = a_half * inner_half * a_half;
      return SpdMatrix(0.5 * (out + out.transpose()));
    }
  }
  throw ConfigError("unknown operator mean");
}

/// SPD matrices under the operator means; spread is the largest pairwise
/// operator-norm distance. No total order, so schemes use positions as given.
struct SpdDomain {
  using element_type = SpdMatrix;
  using mean_type = OperatorMean;
  static constexpr bool is_ordered = false;

  SpdMatrix mean(const OperatorMean& m, const SpdMatrix& a, const SpdMatrix& b) const {
    return eval_operator_mean(m, a, b);
  }
  double distance(const SpdMatrix& a, const SpdMatrix& b) const { return spd_distance(a, b); }
  double magnitude(const SpdMatrix& a) const { return spd_norm(a); }

  double spread(std::span<const SpdMatrix> xs) const {
    double out = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      for (std::size_t j = i + 1; j < xs.size(); ++j) out = std::max(out, spd_distance(xs[i], xs[j]));
    }
    return out;
  }
};

static_assert(ElementDomain<SpdDomain>);

inline SpdDomain spd_domain() { return {}; }

/// Scaling schedule for the sandwich construction: returns (a_t, a'_t) with
/// a_t >= 1 >= a'_t > 0, both monotone toward 1.
using SandwichSchedule = std::function<std::pair<double, double>(int)>;

inline std::pair<double, double> default_sandwich_schedule(int t) {
  return {1.0 + std::ldexp(1.0, -t), 1.0 - std::ldexp(1.0, -t - 1)};
}

struct SandwichConfig {
  int t_max = 30;
  SandwichSchedule schedule = default_sandwich_schedule;
  // Limits are compared near t_max where they differ by ~2^-t, so the runs
  // are converged well below that.
  ConvergenceConfig engine{1e-13, 10000, false};
  // Loewner slack relative to the norm of the larger side; covers the
  // engine's residual spread.
  double loewner_tolerance = 1e-11;
  // Norms of the inputs must agree to this relative precision.
  double norm_equality = 1e-10;
};

struct SandwichStep {
  int t = 0;
  double a_upper = 1.0;  // a_t, scales X_1 upward
  double a_lower = 1.0;  // a'_t, scales X_1 downward
  SpdMatrix lower_limit;  // limit from a'_t X_1
  SpdMatrix upper_limit;  // limit from a_t X_1
  bool lower_converged = false;
  bool upper_converged = false;
  bool lower_below = false;  // lower_limit <= unperturbed limit
  bool upper_above = false;  // unperturbed limit <= upper_limit
  double gap = 0.0;          // ||upper_limit - lower_limit||
};

struct SandwichReport {
  std::string norm = "operator (spectral)";
  SpdMatrix limit;  // unperturbed
  bool converged = false;
  std::size_t iterations = 0;
  double limit_norm = 0.0;
  double loewner_tolerance = 0.0;
  std::vector<SandwichStep> steps;

  bool all_converged() const {
    return converged && std::all_of(steps.begin(), steps.end(), [](const SandwichStep& s) {
             return s.lower_converged && s.upper_converged;
           });
  }
  bool all_sandwiched() const {
    return std::all_of(steps.begin(), steps.end(),
                       [](const SandwichStep& s) { return s.lower_below && s.upper_above; });
  }
  bool gaps_non_increasing(double slack) const {
    for (std::size_t i = 1; i < steps.size(); ++i) {
      if (steps[i].gap > steps[i - 1].gap + slack) return false;
    }
    return true;
  }
  double final_relative_gap() const {
    return steps.empty() ? 0.0 : steps.back().gap / std::max(limit_norm, 1e-300);
  }
};

/// Brackets the neighbor-scheme limit of equal-norm inputs between the limits
/// obtained with X_1 scaled by a'_t <= 1 and a_t >= 1, for t = 0..t_max.
/// Verdicts are recorded per t rather than asserted.
inline SandwichReport sandwich_verify(const OperatorMean& mean, const std::vector<SpdMatrix>& inputs,
                                      const SandwichConfig& config = {}) {
  if (inputs.size() < 2) throw ConfigError("sandwich needs at least two inputs");
  if (config.t_max < 0) throw ConfigError("t-max must be non-negative");
  config.engine.validate();
  const std::size_t d = inputs.front().dimension();
  for (const auto& x : inputs) {
    if (x.dimension() != d) throw ConfigError("sandwich inputs must share one dimension");
  }
  const double norm0 = spd_norm(inputs.front());
  for (std::size_t i = 1; i < inputs.size(); ++i) {
    const double ni = spd_norm(inputs[i]);
    if (std::abs(ni - norm0) > config.norm_equality * std::max(ni, norm0)) {
      char buf[128];
      std::snprintf(buf, sizeof buf,
                    "input %zu has norm %.17g, input 0 has %.17g; sandwich needs equal norms", i, ni,
                    norm0);
      throw PreconditionError(buf);
    }
  }

  const SpdDomain domain;
  const auto base = extend_mean(domain, mean, inputs, NeighborScheme{}, config.engine);
  SandwichReport report;
  report.limit = base.value;
  report.converged = base.converged;
  report.iterations = base.iterations;
  report.limit_norm = spd_norm(base.value);
  report.loewner_tolerance = config.loewner_tolerance;

  for (int t = 0; t <= config.t_max; ++t) {
    const auto [up, down] = config.schedule(t);
    if (!(up >= 1.0) || !(down > 0.0 && down <= 1.0)) {
      throw ConfigError("schedule must give a_t >= 1 and 0 < a'_t <= 1 at t = " + std::to_string(t));
    }
    auto upper_inputs = inputs;
    auto lower_inputs = inputs;
    upper_inputs[0] = spd_scale(inputs[0], up);
    lower_inputs[0] = spd_scale(inputs[0], down);
    const auto upper = extend_mean(domain, mean, std::move(upper_inputs), NeighborScheme{}, config.engine);
    const auto lower = extend_mean(domain, mean, std::move(lower_inputs), NeighborScheme{}, config.engine);

    report.steps.push_back(SandwichStep{
        .t = t,
        .a_upper = up,
        .a_lower = down,
        .lower_limit = lower.value,
        .upper_limit = upper.value,
        .lower_converged = lower.converged,
        .upper_converged = upper.converged,
        .lower_below = loewner_leq(lower.value, base.value, config.loewner_tolerance),
        .upper_above = loewner_leq(base.value, upper.value, config.loewner_tolerance),
        .gap = spd_distance(upper.value, lower.value),
    });
  }
  return report;
}

}  // namespace itermean
