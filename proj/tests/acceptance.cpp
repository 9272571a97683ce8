// Acceptance suite: one test per criterion, each printing a single
// "[criterion N] PASS|FAIL  summary" line.

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "itermean/itermean.hpp"
#include "test_support.hpp"

using namespace itermean;
using itermean::testing::equal_norm_instance;
using itermean::testing::log_uniform;

namespace {

const ScalarDomain kScalars;

void verdict(int criterion, bool pass, const std::string& summary) {
  std::printf("[criterion %d] %s  %s\n", criterion, pass ? "PASS" : "FAIL", summary.c_str());
  std::fflush(stdout);
  EXPECT_TRUE(pass) << summary;
}

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

std::vector<Scheme> three_schemes(std::size_t n, std::uint64_t seed) {
  return {VariationScheme{}, NeighborScheme{}, CycleScheme{CycleMapping::random(n, seed)}};
}

const std::vector<TwoVarMean>& rate_means() {
  static const std::vector<TwoVarMean> means{
      TwoVarMean::arithmetic(),  TwoVarMean::geometric(),  TwoVarMean::harmonic(),
      TwoVarMean::logarithmic(), TwoVarMean::power(-2.0),  TwoVarMean::power(-0.5),
      TwoVarMean::power(0.5),    TwoVarMean::power(2.0),   TwoVarMean::power(3.0)};
  return means;
}

// Every step of a run: min never decreases, max never increases, so each new
// element stays inside the range of the previous state. The slack allows a few
// ulps of rounding in the two-variable kernels.
struct EnvelopeAudit {
  static constexpr double kSlack = 1e-14;
  std::size_t runs = 0;
  std::size_t steps = 0;
  std::size_t violations = 0;
  std::string first;

  void extrema(const std::vector<double>& lo, const std::vector<double>& hi, const std::string& label) {
    ++runs;
    for (std::size_t k = 1; k < lo.size(); ++k) {
      ++steps;
      const double slack = kSlack * hi[k - 1];
      if (lo[k] < lo[k - 1] - slack || hi[k] > hi[k - 1] + slack || lo[k] > hi[k]) {
        if (violations++ == 0) first = label + " step " + std::to_string(k);
      }
    }
  }

  void trace(const std::vector<IterationState<double>>& states, const std::string& label) {
    std::vector<double> lo, hi;
    for (const auto& s : states) {
      const auto [a, b] = std::minmax_element(s.elements.begin(), s.elements.end());
      lo.push_back(*a);
      hi.push_back(*b);
    }
    extrema(lo, hi, label);
  }
};

ConvergenceConfig traced(ConvergenceConfig cfg, const EnvelopeAudit* audit) {
  cfg.capture_trace = audit != nullptr;
  return cfg;
}

// ---- workloads shared by criteria 1-4 and the envelope audit of criterion 5

struct ClosedFormResult {
  std::size_t runs = 0;
  std::size_t failures = 0;
  double worst = 0.0;
  std::string worst_case;
};

ClosedFormResult closed_form_workload(EnvelopeAudit* audit) {
  ClosedFormResult r;
  std::mt19937_64 rng(1001);
  const std::pair<TwoVarMean, double (*)(std::span<const double>)> cases[] = {
      {TwoVarMean::arithmetic(), oracles::arithmetic_n},
      {TwoVarMean::geometric(), oracles::geometric_n},
      {TwoVarMean::harmonic(), oracles::harmonic_n}};
  for (int i = 0; i < 200; ++i) {
    const std::size_t n = 3 + static_cast<std::size_t>(i) % 6;
    const auto xs = log_uniform(rng, n);
    for (const auto& [mean, oracle] : cases) {
      const double expect = oracle(xs);
      for (const auto& scheme : three_schemes(n, 5000 + static_cast<std::uint64_t>(i))) {
        const auto res = extend_mean(kScalars, mean, xs, scheme, traced({}, audit));
        ++r.runs;
        const double err = res.converged ? rel(res.value, expect) : INFINITY;
        if (err > 1e-10) ++r.failures;
        if (err >= r.worst) {
          r.worst = err;
          r.worst_case = mean.name() + "/" + scheme_name(scheme) + " n=" + std::to_string(n);
        }
        if (audit) audit->trace(res.trace, "closed-form " + mean.name() + "/" + scheme_name(scheme));
      }
    }
  }
  return r;
}

struct TraceFormulaResult {
  std::size_t checks = 0;
  std::size_t failures = 0;
  double worst = 0.0;
};

// Variation steps are taken one at a time so the comparison covers every
// k <= 25 even where the run would have met its tolerance sooner.
TraceFormulaResult trace_formula_workload(EnvelopeAudit* audit) {
  TraceFormulaResult r;
  ConvergenceConfig engine;
  engine.tolerance = 1e-13;
  const ConvergenceConfig sub = inner_config(engine);
  std::mt19937_64 rng(1002);
  for (std::size_t n = 3; n <= 5; ++n) {
    for (int s = 0; s < 50; ++s) {
      auto xs = log_uniform(rng, n);
      std::sort(xs.begin(), xs.end());
      std::vector<IterationState<double>> states{{xs, 0}};
      for (int k = 0; k <= 25; ++k) {
        if (k > 0) states.push_back(step_variation(kScalars, TwoVarMean::arithmetic(), states.back(), sub));
        const auto& el = states.back().elements;
        const auto [lo, hi] = std::minmax_element(el.begin(), el.end());
        const auto e = oracles::arithmetic_trace_endpoints(xs, k);
        const double err = std::max(rel(*lo, e.x1k), rel(*hi, e.xnk));
        ++r.checks;
        if (err > 1e-12) ++r.failures;
        r.worst = std::max(r.worst, err);
      }
      if (audit) audit->trace(states, "trace-formula n=" + std::to_string(n));
    }
  }
  return r;
}

struct AgreementResult {
  std::map<std::string, double> worst;  // per mean
  std::map<std::string, std::string> worst_case;
  std::size_t runs = 0;
  std::size_t nonconverged = 0;
};

AgreementResult agreement_workload(EnvelopeAudit* audit) {
  AgreementResult r;
  const std::vector<TwoVarMean> means{TwoVarMean::logarithmic(), TwoVarMean::power(-2.0),
                                      TwoVarMean::power(-0.5),   TwoVarMean::power(0.5),
                                      TwoVarMean::power(2.0),    TwoVarMean::power(3.0)};
  std::mt19937_64 rng(1003);
  for (std::size_t n = 3; n <= 6; ++n) {
    for (int s = 0; s < 50; ++s) {
      const auto xs = log_uniform(rng, n);
      std::vector<Scheme> schemes{VariationScheme{}, NeighborScheme{}};
      for (int m = 0; m < 50; ++m) schemes.push_back(CycleScheme{CycleMapping::random(n, rng)});
      for (const auto& mean : means) {
        std::vector<double> limits;
        for (const auto& scheme : schemes) {
          const auto res = extend_mean(kScalars, mean, xs, scheme, traced({}, audit));
          ++r.runs;
          if (!res.converged) ++r.nonconverged;
          limits.push_back(res.value);
          if (audit) audit->trace(res.trace, "agreement " + mean.name() + "/" + scheme_name(scheme));
        }
        const auto [lo, hi] = std::minmax_element(limits.begin(), limits.end());
        const double spread = (*hi - *lo) / *hi;
        if (spread >= r.worst[mean.name()]) {
          r.worst[mean.name()] = spread;
          r.worst_case[mean.name()] = "n=" + std::to_string(n) + " x=" + format_tuple(xs);
        }
      }
    }
  }
  return r;
}

struct RateResult {
  std::map<std::string, std::size_t> violations;  // per mean
  std::map<std::string, std::string> first;
  std::size_t instances = 0;
};

RateResult rate_workload(EnvelopeAudit* audit) {
  RateResult r;
  std::mt19937_64 rng(1004);
  for (int i = 0; i < 100; ++i) {
    const std::size_t n = 3 + static_cast<std::size_t>(i) % 6;
    auto xs = log_uniform(rng, n);
    std::sort(xs.begin(), xs.end());
    std::vector<CycleMapping> mappings;
    for (int m = 0; m < 10; ++m) mappings.push_back(CycleMapping::random(n, rng));
    ++r.instances;
    for (const auto& mean : rate_means()) {
      const auto report = compare_rates(mean, xs, mappings, {});
      auto& count = r.violations[mean.name()];
      if (!report.violations.empty() && count == 0) {
        const auto& v = report.violations.front();
        std::ostringstream os;
        os << "instance " << i << " x=" << format_tuple(xs) << " mapping " << v.mapping_index << " step "
           << v.step;
        r.first[mean.name()] = os.str();
      }
      count += report.violations.size();
      if (audit) {
        audit->extrema(report.baseline.min, report.baseline.max, "rate baseline " + mean.name());
        for (const auto& c : report.cycles) audit->extrema(c.min, c.max, "rate " + c.name + " " + mean.name());
      }
    }
  }
  return r;
}

}  // namespace

TEST(Acceptance, Criterion01_ClosedFormAgreement) {
  const auto r = closed_form_workload(nullptr);
  verdict(1, r.failures == 0 && r.runs == 1800,
          std::to_string(r.runs) + " runs, " + std::to_string(r.failures) + " outside 1e-10; worst " +
              fmt("%.2e", r.worst) + " (" + r.worst_case + ")");
}

TEST(Acceptance, Criterion02_TraceFormula) {
  const auto r = trace_formula_workload(nullptr);
  verdict(2, r.failures == 0,
          std::to_string(r.checks) + " (n, input, k) checks, " + std::to_string(r.failures) +
              " outside 1e-12; worst " + fmt("%.2e", r.worst));
}

TEST(Acceptance, Criterion03_SchemeAgreement) {
  const auto r = agreement_workload(nullptr);
  bool pass = r.nonconverged == 0;
  std::string summary = std::to_string(r.runs) + " runs, " + std::to_string(r.nonconverged) + " unconverged;";
  for (const auto& [name, worst] : r.worst) {
    pass = pass && worst <= 1e-9;
    summary += " " + name + " " + fmt("%.2e", worst);
  }
  for (const auto& [name, worst] : r.worst) {
    if (worst > 1e-9) summary += "; " + name + " worst at " + r.worst_case.at(name);
  }
  verdict(3, pass, summary);
}

TEST(Acceptance, Criterion04_RateSandwich) {
  const auto r = rate_workload(nullptr);
  bool pass = true;
  std::string summary = std::to_string(r.instances) + " instances x 10 mappings; violations:";
  for (const auto& [name, count] : r.violations) {
    pass = pass && count == 0;
    summary += " " + name + "=" + std::to_string(count);
  }
  for (const auto& [name, where] : r.first) summary += "; first " + name + " violation: " + where;
  verdict(4, pass, summary);
}

TEST(Acceptance, Criterion05_EnvelopeAndInternality) {
  EnvelopeAudit audit;
  closed_form_workload(&audit);
  trace_formula_workload(&audit);
  agreement_workload(&audit);
  rate_workload(&audit);
  verdict(5, audit.violations == 0 && audit.runs > 0,
          std::to_string(audit.runs) + " runs, " + std::to_string(audit.steps) + " steps audited, " +
              std::to_string(audit.violations) + " envelope violations" +
              (audit.first.empty() ? "" : " (first: " + audit.first + ")"));
}

TEST(Acceptance, Criterion06_InequalityPreservation) {
  std::mt19937_64 rng(1006);
  std::size_t samples = 0, failures = 0;
  double smallest_gap = INFINITY;
  while (samples < 200) {
    const std::size_t n = 3 + samples % 6;
    const auto xs = log_uniform(rng, n);
    if (*std::max_element(xs.begin(), xs.end()) == *std::min_element(xs.begin(), xs.end())) continue;
    ++samples;
    for (const auto& scheme : three_schemes(n, 6000 + samples)) {
      auto ext = [&](const TwoVarMean& m) { return extend_mean(kScalars, m, xs, scheme, {}).value; };
      const double h = ext(TwoVarMean::harmonic()), g = ext(TwoVarMean::geometric()),
                   l = ext(TwoVarMean::logarithmic()), a = ext(TwoVarMean::arithmetic());
      const double gap = std::min({(g - h) / a, (l - g) / a, (a - l) / a});
      smallest_gap = std::min(smallest_gap, gap);
      if (!(gap > 1e-12)) ++failures;
    }
  }
  verdict(6, failures == 0,
          std::to_string(samples) + " samples x 3 schemes, " + std::to_string(failures) +
              " with a relative gap <= 1e-12; smallest gap " + fmt("%.2e", smallest_gap));
}

TEST(Acceptance, Criterion07_NVarAxioms) {
  bool pass = true;
  std::string summary;
  for (const auto& mean : {TwoVarMean::arithmetic(), TwoVarMean::geometric(), TwoVarMean::harmonic(),
                           TwoVarMean::logarithmic()}) {
    for (std::size_t n : {3, 4}) {
      const NVarEvaluator eval = [&](std::span<const double> xs) {
        return extend_mean(kScalars, mean, {xs.begin(), xs.end()}, VariationScheme{}, {}).value;
      };
      const auto report = check_n_var_axioms(eval, n, 200, {}, 1e-9, 1007);
      pass = pass && report.all_passed() && report.verdicts.size() == 6;
      for (const auto& v : report.verdicts) {
        if (!v.passed) summary += " " + mean.name() + "/n=" + std::to_string(n) + ":" + v.axiom;
      }
    }
  }
  verdict(7, pass, "A, G, H, L at n=3,4 with 200 samples;" + (summary.empty() ? " all six axioms pass" : " failing:" + summary));
}

TEST(Acceptance, Criterion08_DiagonalReduction) {
  std::mt19937_64 rng(1008);
  std::size_t runs = 0, failures = 0;
  double worst = 0.0;
  const std::pair<OperatorMean, TwoVarMean> means[] = {
      {{OperatorMeanKind::arithmetic}, TwoVarMean::arithmetic()},
      {{OperatorMeanKind::geometric}, TwoVarMean::geometric()},
      {{OperatorMeanKind::harmonic}, TwoVarMean::harmonic()}};
  for (std::size_t d : {1, 2, 3, 5, 8}) {
    for (std::size_t n = 2; n <= 5; ++n) {
      std::vector<std::vector<double>> diag(n);
      std::vector<SpdMatrix> ms;
      for (auto& v : diag) {
        v = log_uniform(rng, d, 1e-2, 1e2);
        ms.push_back(SpdMatrix::diagonal(v));
      }
      std::vector<std::pair<Scheme, Scheme>> schemes{{VariationScheme{}, VariationScheme{}}};
      if (n >= 3) {
        // The scalar neighbor scheme sorts its input; its unsorted positional
        // rule is the neighbor cycle, which is what the matrix run applies.
        schemes.push_back({NeighborScheme{}, CycleScheme{neighbor_as_cycle(n)}});
        const auto mapping = CycleMapping::random(n, rng);
        schemes.push_back({CycleScheme{mapping}, CycleScheme{mapping}});
      } else {
        schemes.push_back({NeighborScheme{}, NeighborScheme{}});
      }
      for (const auto& [op, scalar] : means) {
        for (const auto& [matrix_scheme, scalar_scheme] : schemes) {
          const auto m = extend_mean(spd_domain(), op, ms, matrix_scheme, {kDefaultMatrixTolerance});
          double err = m.converged ? 0.0 : INFINITY;
          for (std::size_t j = 0; j < d; ++j) {
            std::vector<double> entry;
            for (const auto& v : diag) entry.push_back(v[j]);
            const double s = extend_mean(kScalars, scalar, entry, scalar_scheme, {}).value;
            err = std::max(err, rel(m.value(j, j), s));
            for (std::size_t c = 0; c < d; ++c) {
              if (c != j) err = std::max(err, std::abs(m.value(j, c)) / s);
            }
          }
          ++runs;
          if (err > 1e-8) ++failures;
          worst = std::max(worst, err);
        }
      }
    }
  }
  verdict(8, failures == 0,
          std::to_string(runs) + " matrix runs (d<=8, n<=5, 3 means x 3 schemes), " + std::to_string(failures) +
              " outside 1e-8; worst " + fmt("%.2e", worst));
}

TEST(Acceptance, Criterion09_SandwichVerification) {
  std::mt19937_64 rng(1009);
  std::size_t instances = 0, reports = 0, failures = 0;
  double worst_gap = 0.0;
  std::string first;
  for (std::size_t d : {2, 4}) {
    for (std::size_t n : {3, 4}) {
      for (int s = 0; s < 5; ++s) {
        const auto inputs = equal_norm_instance(rng, n, d);
        ++instances;
        for (const auto kind : {OperatorMeanKind::arithmetic, OperatorMeanKind::geometric,
                                OperatorMeanKind::harmonic}) {
          const OperatorMean mean{kind};
          const auto report = sandwich_verify(mean, inputs, SandwichConfig{});
          ++reports;
          const double gap = report.final_relative_gap();
          worst_gap = std::max(worst_gap, gap);
          const bool ok = report.converged && report.all_converged() && report.all_sandwiched() &&
                          report.steps.size() == 31 && gap <= 1e-6;
          if (!ok) {
            ++failures;
            if (first.empty()) {
              first = mean.name() + " d=" + std::to_string(d) + " n=" + std::to_string(n) + " seed-index " +
                      std::to_string(s);
            }
          }
        }
      }
    }
  }
  verdict(9, failures == 0 && instances == 20,
          std::to_string(instances) + " equal-norm instances x 3 operator means, t<=30; " +
              std::to_string(failures) + " failing reports; worst final gap " + fmt("%.2e", worst_gap) +
              (first.empty() ? "" : " (first failure: " + first + ")"));
}

TEST(Acceptance, Criterion10_InvarianceProperties) {
  std::mt19937_64 rng(1010);
  double worst_perm = 0.0, worst_sum = 0.0, worst_prod = 0.0;
  for (int s = 0; s < 40; ++s) {
    const std::size_t n = 3 + static_cast<std::size_t>(s) % 4;
    auto xs = log_uniform(rng, n);
    for (const auto& mean : rate_means()) {
      const double ref = extend_mean(kScalars, mean, xs, VariationScheme{}, {}).value;
      auto perm = xs;
      auto check = [&] {
        const double v = extend_mean(kScalars, mean, perm, VariationScheme{}, {}).value;
        worst_perm = std::max(worst_perm, rel(v, ref));
      };
      if (n <= 5) {  // every ordering
        std::sort(perm.begin(), perm.end());
        do check();
        while (std::next_permutation(perm.begin(), perm.end()));
      } else {
        for (int p = 0; p < 24; ++p) {
          std::shuffle(perm.begin(), perm.end(), rng);
          check();
        }
      }
    }

    const ConvergenceConfig sub = inner_config({});
    IterationState<double> a{xs, 0}, g{xs, 0};
    for (int k = 0; k < 30; ++k) {
      const auto a2 = step_variation(kScalars, TwoVarMean::arithmetic(), a, sub);
      const auto g2 = step_variation(kScalars, TwoVarMean::geometric(), g, sub);
      long double s0 = 0, s1 = 0, l0 = 0, l1 = 0;
      for (std::size_t i = 0; i < n; ++i) {
        s0 += a.elements[i];
        s1 += a2.elements[i];
        l0 += std::log(static_cast<long double>(g.elements[i]));
        l1 += std::log(static_cast<long double>(g2.elements[i]));
      }
      worst_sum = std::max(worst_sum, static_cast<double>(std::abs(s1 - s0) / s0));
      // relative change of the product is expm1 of the change of its log
      worst_prod = std::max(worst_prod, static_cast<double>(std::abs(std::expm1(l1 - l0))));
      a = a2;
      g = g2;
    }
  }
  verdict(10, worst_perm <= 1e-9 && worst_sum <= 1e-12 && worst_prod <= 1e-12,
          "permutation " + fmt("%.2e", worst_perm) + " (<=1e-9), sum per step " + fmt("%.2e", worst_sum) +
              ", product per step " + fmt("%.2e", worst_prod) + " (<=1e-12)");
}
