#pragma once

// Command-line driver. `run` is the whole program minus process plumbing so
// the test suite can drive it in-process.
//
// Exit codes: 0 success, 1 input/validation error, 2 non-convergence (result
// still printed), 3 a check ran to completion and reported a failure.

#include <CLI11.hpp>

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "itermean/io.hpp"
#include "itermean/itermean.hpp"

namespace itermean::cli {

using json = nlohmann::json;

inline constexpr const char* kToleranceEnv = "ITERMEAN_TOLERANCE";

enum ExitCode : int { kOk = 0, kInputError = 1, kNotConverged = 2, kCheckFailed = 3 };

/// Validation failure attributed to one flag or input.
struct FieldError : Error {
  FieldError(const std::string& field, const std::string& msg) : Error(field + ": " + msg) {}
};

struct Options {
  std::string mean;
  std::string scheme = "neighbor";
  std::string axiom_scheme = "variation";
  std::string values;
  std::string input;
  std::string format = "json";
  std::optional<double> tolerance;
  std::size_t max_iterations = 10000;
  std::uint64_t seed = 0;
  std::size_t n = 2;
  std::size_t samples = 1000;
  std::size_t mappings = 10;
  double low = 1e-3;
  double high = 1e3;
  double axiom_tolerance = 1e-9;
  int t_max = 30;
};

struct SchemeSpec {
  enum Kind { variation, neighbor, cycle } kind = neighbor;
  std::uint64_t cycle_seed = 0;
};

inline SchemeSpec parse_scheme(const std::string& s) {
  if (s == "variation") return {SchemeSpec::variation};
  if (s == "neighbor") return {SchemeSpec::neighbor};
  if (s.rfind("cycle:", 0) == 0) {
    const std::string seed = s.substr(6);
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(seed.data(), seed.data() + seed.size(), v);
    if (seed.empty() || ec != std::errc{} || ptr != seed.data() + seed.size()) {
      throw FieldError("--scheme", "cycle seed must be a non-negative integer, got '" + seed + "'");
    }
    return {SchemeSpec::cycle, v};
  }
  throw FieldError("--scheme", "expected variation|neighbor|cycle:<seed>, got '" + s + "'");
}

inline Scheme make_scheme(const SchemeSpec& spec, std::size_t n) {
  switch (spec.kind) {
    case SchemeSpec::variation: return VariationScheme{};
    case SchemeSpec::neighbor: return NeighborScheme{};
    case SchemeSpec::cycle:
      if (n < 3) throw FieldError("--scheme", "cycle schemes need at least three inputs");
      return CycleScheme{CycleMapping::random(n, spec.cycle_seed)};
  }
  return NeighborScheme{};
}

struct Inputs {
  std::vector<double> scalars;
  std::vector<SpdMatrix> matrices;
  bool is_matrix = false;

  std::size_t size() const { return is_matrix ? matrices.size() : scalars.size(); }
};

inline std::vector<double> parse_values(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw FieldError("--values", "'" + item + "' is not a number");
    if (!(v > 0.0) || !std::isfinite(v)) throw FieldError("--values", "values must be positive and finite");
    out.push_back(v);
  }
  if (out.empty()) throw FieldError("--values", "no values given");
  return out;
}

inline Inputs load_inputs(const Options& o) {
  if (!o.values.empty() && !o.input.empty()) throw FieldError("--values", "give either --values or --input");
  Inputs in;
  if (!o.values.empty()) {
    in.scalars = parse_values(o.values);
    return in;
  }
  if (o.input.empty()) throw FieldError("--values", "no input: give --values or --input");
  std::ifstream file(o.input);
  if (!file) throw FieldError("--input", "cannot open '" + o.input + "'");
  char first = 0;
  file >> std::ws;
  first = static_cast<char>(file.peek());
  try {
    if (first == '{') {
      in.is_matrix = true;
      in.matrices = io::read_matrix_file(o.input);
      if (in.matrices.empty()) throw ConfigError("matrix file lists no matrices");
    } else {
      in.scalars = io::read_scalar_csv(file);
      if (in.scalars.empty()) throw ConfigError("no values in file");
    }
  } catch (const FieldError&) {
    throw;
  } catch (const Error& e) {
    throw FieldError("--input", e.what());
  }
  return in;
}

inline double resolve_tolerance(const Options& o, double fallback) {
  double tol = fallback;
  if (o.tolerance) {
    tol = *o.tolerance;
    if (!(tol > 0.0)) throw FieldError("--tolerance", "must be positive");
  } else if (const char* env = std::getenv(kToleranceEnv); env && *env) {
    char* end = nullptr;
    tol = std::strtod(env, &end);
    if (end == env || *end != '\0' || !(tol > 0.0)) {
      throw FieldError(kToleranceEnv, std::string("must be a positive number, got '") + env + "'");
    }
  }
  return tol;
}

inline TwoVarMean scalar_mean(const Options& o) {
  try {
    return parse_mean_spec(o.mean);
  } catch (const Error& e) {
    throw FieldError("--mean", e.what());
  }
}

inline OperatorMean operator_mean(const Options& o) {
  try {
    return parse_operator_mean_spec(o.mean);
  } catch (const Error& e) {
    throw FieldError("--mean", e.what());
  }
}

inline void validate_format(const Options& o) {
  if (o.format != "json" && o.format != "csv") throw FieldError("--format", "expected json or csv");
}

inline json matrix_json(const SpdMatrix& m) {
  return {{"dimension", m.dimension()}, {"entries", m.row_major()}};
}

template <class E>
json result_json(const ExtensionResult<E>& r) {
  json j;
  j["converged"] = r.converged;
  j["iterations"] = r.iterations;
  if constexpr (std::is_same_v<E, SpdMatrix>) {
    j["value"] = matrix_json(r.value);
  } else {
    j["value"] = r.value;
  }
  j["final_spread"] = r.spread_history.back();
  j["final_rel_spread"] = r.relative_spread_history.back();
  return j;
}

inline json run_header(const std::string& command, const Options& o, const std::string& mean_name,
                       const Scheme& scheme, std::size_t n, const ConvergenceConfig& cfg) {
  json h;
  h["command"] = command;
  h["mean"] = mean_name;
  h["scheme"] = o.scheme;
  if (const auto* c = std::get_if<CycleScheme>(&scheme)) h["mapping"] = io::mapping_json(c->mapping);
  h["n"] = n;
  h["tolerance"] = cfg.tolerance;
  h["max_iterations"] = cfg.max_iterations;
  return h;
}

// extend / trace share everything but the output shape.
inline int cmd_extend(const Options& o, bool trace, std::ostream& out) {
  validate_format(o);
  const SchemeSpec spec = parse_scheme(o.scheme);
  const Inputs in = load_inputs(o);
  if (in.size() < 2) throw FieldError("--values", "need at least two inputs");
  const Scheme scheme = make_scheme(spec, in.size());
  ConvergenceConfig cfg;
  cfg.tolerance = resolve_tolerance(o, in.is_matrix ? kDefaultMatrixTolerance : kDefaultScalarTolerance);
  cfg.max_iterations = o.max_iterations;
  cfg.capture_trace = trace;
  if (cfg.max_iterations < 1) throw FieldError("--max-iterations", "must be >= 1");

  auto emit = [&](const auto& result, const std::string& mean_name) {
    json header = run_header(trace ? "trace" : "extend", o, mean_name, scheme, in.size(), cfg);
    if (trace) {
      header["type"] = "header";
      header["converged"] = result.converged;
      header["iterations"] = result.iterations;
      if (o.format == "csv") {
        io::write_trace_csv(out, header, result);
      } else {
        io::write_trace_jsonl(out, header, result);
      }
    } else if (o.format == "csv") {
      out << "# " << io::dump(header) << '\n';
      using E = std::decay_t<decltype(result.value)>;
      if constexpr (std::is_same_v<E, SpdMatrix>) {
        const std::size_t d = result.value.dimension();
        for (std::size_t i = 0; i < d; ++i) {
          for (std::size_t j = 0; j < d; ++j) out << "m_" << i << '_' << j << ',';
        }
        out << "iterations,converged,rel_spread\n";
        for (double v : result.value.row_major()) out << io::format_double(v) << ',';
      } else {
        out << "value,iterations,converged,rel_spread\n" << io::format_double(result.value) << ',';
      }
      out << result.iterations << ',' << (result.converged ? "true" : "false") << ','
          << io::format_double(result.relative_spread_history.back()) << '\n';
    } else {
      json j = header;
      j.update(result_json(result));
      io::dump(out, j);
      out << '\n';
    }
    return result.converged ? kOk : kNotConverged;
  };

  if (in.is_matrix) {
    const OperatorMean mean = operator_mean(o);
    return emit(extend_mean(spd_domain(), mean, in.matrices, scheme, cfg), mean.name());
  }
  const TwoVarMean mean = scalar_mean(o);
  return emit(extend_mean(ScalarDomain{}, mean, in.scalars, scheme, cfg), mean.name());
}

inline int cmd_compare(const Options& o, std::ostream& out) {
  validate_format(o);
  const TwoVarMean mean = scalar_mean(o);
  Inputs in = load_inputs(o);
  if (in.is_matrix) throw FieldError("--input", "compare-schemes takes scalar inputs only");
  if (in.size() < 3) throw FieldError("--values", "compare-schemes needs at least three inputs");
  std::sort(in.scalars.begin(), in.scalars.end());
  ConvergenceConfig cfg;
  cfg.tolerance = resolve_tolerance(o, kDefaultScalarTolerance);
  cfg.max_iterations = o.max_iterations;
  if (cfg.max_iterations < 1) throw FieldError("--max-iterations", "must be >= 1");

  std::mt19937_64 rng(o.seed);
  std::vector<CycleMapping> mappings;
  for (std::size_t m = 0; m < o.mappings; ++m) mappings.push_back(CycleMapping::random(in.size(), rng));

  const RateReport report = compare_rates(mean, in.scalars, mappings, cfg);
  const auto variation = extend_mean(ScalarDomain{}, mean, in.scalars, VariationScheme{}, cfg);

  bool all_converged = variation.converged && report.baseline.steps_to_tolerance.has_value();
  double disagreement = std::abs(variation.value - report.baseline.value) / report.baseline.value;
  for (const auto& c : report.cycles) {
    all_converged = all_converged && c.steps_to_tolerance.has_value();
    disagreement = std::max(disagreement, std::abs(c.value - report.baseline.value) / report.baseline.value);
  }

  if (o.format == "csv") {
    out << "# " << io::dump(json{{"command", "compare-schemes"}, {"mean", mean.name()}, {"n", in.size()},
                                  {"seed", o.seed}, {"tolerance", cfg.tolerance},
                                  {"violations", report.violations.size()}})
        << '\n';
    out << "scheme,step,min,max,spread\n";
    auto rows = [&](const SchemeTable& t) {
      for (std::size_t k = 0; k < t.min.size(); ++k) {
        out << t.name << ',' << k << ',' << io::format_double(t.min[k]) << ',' << io::format_double(t.max[k])
            << ',' << io::format_double(t.spread[k]) << '\n';
      }
    };
    rows(report.baseline);
    for (const auto& c : report.cycles) rows(c);
    return all_converged ? kOk : kNotConverged;
  }

  auto table_json = [](const SchemeTable& t) {
    json j;
    j["name"] = t.name;
    if (t.mapping) j["mapping"] = io::mapping_json(*t.mapping);
    j["steps_to_tolerance"] = t.steps_to_tolerance ? json(*t.steps_to_tolerance) : json(nullptr);
    j["value"] = t.value;
    j["min"] = t.min;
    j["max"] = t.max;
    j["spread"] = t.spread;
    return j;
  };
  json j;
  j["command"] = "compare-schemes";
  j["mean"] = mean.name();
  j["n"] = in.size();
  j["inputs"] = in.scalars;
  j["seed"] = o.seed;
  j["tolerance"] = cfg.tolerance;
  j["slack"] = report.slack;
  j["steps"] = report.steps;
  j["baseline"] = table_json(report.baseline);
  j["cycles"] = json::array();
  for (const auto& c : report.cycles) j["cycles"].push_back(table_json(c));
  j["variation"] = {{"value", variation.value}, {"iterations", variation.iterations},
                    {"converged", variation.converged}};
  j["violation_count"] = report.violations.size();
  j["violations"] = json::array();
  for (const auto& v : report.violations) {
    j["violations"].push_back({{"mapping_index", v.mapping_index}, {"step", v.step},
                               {"baseline_min", v.baseline_min}, {"cycle_min", v.cycle_min},
                               {"baseline_max", v.baseline_max}, {"cycle_max", v.cycle_max}});
  }
  j["slower_than_baseline"] = report.slower_than_baseline();
  j["max_limit_disagreement"] = disagreement;
  io::dump(out, j);
  out << '\n';
  return all_converged ? kOk : kNotConverged;
}

inline json report_json(const AxiomReport& r) {
  json j;
  j["n"] = r.n;
  j["samples"] = r.samples;
  j["box"] = {r.box.low, r.box.high};
  j["all_passed"] = r.all_passed();
  j["continuity_constant"] = r.continuity_constant;
  j["verdicts"] = json::array();
  for (const auto& v : r.verdicts) {
    json e{{"axiom", v.axiom}, {"passed", v.passed}};
    if (!v.passed) {
      e["counterexample"] = {{"inputs", v.counterexample_inputs}, {"values", v.counterexample_values}};
      e["detail"] = v.detail;
    }
    j["verdicts"].push_back(std::move(e));
  }
  return j;
}

inline int cmd_axioms(const Options& o, std::ostream& out) {
  const TwoVarMean mean = scalar_mean(o);
  if (o.format != "json") throw FieldError("--format", "axioms reports are JSON only");
  if (o.samples < 1) throw FieldError("--samples", "must be >= 1");
  if (!(o.low > 0.0) || !(o.low < o.high)) throw FieldError("--low", "need 0 < low < high");
  if (o.n < 2) throw FieldError("--n", "must be >= 2");
  const DomainBox box{o.low, o.high};

  json j;
  j["command"] = "axioms";
  j["mean"] = mean.name();
  j["seed"] = o.seed;
  AxiomReport report;
  bool nonconverged = false;
  if (o.n == 2) {
    report = check_two_var_axioms(mean, o.samples, box, o.seed);
  } else {
    const SchemeSpec spec = parse_scheme(o.axiom_scheme);
    const Scheme scheme = make_scheme(spec, o.n);
    ConvergenceConfig cfg;
    cfg.tolerance = resolve_tolerance(o, kDefaultScalarTolerance);
    cfg.max_iterations = o.max_iterations;
    const NVarEvaluator evaluator = [&](std::span<const double> xs) {
      auto r = extend_mean(ScalarDomain{}, mean, std::vector<double>(xs.begin(), xs.end()), scheme, cfg);
      if (!r.converged) {
        nonconverged = true;
        throw ConvergenceError("extension did not converge", 0, format_tuple(xs));
      }
      return r.value;
    };
    try {
      report = check_n_var_axioms(evaluator, o.n, o.samples, box, o.axiom_tolerance, o.seed);
    } catch (const EvaluationError& e) {
      if (!nonconverged) throw;
      j["error"] = e.what();
      io::dump(out, j);
      out << '\n';
      return kNotConverged;
    }
    j["scheme"] = o.axiom_scheme;
    j["tolerance"] = cfg.tolerance;
    j["axiom_tolerance"] = o.axiom_tolerance;
  }
  j.update(report_json(report));
  io::dump(out, j);
  out << '\n';
  return report.all_passed() ? kOk : kCheckFailed;
}

inline int cmd_sandwich(const Options& o, std::ostream& out) {
  if (o.format != "json") throw FieldError("--format", "sandwich reports are JSON only");
  if (o.input.empty()) throw FieldError("--input", "sandwich needs a matrix file");
  const OperatorMean mean = operator_mean(o);
  const Inputs in = load_inputs(o);
  if (!in.is_matrix) throw FieldError("--input", "sandwich needs a matrix file");
  if (o.t_max < 0) throw FieldError("--t-max", "must be >= 0");
  SandwichConfig cfg;
  cfg.t_max = o.t_max;
  cfg.engine.tolerance = resolve_tolerance(o, cfg.engine.tolerance);
  cfg.engine.max_iterations = o.max_iterations;

  SandwichReport report;
  try {
    report = sandwich_verify(mean, in.matrices, cfg);
  } catch (const PreconditionError& e) {
    throw FieldError("--input", e.what());
  }

  json j;
  j["command"] = "sandwich";
  j["mean"] = mean.name();
  j["norm"] = report.norm;
  j["n"] = in.size();
  j["dimension"] = in.matrices.front().dimension();
  j["tolerance"] = cfg.engine.tolerance;
  j["loewner_tolerance"] = report.loewner_tolerance;
  j["t_max"] = cfg.t_max;
  j["converged"] = report.converged;
  j["iterations"] = report.iterations;
  j["limit"] = matrix_json(report.limit);
  j["steps"] = json::array();
  for (const auto& s : report.steps) {
    j["steps"].push_back({{"t", s.t},
                          {"a_upper", s.a_upper},
                          {"a_lower", s.a_lower},
                          {"lower_converged", s.lower_converged},
                          {"upper_converged", s.upper_converged},
                          {"lower_below", s.lower_below},
                          {"upper_above", s.upper_above},
                          {"gap", s.gap},
                          {"rel_gap", s.gap / std::max(report.limit_norm, 1e-300)}});
  }
  j["all_converged"] = report.all_converged();
  j["all_sandwiched"] = report.all_sandwiched();
  j["gaps_non_increasing"] = report.gaps_non_increasing(1e-12 * report.limit_norm);
  j["final_rel_gap"] = report.final_relative_gap();
  io::dump(out, j);
  out << '\n';
  if (!report.all_converged()) return kNotConverged;
  return report.all_sandwiched() ? kOk : kCheckFailed;
}

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Iterative n-variable extensions of two-variable means", "itermean"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--mean", o.mean, "arithmetic | geometric | harmonic | logarithmic | power:<p>")->required();
    sub->add_option("--tolerance", o.tolerance, "relative spread threshold (default: $ITERMEAN_TOLERANCE, else 1e-12 scalars / 1e-10 matrices)");
    sub->add_option("--max-iterations", o.max_iterations, "iteration budget");
    sub->add_option("--format", o.format, "json | csv");
    sub->add_option("--seed", o.seed, "random seed");
  };
  auto inputs = [&](CLI::App* sub) {
    sub->add_option("--values", o.values, "comma-separated positive reals");
    sub->add_option("--input", o.input, "CSV of scalars (one per line) or matrix JSON file");
  };

  auto* extend = app.add_subcommand("extend", "compute the n-variable extension");
  common(extend);
  inputs(extend);
  extend->add_option("--scheme", o.scheme, "variation | neighbor | cycle:<seed>");

  auto* trace = app.add_subcommand("trace", "export the per-step iteration trace");
  common(trace);
  inputs(trace);
  trace->add_option("--scheme", o.scheme, "variation | neighbor | cycle:<seed>");

  auto* compare = app.add_subcommand("compare-schemes", "neighbor baseline vs random cycle mappings");
  common(compare);
  inputs(compare);
  compare->add_option("--mappings", o.mappings, "number of random cycle mappings");

  auto* axioms = app.add_subcommand("axioms", "randomized mean-axiom check");
  common(axioms);
  axioms->add_option("--n", o.n, "2 checks the two-variable mean; n >= 3 checks its extension");
  axioms->add_option("--samples", o.samples, "random samples");
  axioms->add_option("--low", o.low, "sampling box lower bound");
  axioms->add_option("--high", o.high, "sampling box upper bound");
  axioms->add_option("--scheme", o.axiom_scheme, "extension scheme for n >= 3");
  axioms->add_option("--axiom-tolerance", o.axiom_tolerance, "relative tolerance of the n-variable checks");

  auto* sandwich = app.add_subcommand("sandwich", "equal-norm sandwich verification on SPD matrices");
  common(sandwich);
  sandwich->add_option("--input", o.input, "matrix JSON file")->required();
  sandwich->add_option("--t-max", o.t_max, "largest perturbation index");

  std::vector<std::string> argv_store{"itermean"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kInputError;
  }

  try {
    if (*extend) return cmd_extend(o, false, out);
    if (*trace) return cmd_extend(o, true, out);
    if (*compare) return cmd_compare(o, out);
    if (*axioms) return cmd_axioms(o, out);
    if (*sandwich) return cmd_sandwich(o, out);
  } catch (const ConvergenceError& e) {
    err << "error: " << e.what() << '\n';
    return kNotConverged;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }
  return kInputError;
}

}  // namespace itermean::cli
