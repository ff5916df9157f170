#include "mbias/cli.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <ostream>

#include "mbias/binary_restore.hpp"
#include "mbias/dsep_test.hpp"
#include "mbias/errors.hpp"
#include "mbias/io.hpp"
#include "mbias/linear_sem.hpp"
#include "mbias/matrix_restore.hpp"
#include "mbias/rng.hpp"
#include "mbias/simulate.hpp"

namespace mbias {
namespace {

using io::json;

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         std::equal(suffix.rbegin(), suffix.rend(), s.rbegin());
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw InvalidArgument(std::string("missing required option ") + flag);
}

json echo_config(const RunConfig& c) {
  json j{{"subcommand", c.subcommand}, {"in", c.in}};
  if (!c.error.empty()) j["error"] = c.error;
  if (!c.out.empty()) j["out"] = c.out;
  if (!c.samples.empty()) j["samples"] = c.samples;
  j["seed"] = c.seed;
  j["n"] = c.n;
  j["level"] = c.level;
  j["strata"] = c.strata;
  j["smooth"] = c.smooth;
  j["clip"] = c.clip;
  if (!c.method.empty()) j["method"] = c.method;
  if (c.lambda) j["lambda"] = *c.lambda;
  if (c.var_ew) j["var_ew"] = *c.var_ew;
  j["bootstrap"] = c.bootstrap;
  j["tol_incompat"] = c.tol_incompat;
  j["condition_cap"] = c.condition_cap;
  j["tol_sing"] = c.tol_sing;
  j["rng"] = Rng::kName;
  return j;
}

json result_header(const RunConfig& c, const std::string& method) {
  return json{{"method", method}, {"config", echo_config(c)}};
}

void emit(const RunConfig& c, const json& j, std::ostream& log) {
  if (c.out.empty()) {
    log << j.dump(2) << '\n';
  } else {
    io::write_json_file(c.out, j);
  }
}

ErrorMatrix load_error_matrix(const std::string& path) {
  const json j = io::read_json_file(path);
  if (j.is_array() || (j.is_object() && j.contains("eps"))) {
    auto errs = io::error_list_from_json(j);
    std::vector<ErrorMatrix> factors;
    for (const auto& e : errs) factors.push_back(ErrorMatrix::from_binary(e));
    if (factors.size() == 1) return factors.front();
    return ErrorMatrix::factored(std::move(factors));
  }
  return io::error_matrix_from_json(j);
}

// Observed P(x, y, w) from a sample CSV or a JointTable JSON.
JointTable load_observed(const RunConfig& c, std::size_t card_w) {
  if (ends_with(c.in, ".json")) {
    JointTable t = io::joint_table_from_json(io::read_json_file(c.in));
    const auto report = validate_joint(t);
    if (!report.valid) {
      throw InvalidArgument("input table is not a probability distribution");
    }
    return t.relabeled(VKind::W);
  }
  const auto samples = io::discrete_samples_from_csv(io::read_csv_file(c.in));
  std::size_t cx = 2;
  std::size_t cy = 2;
  for (const auto& s : samples) {
    cx = std::max(cx, s.x + 1);
    cy = std::max(cy, s.y + 1);
  }
  return tabulate(samples, cx, cy, card_w, c.smooth);
}

RestoreOptions restore_options(const RunConfig& c) {
  return RestoreOptions{c.condition_cap, c.tol_incompat, c.clip};
}

json effects_json(const std::function<std::vector<double>(std::size_t)>& f,
                  std::size_t card_x) {
  json out = json::array();
  for (std::size_t x = 0; x < card_x; ++x) out.push_back(f(x));
  return out;
}

int cmd_restore_discrete(const RunConfig& c, std::ostream& log) {
  require(c.in, "--in");
  require(c.error, "--error");
  const ErrorMatrix m = load_error_matrix(c.error);
  const JointTable observed = load_observed(c, m.n_w());
  const auto options = restore_options(c);
  const auto result = restore_joint(observed, m, options);

  json j = result_header(c, "restore-discrete");
  j["restoration"] = io::to_json(result);
  j["effect_restored"] = effects_json(
      [&](std::size_t x) { return adjust_for_confounder(result.restored, x); },
      observed.card_x());
  try {
    j["effect_naive"] = effects_json(
        [&](std::size_t x) {
          return adjust_for_confounder(observed.relabeled(VKind::Z), x);
        },
        observed.card_x());
  } catch (const PositivityError& e) {
    j["effect_naive"] = nullptr;
    log << "note: naive W-adjustment undefined: " << e.what() << '\n';
  }
  if (observed.card_x() == 2) {
    const auto profile = make_propensity_profile(result.restored, c.strata);
    json scores = json::array();
    for (double s : profile.score) {
      scores.push_back(std::isnan(s) ? json(nullptr) : json(s));
    }
    j["propensity"] = {
        {"score", scores},
        {"strata", profile.strata},
        {"strata_weight", profile.strata_weight},
        {"effect_stratified",
         effects_json([&](std::size_t x) { return stratified_effect(result.restored, profile, x); },
                      2)}};
  }
  if (result.clipped) log << "note: clipped negative restored mass " << result.negative_mass << '\n';
  emit(c, j, log);
  return kExitOk;
}

BinaryErrorParams load_single_binary(const std::string& path) {
  const auto errs = io::error_list_from_json(io::read_json_file(path));
  if (errs.size() != 1) {
    throw InvalidArgument("binary restoration takes exactly one {eps, delta} pair");
  }
  return errs.front();
}

BinaryJoint load_binary_observed(const RunConfig& c) {
  if (ends_with(c.in, ".json")) {
    return BinaryJoint::from_table(io::joint_table_from_json(io::read_json_file(c.in)));
  }
  const auto samples = io::binary_samples_from_csv(io::read_csv_file(c.in));
  if (!samples.empty() && samples.front().v.size() != 1) {
    throw InvalidArgument("binary restoration takes a single proxy column");
  }
  return BinaryJoint::from_table(tabulate(samples, 1, VKind::W, c.smooth));
}

int cmd_restore_binary(const RunConfig& c, std::ostream& log) {
  require(c.in, "--in");
  require(c.error, "--error");
  const auto err = load_single_binary(c.error);
  const BinaryJoint observed = load_binary_observed(c);
  const BinaryJoint restored =
      restore_binary(observed, err, {c.tol_sing, c.tol_incompat, c.clip});

  json j = result_header(c, "restore-binary");
  j["observed"] = io::to_json(observed.to_table(VKind::W));
  j["restored"] = io::to_json(restored.to_table(VKind::Z));
  json splits = json::array();
  for (std::size_t x = 0; x < 2; ++x)
    for (std::size_t y = 0; y < 2; ++y) {
      const double mass = observed(x, y, 0) + observed(x, y, 1);
      json s{{"x", x}, {"y", y}};
      if (mass > 0.0) {
        const double p = observed(x, y, 1) / mass;
        s["p_w1_given_xy"] = p;
        try {
          const double r = weight_split(p, err, c.tol_sing);
          s["ratio_z1_z0"] = std::isinf(r) ? json("inf") : json(r);
        } catch (const IncompatibleModelError&) {
          s["ratio_z1_z0"] = nullptr;
        }
      }
      splits.push_back(std::move(s));
    }
  j["weight_split"] = std::move(splits);
  emit(c, j, log);
  return kExitOk;
}

int cmd_effect_binary(const RunConfig& c, std::ostream& log) {
  require(c.in, "--in");
  require(c.error, "--error");
  const auto err = load_single_binary(c.error);
  const BinaryJoint observed = load_binary_observed(c);
  // Fails early, with the footnote-3 diagnosis, when restoration is incompatible.
  const BinaryJoint restored =
      restore_binary(observed, err, {c.tol_sing, c.tol_incompat, c.clip});

  json effects = json::array();
  for (std::size_t x = 0; x < 2; ++x) {
    const auto composed = adjust_for_confounder(restored.to_table(VKind::Z), x);
    for (std::size_t y = 0; y < 2; ++y) {
      json e{{"x", x}, {"y", y}, {"restored_adjustment", composed[y]}};
      try {
        e["modified_ipw"] = causal_effect_binary(observed, err, x, y, c.tol_sing);
        e["infinitesimal"] = causal_effect_binary_infinitesimal(observed, err, x, y, c.tol_sing);
        e["naive_ipw"] = causal_effect_binary(observed, {0.0, 0.0}, x, y, c.tol_sing);
      } catch (const DegenerateDenominatorError& ex) {
        e["modified_ipw"] = nullptr;
        e["note"] = ex.what();
      }
      effects.push_back(std::move(e));
    }
  }
  json j = result_header(c, "effect-binary");
  j["effects"] = std::move(effects);
  emit(c, j, log);
  return kExitOk;
}

int cmd_synthesize(const RunConfig& c, std::ostream& log) {
  require(c.in, "--in");
  require(c.error, "--error");
  require(c.out, "--out");
  const auto errs = io::error_list_from_json(io::read_json_file(c.error));
  const auto samples = io::binary_samples_from_csv(io::read_csv_file(c.in));
  const auto result = synthesize_samples(samples, errs, c.seed, c.tol_sing);
  for (const auto& w : result.warnings) log << "warning: " << w << '\n';
  io::write_csv_file(c.out, io::binary_samples_to_csv(result.samples, "z"));
  return kExitOk;
}

struct LinearInput {
  CovStats stats;
  std::optional<LinearData> rows;
};

LinearInput load_linear(const RunConfig& c) {
  require(c.in, "--in");
  if (ends_with(c.in, ".json")) return {io::cov_stats_from_json(io::read_json_file(c.in)), {}};
  LinearData rows = io::linear_data_from_csv(io::read_csv_file(c.in));
  CovStats s = cov_from_samples(rows);
  return {s, std::move(rows)};
}

std::optional<double> external_lambda(const RunConfig& c, const CovStats& s) {
  if (c.lambda) return *c.lambda;
  if (c.var_ew) return lambda_from_error_variance(s.var_w, *c.var_ew);
  return std::nullopt;
}

int cmd_effect_linear(const RunConfig& c, std::ostream& log) {
  const LinearInput input = load_linear(c);
  const CovStats& s = input.stats;
  std::string method = c.method;
  if (method.empty()) method = (s.has_v() && !c.lambda && !c.var_ew) ? "two" : "one";

  std::function<double(const CovStats&)> estimator;
  json j = result_header(c, "effect-linear");
  j["indicators"] = method;
  if (method == "two") {
    estimator = [](const CovStats& t) { return c0_two_indicator(t); };
    const double lambda = lambda_from_two_indicators(s);
    j["lambda"] = lambda;
    j["reliability"] = surrogate_slope(s, lambda);
  } else if (method == "one") {
    const auto lambda = external_lambda(c, s);
    if (!lambda) throw InvalidArgument("one-indicator estimation needs --lambda or --var-ew");
    const double l = *lambda;
    // With --var-ew the bootstrap re-derives lambda from each resample's var(W).
    if (c.var_ew && !c.lambda) {
      const double ve = *c.var_ew;
      estimator = [ve](const CovStats& t) {
        return c0_from_lambda(t, lambda_from_error_variance(t.var_w, ve));
      };
    } else {
      estimator = [l](const CovStats& t) { return c0_from_lambda(t, l); };
    }
    j["lambda"] = l;
    j["reliability"] = surrogate_slope(s, l);
  } else {
    throw InvalidArgument("--method must be 'one' or 'two' for effect-linear");
  }
  j["c0"] = estimator(s);
  try {
    j["c0_naive_adjustment"] = c0_noiseless(s);
  } catch (const UnidentifiableError&) {
    j["c0_naive_adjustment"] = nullptr;
  }
  j["n"] = s.n;
  j["stats"] = io::to_json(s);
  if (input.rows) {
    j["stderr"] = bootstrap_se(*input.rows, estimator, c.bootstrap, c.seed);
  } else {
    j["stderr"] = nullptr;
  }
  emit(c, j, log);
  return kExitOk;
}

int cmd_test_dsep(const RunConfig& c, std::ostream& log) {
  require(c.in, "--in");
  const TestMethod method =
      test_method_from_string(c.method.empty() ? std::string("two-stage") : c.method);
  if (ends_with(c.in, ".json")) {
    throw InvalidArgument("test-dsep needs row-level CSV data to compute a standard error");
  }
  const LinearData rows = io::linear_data_from_csv(io::read_csv_file(c.in));
  const CovStats s = cov_from_samples(rows);
  double lambda = 0.0;
  if (method != TestMethod::Tetrad) {
    const auto l = external_lambda(c, s);
    if (!l) throw InvalidArgument("this test needs --lambda (alpha) or --var-ew");
    lambda = *l;
  }
  const TestResult r = residual_test(rows, method, lambda, c.level, c.bootstrap, c.seed);
  json j = io::to_json(r);
  j["config"] = echo_config(c);
  emit(c, j, log);
  return kExitOk;
}

int cmd_simulate_discrete(const RunConfig& c, std::ostream& log) {
  require(c.in, "--in");
  const DiscreteModelSpec spec = io::discrete_spec_from_json(io::read_json_file(c.in));
  const auto sim = simulate_discrete(spec, c.n, c.seed);
  if (!c.samples.empty()) {
    io::CsvTable csv;
    if (const auto* list = std::get_if<ComponentErrorList>(&spec.error); list && list->size() > 1) {
      // One 0/1 column per proxy component.
      const std::size_t k = list->size();
      csv.header = {"x", "y"};
      for (std::size_t i = 1; i <= k; ++i) csv.header.push_back("w" + std::to_string(i));
      for (const auto& s : sim.samples) {
        std::vector<double> row{static_cast<double>(s.x), static_cast<double>(s.y)};
        for (std::size_t i = 0; i < k; ++i) row.push_back(static_cast<double>((s.w >> (k - 1 - i)) & 1u));
        csv.rows.push_back(std::move(row));
      }
    } else {
      csv = io::discrete_samples_to_csv(sim.samples);
    }
    io::write_csv_file(c.samples, csv);
  }
  json j = result_header(c, "simulate-discrete");
  j["ground_truth"] = sim.ground_truth;
  j["latent_joint"] = io::to_json(spec.latent_joint());
  j["observed_joint"] = io::to_json(spec.observed_joint());
  j["n"] = sim.samples.size();
  emit(c, j, log);
  return kExitOk;
}

int cmd_simulate_linear(const RunConfig& c, std::ostream& log) {
  require(c.in, "--in");
  const LinearSemSpec spec = io::linear_spec_from_json(io::read_json_file(c.in));
  const auto sim = simulate_linear(spec, c.n, c.seed);
  if (!c.samples.empty()) io::write_csv_file(c.samples, io::linear_data_to_csv(sim.rows));
  json j = result_header(c, "simulate-linear");
  j["spec"] = io::to_json(spec);
  j["population"] = io::to_json(sim.population);
  j["n"] = sim.rows.size();
  emit(c, j, log);
  return kExitOk;
}

using Handler = int (*)(const RunConfig&, std::ostream&);

const std::map<std::string, Handler>& handlers() {
  static const std::map<std::string, Handler> table{
      {"restore-discrete", cmd_restore_discrete},
      {"restore-binary", cmd_restore_binary},
      {"effect-binary", cmd_effect_binary},
      {"synthesize", cmd_synthesize},
      {"effect-linear", cmd_effect_linear},
      {"test-dsep", cmd_test_dsep},
      {"simulate-discrete", cmd_simulate_discrete},
      {"simulate-linear", cmd_simulate_linear},
  };
  return table;
}

void write_error_report(const RunConfig& c, const std::string& code,
                        const std::string& message) {
  if (c.out.empty() || ends_with(c.out, ".csv")) return;
  try {
    io::write_json_file(c.out, json{{"method", c.subcommand},
                                    {"error", code},
                                    {"message", message},
                                    {"config", echo_config(c)}});
  } catch (const std::exception&) {
    // nothing more to report
  }
}

}  // namespace

const std::vector<std::string>& cli_subcommands() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& [name, _] : handlers()) v.push_back(name);
    return v;
  }();
  return names;
}

int run_cli(const RunConfig& config, std::ostream& log) {
  const auto it = handlers().find(config.subcommand);
  if (it == handlers().end()) {
    log << "error: unknown subcommand '" << config.subcommand << "'\n";
    return kExitUsage;
  }
  try {
    return it->second(config, log);
  } catch (const InvalidArgument& e) {
    log << "error: " << e.what() << '\n';
    write_error_report(config, e.code(), e.what());
    return kExitUsage;
  } catch (const Error& e) {
    log << "error (" << e.code() << "): " << e.what() << '\n';
    write_error_report(config, e.code(), e.what());
    return kExitIncompatible;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    write_error_report(config, "io", e.what());
    return kExitUsage;
  }
}

}  // namespace mbias
