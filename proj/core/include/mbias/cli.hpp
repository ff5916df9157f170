#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace mbias {

/// Everything one CLI invocation needs. Unset optionals take the defaults
/// documented in the tool's --help.
struct RunConfig {
  std::string subcommand;
  std::string in;
  std::string error;
  std::string out;
  /// Sample CSV written by the simulate-* subcommands.
  std::string samples;
  std::uint64_t seed = 1;
  std::size_t n = 1000;
  double level = 0.05;
  std::size_t strata = 20;
  double smooth = 0.0;
  bool clip = false;
  /// effect-linear: "one" | "two"; test-dsep: "theorem1" | "tetrad" | "two-stage".
  std::string method;
  /// c3^2 var(Z) (alpha for the two-stage test).
  std::optional<double> lambda;
  /// var(e_W); lambda = var(W) - var_ew when lambda is not given.
  std::optional<double> var_ew;
  std::size_t bootstrap = 1000;
  double tol_incompat = 1e-6;
  double condition_cap = 1e8;
  double tol_sing = 1e-6;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitIncompatible = 2;

const std::vector<std::string>& cli_subcommands();

/// Dispatches one subcommand, writes its outputs, and returns the exit
/// status: 0 on success, 2 when the data and error model are incompatible
/// (singular mechanism, negative restored mass, degenerate estimand),
/// 1 on usage or IO errors. Diagnostics go to `log`; a machine-readable
/// {"error": code} report is written to `out` on failure when possible.
int run_cli(const RunConfig& config, std::ostream& log);

}  // namespace mbias
