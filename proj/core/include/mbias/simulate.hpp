#pragma once

// Ground-truth simulators for the discrete and linear measurement-error
// models. Everything here is deterministic given the seed.

#include <cstddef>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "mbias/binary_restore.hpp"
#include "mbias/dist_core.hpp"
#include "mbias/linear_sem.hpp"

namespace mbias {

/// Generating model X <- Z -> Y, X -> Y, Z -> W.
struct DiscreteModelSpec {
  std::vector<double> p_z;
  /// p_x_given_z[z][x]
  std::vector<std::vector<double>> p_x_given_z;
  /// p_y_given_xz[x][z][y]
  std::vector<std::vector<std::vector<double>>> p_y_given_xz;
  /// Dense/factored matrix, or one binary mechanism per component of Z
  /// (then |Z| = 2^K, first component most significant).
  std::variant<ErrorMatrix, ComponentErrorList> error;

  std::size_t card_x() const;
  std::size_t card_y() const;
  std::size_t card_z() const noexcept { return p_z.size(); }

  /// Throws InvalidArgument on inconsistent shapes or any conditional that
  /// is not a distribution within 1e-12.
  void validate() const;

  ErrorMatrix error_matrix() const;
  /// Exact P(x, y, z).
  JointTable latent_joint() const;
  /// Exact P(x, y, w).
  JointTable observed_joint() const;
  /// Exact P(y | do(x)) = sum_z P(y|x,z) P(z), indexed [x][y].
  std::vector<std::vector<double>> true_effect() const;
};

/// One discrete record; w is the flat proxy index.
struct DiscreteSample {
  std::size_t x = 0;
  std::size_t y = 0;
  std::size_t w = 0;

  friend bool operator==(const DiscreteSample&, const DiscreteSample&) = default;
};

struct DiscreteSimulation {
  std::vector<DiscreteSample> samples;
  std::vector<std::vector<double>> ground_truth;  // [x][y]
};

/// n i.i.d. draws from P(z) P(x|z) P(y|x,z) P(w|z), using Rng(seed).
DiscreteSimulation simulate_discrete(const DiscreteModelSpec& spec, std::size_t n,
                                     std::uint64_t seed);

/// Empirical P(x, y, w) from records, with optional add-`smoothing` cells.
JointTable tabulate(std::span<const DiscreteSample> samples, std::size_t card_x,
                    std::size_t card_y, std::size_t card_w, double smoothing = 0.0);

/// Population moments by path tracing, e.g. cov(XW) = c1 c3 var(Z) and
/// cov(XY) = c0 var(X) + c1 c2 var(Z).
CovStats population_cov(const LinearSemSpec& spec);

struct LinearSimulation {
  LinearData rows;
  CovStats population;
};

/// Gaussian exogenous draws pushed through the structural equations.
LinearSimulation simulate_linear(const LinearSemSpec& spec, std::size_t n,
                                 std::uint64_t seed);

}  // namespace mbias
