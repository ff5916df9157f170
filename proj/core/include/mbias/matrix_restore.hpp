#pragma once

// Effect restoration for categorical proxies by inverting the error matrix.

#include <cstddef>
#include <span>
#include <vector>

#include "mbias/dist_core.hpp"

namespace mbias {

struct RestoreOptions {
  /// Largest acceptable 1-norm condition estimate of M.
  double condition_cap = 1e8;
  /// Total absolute negative mass above which the model is declared
  /// incompatible with the data (unless `clip` is set).
  double tol_incompat = 1e-6;
  /// Clip negative cells even above `tol_incompat` instead of failing.
  bool clip = false;
};

struct RestorationResult {
  JointTable restored;  // axis Z
  double condition_estimate = 1.0;
  /// Total absolute mass of negative cells before clipping.
  double negative_mass = 0.0;
  bool clipped = false;
};

/// P(x, y, z) = sum_w I(z, w) P(x, y, w) with I = M^{-1}.
///
/// Factored matrices are inverted factor by factor and applied along each
/// component axis, never densely. Throws SingularError when M is not square,
/// singular, or its condition estimate exceeds the cap; throws
/// IncompatibleModelError when the restored table carries more than
/// `tol_incompat` negative mass and clipping is off. Negative noise below the
/// tolerance is clipped and each (x, y) row is rescaled to its observed mass.
RestorationResult restore_joint(const JointTable& observed, const ErrorMatrix& m,
                                const RestoreOptions& options = {});

/// Differential error: one matrix per (x, y) cell, indexed x * card_y + y.
RestorationResult restore_joint_differential(
    const JointTable& observed, std::span<const ErrorMatrix> m_family,
    const RestoreOptions& options = {});

/// P(y | do(x)) from proxy data: adjustment applied to the restored table.
std::vector<double> causal_effect_restored(const JointTable& observed,
                                           const ErrorMatrix& m, std::size_t x,
                                           const RestoreOptions& options = {});

inline constexpr std::size_t kDefaultDenseCap = 4096;

/// Dense Kronecker expansion of a factored matrix (a dense matrix is returned
/// unchanged). Throws DimensionCapError above `dense_cap` rows or columns.
ErrorMatrix expand_factored(std::span<const ErrorMatrix> factors,
                            std::size_t dense_cap = kDefaultDenseCap);

/// Explicit inverse I(z, w); for factored input, the Kronecker product of
/// the factor inverses. Throws SingularError as restore_joint does.
Matrix invert(const ErrorMatrix& m, double condition_cap = 1e8);

/// 1-norm condition number estimate of M (product over factors).
double condition_estimate(const ErrorMatrix& m);

/// Restored propensity L(z) = sum_w I(z,w) L(w) P(w) / sum_w I(z,w) P(w).
///
/// Throws DegenerateStratumError when a denominator is below 1e-9.
std::vector<double> restored_propensity(std::span<const double> score_w,
                                        std::span<const double> p_w,
                                        const ErrorMatrix& m,
                                        double condition_cap = 1e8);

/// Propensity scores L(z) = P(X=1 | z) and their stratification.
struct PropensityProfile {
  /// L(z) per z; NaN for z with no mass.
  std::vector<double> score;
  /// Partition of the z indices with positive mass.
  std::vector<std::vector<std::size_t>> strata;
  /// P(l) per stratum.
  std::vector<double> strata_weight;
};

inline constexpr std::size_t kDefaultStrata = 20;

/// Scores from a restored table (binary X) and strata built from them.
///
/// When L takes at most `strata_count` distinct values (within 1e-12) the
/// strata group z by exact score; otherwise scores are binned into
/// `strata_count` equal-width bins over [0, 1].
PropensityProfile make_propensity_profile(const JointTable& restored,
                                          std::size_t strata_count = kDefaultStrata);

/// Profile with a caller-chosen partition of z.
PropensityProfile profile_from_partition(
    const JointTable& restored, std::vector<std::vector<std::size_t>> strata);

/// P(y | do(x)) = sum_l P(y | x, l) P(l).
std::vector<double> stratified_effect(const JointTable& restored,
                                      const PropensityProfile& profile,
                                      std::size_t x);

}  // namespace mbias
