#pragma once

// Closed-form restoration when X, Y, Z and W are all binary.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mbias/dist_core.hpp"

namespace mbias {

/// Eight cells p(x, y, v), index (x * 2 + y) * 2 + v.
struct BinaryJoint {
  std::array<double, 8> cells{};

  static constexpr std::size_t index(std::size_t x, std::size_t y,
                                     std::size_t v) noexcept {
    return (x * 2 + y) * 2 + v;
  }
  double operator()(std::size_t x, std::size_t y, std::size_t v) const noexcept {
    return cells[index(x, y, v)];
  }

  /// Throws InvalidArgument unless the table is 2x2x2.
  static BinaryJoint from_table(const JointTable& table);
  JointTable to_table(VKind kind) const;
};

/// One BinaryErrorParams per proxy component.
using ComponentErrorList = std::vector<BinaryErrorParams>;

struct BinaryOptions {
  double tol_sing = kDefaultSingularTolerance;
  double tol_incompat = 1e-6;
  bool clip = false;
};

/// Closed-form inverse of the 2x2 mechanism applied to every (x, y) pair:
///   P(x,y,z0) = [(1-eps) P(x,y,w0) - eps P(x,y,w1)] / (1-eps-delta)
///   P(x,y,z1) = [-delta P(x,y,w0) + (1-delta) P(x,y,w1)] / (1-eps-delta)
/// Negative-cell handling follows restore_joint.
BinaryJoint restore_binary(const BinaryJoint& observed,
                           const BinaryErrorParams& err,
                           const BinaryOptions& options = {});

/// Ratio P(z1|x,y) / P(z0|x,y) = (p - delta) / (1 - eps - p) for
/// p = P(w1|x,y). Returns +infinity at p = 1 - eps. Throws
/// IncompatibleModelError when p lies outside [delta, 1 - eps].
double weight_split(double p_w1_given_xy, const BinaryErrorParams& err,
                    double tol_sing = kDefaultSingularTolerance);

inline constexpr double kBinaryDenominatorTol = 1e-9;

/// Modified inverse-probability-weighting estimate of P(Y=y | do(X=x)).
///
/// Each IPW term P(x,y,w)/P(x|w) is multiplied by
///   [1 - e/P(w|x,y)] [1 - e/P(w)] / ((1-eps-delta) [1 - e P(x)/P(x,w)])
/// with e = delta for w1 and e = eps for w0. Identical to adjusting the
/// closed-form restored table. Throws DegenerateDenominatorError naming the
/// quantity when a denominator falls below 1e-9.
double causal_effect_binary(const BinaryJoint& observed,
                            const BinaryErrorParams& err, std::size_t x,
                            std::size_t y,
                            double tol_sing = kDefaultSingularTolerance);

/// First-order expansion of causal_effect_binary around eps = delta = 0:
/// modifiers become 1 + eps + delta - e (1/P(w|x,y) + 1/P(w) - P(x)/P(x,w)).
double causal_effect_binary_infinitesimal(
    const BinaryJoint& observed, const BinaryErrorParams& err, std::size_t x,
    std::size_t y, double tol_sing = kDefaultSingularTolerance);

/// One unit record with K binary components (w or z).
struct BinarySample {
  std::uint8_t x = 0;
  std::uint8_t y = 0;
  std::vector<std::uint8_t> v;

  friend bool operator==(const BinarySample&, const BinarySample&) = default;
};

struct SynthesisResult {
  std::vector<BinarySample> samples;
  std::vector<std::string> warnings;
};

/// Synthetic (x, y, z) samples mirroring empirical (x, y, w) samples.
///
/// Within each (x, y) group and component i, p_i = P(w_i=1 | x, y) is the
/// empirical frequency; the synthetic component is 1 with probability
/// q_i = r/(1+r), r = weight_split(p_i), i.e. the restored P(z_i=1 | x, y).
/// z_i is coupled to the record's own w_i (kept whenever possible), so the
/// noiseless mechanism reproduces the input exactly. Components are drawn
/// independently from the substream `Rng(seed).split(record index)`.
SynthesisResult synthesize_samples(std::span<const BinarySample> samples,
                                   std::span<const BinaryErrorParams> errs,
                                   std::uint64_t seed,
                                   double tol_sing = kDefaultSingularTolerance);

/// Empirical P(x, y, v) over the 2^K joint states of v (first component most
/// significant).
JointTable tabulate(std::span<const BinarySample> samples, std::size_t k,
                    VKind kind, double smoothing = 0.0);

}  // namespace mbias
