#pragma once

// Internal helpers shared by the restoration modules.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "mbias/dist_core.hpp"
#include "mbias/matrix_restore.hpp"

namespace mbias::detail {

/// Prepared inverse of a (possibly factored) square error matrix.
class Inverter {
 public:
  Inverter(const ErrorMatrix& m, double condition_cap);

  std::size_t size() const noexcept;
  double condition() const noexcept;
  /// I * v, where v is indexed by w.
  std::vector<double> apply(std::span<const double> v) const;

 private:
  struct Impl;
  std::shared_ptr<const Impl> impl_;
};

/// Measures the negative mass of `cells` (rows of `row_length`), throws
/// IncompatibleModelError above tolerance unless clipping is enabled, and
/// otherwise clips negatives and rescales each row back to `row_mass`.
double settle_negative_mass(std::span<double> cells, std::size_t row_length,
                            std::span<const double> row_mass,
                            const RestoreOptions& options, bool& clipped);

}  // namespace mbias::detail
