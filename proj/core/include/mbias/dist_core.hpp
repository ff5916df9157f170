#pragma once

// Discrete joint tables over (X, Y, V), error-mechanism matrices and the
// error-free back-door adjustment.

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace mbias {

/// Tolerance on the total mass of caller-supplied tables.
inline constexpr double kInputSumTolerance = 1e-9;
/// Tolerance on the total mass of tables produced internally.
inline constexpr double kInternalSumTolerance = 1e-12;
/// Column-sum tolerance of an error matrix.
inline constexpr double kStochasticTolerance = 1e-12;

/// Whether the third axis of a table is the latent confounder Z or its
/// proxy W.
enum class VKind { Z, W };

enum class Axis { X, Y, V };

std::string to_string(VKind kind);
VKind vkind_from_string(const std::string& s);

/// Dense row-major probability table P(x, y, v).
///
/// Cells are stored at index (x * card_y + y) * card_v + v. The table is a
/// value type; nothing mutates it after construction. Small negative cells
/// are representable (restoration noise); `validate_joint` reports them.
class JointTable {
 public:
  JointTable() = default;
  JointTable(std::size_t card_x, std::size_t card_y, std::size_t card_v,
             std::vector<double> cells, VKind kind);

  /// Normalized frequencies from integer-valued counts, with optional
  /// add-`smoothing` pseudo-counts per cell.
  static JointTable from_counts(std::size_t card_x, std::size_t card_y,
                                std::size_t card_v,
                                std::span<const double> counts, VKind kind,
                                double smoothing = 0.0);

  static JointTable uniform(std::size_t card_x, std::size_t card_y,
                            std::size_t card_v, VKind kind);

  std::size_t card_x() const noexcept { return card_x_; }
  std::size_t card_y() const noexcept { return card_y_; }
  std::size_t card_v() const noexcept { return card_v_; }
  std::size_t size() const noexcept { return cells_.size(); }
  VKind kind() const noexcept { return kind_; }

  std::size_t index(std::size_t x, std::size_t y, std::size_t v) const noexcept {
    return (x * card_y_ + y) * card_v_ + v;
  }
  double operator()(std::size_t x, std::size_t y, std::size_t v) const noexcept {
    return cells_[index(x, y, v)];
  }
  std::span<const double> cells() const noexcept { return cells_; }

  double total() const noexcept;

  /// Same cells, third axis reinterpreted.
  JointTable relabeled(VKind kind) const;

  friend bool operator==(const JointTable&, const JointTable&) = default;

 private:
  std::size_t card_x_ = 0;
  std::size_t card_y_ = 0;
  std::size_t card_v_ = 0;
  std::vector<double> cells_;
  VKind kind_ = VKind::Z;
};

struct ValidationReport {
  bool valid = true;
  /// |1 - sum of cells|.
  double defect = 0.0;
  std::vector<std::array<std::size_t, 3>> negative_cells;
};

/// Reports normalization defect and cells below -tol_neg. Never throws.
ValidationReport validate_joint(const JointTable& table,
                                double tol_sum = kInputSumTolerance,
                                double tol_neg = 0.0);

/// Lower-dimensional table over the kept axes (in X, Y, V order).
struct Marginal {
  std::vector<Axis> axes;
  std::vector<std::size_t> cards;
  std::vector<double> cells;  // row-major over `axes`
};

/// Sums out every axis not in `axes` and normalizes the result.
/// Throws InvalidArgument if `axes` is empty.
Marginal marginal(const JointTable& table, std::span<const Axis> axes);

/// P(y | do(x)) = sum_z P(y|x,z) P(z), for a table whose V axis is Z.
///
/// Requires P(x, z) > 0 for every z with P(z) > 0 (strict, no epsilon);
/// throws PositivityError naming the stratum otherwise.
std::vector<double> adjust_for_confounder(const JointTable& table,
                                          std::size_t x);

/// Misclassification pair of one binary proxy: eps = P(w0|z1),
/// delta = P(w1|z0).
struct BinaryErrorParams {
  double eps = 0.0;
  double delta = 0.0;

  /// 1 - eps - delta; inverse entries scale with its reciprocal.
  double determinant() const noexcept { return 1.0 - eps - delta; }
};

inline constexpr double kDefaultSingularTolerance = 1e-6;

/// Throws InvalidArgument for parameters outside [0, 1) and SingularError
/// when |1 - eps - delta| < tol_sing.
void check_binary_params(const BinaryErrorParams& err,
                         double tol_sing = kDefaultSingularTolerance);

/// Plain dense column-major matrix, used for inverses.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  double operator()(std::size_t r, std::size_t c) const noexcept {
    return data[c * rows + r];
  }
};

/// Column-stochastic matrix M(w, z) = P(w | z).
///
/// Either dense, or a list of factors whose Kronecker product is the full
/// matrix (first factor most significant in the index). Factored matrices
/// never materialize their dense entries unless asked to.
class ErrorMatrix {
 public:
  ErrorMatrix() = default;
  /// Dense matrix from column-major entries. Validates stochasticity.
  ErrorMatrix(std::size_t n_w, std::size_t n_z, std::vector<double> column_major);

  static ErrorMatrix identity(std::size_t n);
  static ErrorMatrix from_binary(const BinaryErrorParams& err);
  static ErrorMatrix factored(std::vector<ErrorMatrix> factors);

  std::size_t n_w() const noexcept { return n_w_; }
  std::size_t n_z() const noexcept { return n_z_; }
  bool is_square() const noexcept { return n_w_ == n_z_; }
  bool is_factored() const noexcept { return !factors_.empty(); }
  const std::vector<ErrorMatrix>& factors() const noexcept { return factors_; }

  /// Entry P(w | z); computed as a product of factor entries when factored.
  double operator()(std::size_t w, std::size_t z) const;

  /// Column-major dense entries. Empty for factored matrices.
  std::span<const double> entries() const noexcept { return entries_; }

  Matrix as_matrix() const;

 private:
  std::size_t n_w_ = 0;
  std::size_t n_z_ = 0;
  std::vector<double> entries_;
  std::vector<ErrorMatrix> factors_;
};

/// P(x, y, w) = sum_z M(w, z) P(x, y, z).
JointTable push_forward(const JointTable& latent, const ErrorMatrix& m);

}  // namespace mbias
