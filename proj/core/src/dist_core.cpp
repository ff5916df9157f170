#include "mbias/dist_core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "mbias/errors.hpp"

namespace mbias {

std::string to_string(VKind kind) { return kind == VKind::Z ? "Z" : "W"; }

VKind vkind_from_string(const std::string& s) {
  if (s == "Z") return VKind::Z;
  if (s == "W") return VKind::W;
  throw InvalidArgument("axis must be \"Z\" or \"W\", got \"" + s + "\"");
}

JointTable::JointTable(std::size_t card_x, std::size_t card_y,
                       std::size_t card_v, std::vector<double> cells,
                       VKind kind)
    : card_x_(card_x),
      card_y_(card_y),
      card_v_(card_v),
      cells_(std::move(cells)),
      kind_(kind) {
  if (card_x == 0 || card_y == 0 || card_v == 0) {
    throw InvalidArgument("table cardinalities must be positive");
  }
  if (cells_.size() != card_x * card_y * card_v) {
    std::ostringstream os;
    os << "table has " << cells_.size() << " cells, expected "
       << card_x * card_y * card_v;
    throw InvalidArgument(os.str());
  }
  for (double c : cells_) {
    if (!std::isfinite(c)) throw InvalidArgument("table cell is not finite");
  }
}

JointTable JointTable::from_counts(std::size_t card_x, std::size_t card_y,
                                   std::size_t card_v,
                                   std::span<const double> counts, VKind kind,
                                   double smoothing) {
  if (smoothing < 0.0) throw InvalidArgument("smoothing must be >= 0");
  std::vector<double> cells(counts.begin(), counts.end());
  double total = 0.0;
  for (double& c : cells) {
    if (c < 0.0) throw InvalidArgument("negative count");
    c += smoothing;
    total += c;
  }
  if (total <= 0.0) throw InvalidArgument("no observations to tabulate");
  for (double& c : cells) c /= total;
  return JointTable(card_x, card_y, card_v, std::move(cells), kind);
}

JointTable JointTable::uniform(std::size_t card_x, std::size_t card_y,
                               std::size_t card_v, VKind kind) {
  const std::size_t n = card_x * card_y * card_v;
  return JointTable(card_x, card_y, card_v,
                    std::vector<double>(n, 1.0 / static_cast<double>(n)), kind);
}

double JointTable::total() const noexcept {
  return std::accumulate(cells_.begin(), cells_.end(), 0.0);
}

JointTable JointTable::relabeled(VKind kind) const {
  JointTable copy = *this;
  copy.kind_ = kind;
  return copy;
}

ValidationReport validate_joint(const JointTable& table, double tol_sum,
                                double tol_neg) {
  ValidationReport report;
  report.defect = std::abs(1.0 - table.total());
  for (std::size_t x = 0; x < table.card_x(); ++x)
    for (std::size_t y = 0; y < table.card_y(); ++y)
      for (std::size_t v = 0; v < table.card_v(); ++v)
        if (table(x, y, v) < -tol_neg) report.negative_cells.push_back({x, y, v});
  report.valid = report.defect <= tol_sum && report.negative_cells.empty();
  return report;
}

Marginal marginal(const JointTable& table, std::span<const Axis> axes) {
  if (axes.empty()) throw InvalidArgument("marginal needs at least one axis");
  std::array<bool, 3> keep{false, false, false};
  for (Axis a : axes) keep[static_cast<std::size_t>(a)] = true;

  const std::array<std::size_t, 3> cards{table.card_x(), table.card_y(),
                                         table.card_v()};
  Marginal out;
  for (std::size_t a = 0; a < 3; ++a) {
    if (keep[a]) {
      out.axes.push_back(static_cast<Axis>(a));
      out.cards.push_back(cards[a]);
    }
  }
  std::size_t n = 1;
  for (std::size_t c : out.cards) n *= c;
  out.cells.assign(n, 0.0);

  for (std::size_t x = 0; x < cards[0]; ++x)
    for (std::size_t y = 0; y < cards[1]; ++y)
      for (std::size_t v = 0; v < cards[2]; ++v) {
        const std::array<std::size_t, 3> idx{x, y, v};
        std::size_t flat = 0;
        for (std::size_t a = 0; a < 3; ++a)
          if (keep[a]) flat = flat * cards[a] + idx[a];
        out.cells[flat] += table(x, y, v);
      }

  const double total = std::accumulate(out.cells.begin(), out.cells.end(), 0.0);
  if (total > 0.0)
    for (double& c : out.cells) c /= total;
  return out;
}

std::vector<double> adjust_for_confounder(const JointTable& table,
                                          std::size_t x) {
  if (table.kind() != VKind::Z) {
    throw InvalidArgument(
        "adjustment requires a table over the confounder Z; relabel a proxy "
        "table explicitly to adjust for W");
  }
  if (x >= table.card_x()) throw InvalidArgument("treatment index out of range");

  const double total = table.total();
  const std::size_t cy = table.card_y();
  const std::size_t cz = table.card_v();

  std::vector<double> p_z(cz, 0.0);
  std::vector<double> p_xz(cz, 0.0);
  for (std::size_t xi = 0; xi < table.card_x(); ++xi)
    for (std::size_t y = 0; y < cy; ++y)
      for (std::size_t z = 0; z < cz; ++z) {
        p_z[z] += table(xi, y, z);
        if (xi == x) p_xz[z] += table(xi, y, z);
      }

  std::vector<double> out(cy, 0.0);
  for (std::size_t z = 0; z < cz; ++z) {
    if (!(p_z[z] > 0.0)) continue;
    if (!(p_xz[z] > 0.0)) {
      std::ostringstream os;
      os << "positivity violated: P(X=" << x << ", Z=" << z
         << ") = " << p_xz[z] << " while P(Z=" << z << ") = " << p_z[z] / total;
      throw PositivityError(os.str());
    }
    // P(x,y,z) P(z) / P(x,z); the total cancels from the ratio.
    const double w = p_z[z] / (p_xz[z] * total);
    for (std::size_t y = 0; y < cy; ++y) out[y] += table(x, y, z) * w;
  }
  return out;
}

void check_binary_params(const BinaryErrorParams& err, double tol_sing) {
  if (!(err.eps >= 0.0 && err.eps < 1.0) ||
      !(err.delta >= 0.0 && err.delta < 1.0)) {
    std::ostringstream os;
    os << "error parameters must lie in [0, 1): eps=" << err.eps
       << " delta=" << err.delta;
    throw InvalidArgument(os.str());
  }
  if (std::abs(err.determinant()) < tol_sing) {
    std::ostringstream os;
    os << "singular binary error mechanism: |1 - eps - delta| = "
       << std::abs(err.determinant()) << " < " << tol_sing
       << "; W provides no information about Z";
    throw SingularError(os.str());
  }
}

ErrorMatrix::ErrorMatrix(std::size_t n_w, std::size_t n_z,
                         std::vector<double> column_major)
    : n_w_(n_w), n_z_(n_z), entries_(std::move(column_major)) {
  if (n_w == 0 || n_z == 0) throw InvalidArgument("error matrix is empty");
  if (entries_.size() != n_w * n_z) {
    throw InvalidArgument("error matrix entry count does not match n_w * n_z");
  }
  for (std::size_t z = 0; z < n_z; ++z) {
    double sum = 0.0;
    for (std::size_t w = 0; w < n_w; ++w) {
      const double e = entries_[z * n_w + w];
      if (!(e >= 0.0 && e <= 1.0)) {
        std::ostringstream os;
        os << "error matrix entry M(" << w << ", " << z << ") = " << e
           << " is not a probability";
        throw InvalidArgument(os.str());
      }
      sum += e;
    }
    if (std::abs(sum - 1.0) > kStochasticTolerance) {
      std::ostringstream os;
      os.precision(17);
      os << "error matrix column " << z << " sums to " << sum;
      throw InvalidArgument(os.str());
    }
  }
}

ErrorMatrix ErrorMatrix::identity(std::size_t n) {
  std::vector<double> e(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) e[i * n + i] = 1.0;
  return ErrorMatrix(n, n, std::move(e));
}

ErrorMatrix ErrorMatrix::from_binary(const BinaryErrorParams& err) {
  // Columns z0 = (1-delta, delta), z1 = (eps, 1-eps).
  return ErrorMatrix(2, 2,
                     {1.0 - err.delta, err.delta, err.eps, 1.0 - err.eps});
}

ErrorMatrix ErrorMatrix::factored(std::vector<ErrorMatrix> factors) {
  if (factors.empty()) throw InvalidArgument("factored matrix needs factors");
  ErrorMatrix m;
  m.n_w_ = 1;
  m.n_z_ = 1;
  std::vector<ErrorMatrix> flat;
  for (auto& f : factors) {
    m.n_w_ *= f.n_w();
    m.n_z_ *= f.n_z();
    if (f.is_factored()) {
      for (const auto& g : f.factors()) flat.push_back(g);
    } else {
      flat.push_back(std::move(f));
    }
  }
  m.factors_ = std::move(flat);
  return m;
}

double ErrorMatrix::operator()(std::size_t w, std::size_t z) const {
  if (!is_factored()) return entries_[z * n_w_ + w];
  double p = 1.0;
  std::size_t rw = w;
  std::size_t rz = z;
  for (auto it = factors_.rbegin(); it != factors_.rend(); ++it) {
    p *= (*it)(rw % it->n_w(), rz % it->n_z());
    rw /= it->n_w();
    rz /= it->n_z();
  }
  return p;
}

Matrix ErrorMatrix::as_matrix() const {
  Matrix out{n_w_, n_z_, std::vector<double>(n_w_ * n_z_)};
  for (std::size_t z = 0; z < n_z_; ++z)
    for (std::size_t w = 0; w < n_w_; ++w) out.data[z * n_w_ + w] = (*this)(w, z);
  return out;
}

JointTable push_forward(const JointTable& latent, const ErrorMatrix& m) {
  if (latent.card_v() != m.n_z()) {
    throw InvalidArgument("error matrix n_z does not match the table");
  }
  const std::size_t cw = m.n_w();
  std::vector<double> cells(latent.card_x() * latent.card_y() * cw, 0.0);
  for (std::size_t x = 0; x < latent.card_x(); ++x)
    for (std::size_t y = 0; y < latent.card_y(); ++y)
      for (std::size_t z = 0; z < latent.card_v(); ++z) {
        const double p = latent(x, y, z);
        if (p == 0.0) continue;
        for (std::size_t w = 0; w < cw; ++w)
          cells[(x * latent.card_y() + y) * cw + w] += m(w, z) * p;
      }
  return JointTable(latent.card_x(), latent.card_y(), cw, std::move(cells),
                    VKind::W);
}

}  // namespace mbias
