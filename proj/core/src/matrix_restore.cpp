#include "mbias/matrix_restore.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "mbias/errors.hpp"
#include "restore_common.hpp"

namespace mbias {
namespace {

// Below this size the explicit inverse is formed; above it each right-hand
// side is solved through the LU factors.
constexpr std::size_t kExplicitInverseMax = 8;

constexpr double kPropensityDenominatorTol = 1e-9;

double one_norm(const Eigen::MatrixXd& a) {
  return a.cwiseAbs().colwise().sum().maxCoeff();
}

// Inverse of one dense square error matrix, ready to apply to vectors.
class DenseInverse {
 public:
  DenseInverse(const ErrorMatrix& m, double condition_cap) : n_(m.n_z()) {
    const auto raw = m.entries();
    Eigen::MatrixXd a =
        Eigen::Map<const Eigen::MatrixXd>(raw.data(), static_cast<Eigen::Index>(n_),
                                          static_cast<Eigen::Index>(n_));
    lu_.compute(a);

    const auto diag = lu_.matrixLU().diagonal().cwiseAbs();
    const double max_pivot = diag.maxCoeff();
    const double min_pivot = diag.minCoeff();
    if (!(min_pivot > std::numeric_limits<double>::epsilon() * max_pivot)) {
      throw SingularError("error matrix is singular; its inverse does not exist");
    }

    if (n_ <= kExplicitInverseMax) {
      inverse_ = lu_.inverse();
      condition_ = one_norm(a) * one_norm(inverse_);
    } else {
      const double rc = lu_.rcond();
      condition_ = rc > 0.0 ? 1.0 / rc : std::numeric_limits<double>::infinity();
    }
    if (!std::isfinite(condition_) || condition_ > condition_cap) {
      std::ostringstream os;
      os << "error matrix is ill-conditioned: condition estimate " << condition_
         << " exceeds cap " << condition_cap;
      throw SingularError(os.str());
    }
  }

  std::size_t size() const noexcept { return n_; }
  double condition() const noexcept { return condition_; }

  void apply(std::span<const double> in, std::span<double> out) const {
    const auto rows = static_cast<Eigen::Index>(n_);
    Eigen::Map<const Eigen::VectorXd> v(in.data(), rows);
    Eigen::Map<Eigen::VectorXd> r(out.data(), rows);
    if (n_ <= kExplicitInverseMax) {
      r.noalias() = inverse_ * v;
    } else {
      r = lu_.solve(v);
    }
  }

 private:
  std::size_t n_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
  Eigen::MatrixXd inverse_;
  double condition_ = 1.0;
};

}  // namespace

namespace detail {

struct Inverter::Impl {
  std::vector<DenseInverse> factors;
  std::size_t size = 1;
  double condition = 1.0;
};

Inverter::Inverter(const ErrorMatrix& m, double condition_cap) {
  if (!m.is_square()) {
    throw SingularError("error matrix must be square (|W| = |Z|) to be inverted");
  }
  auto impl = std::make_shared<Impl>();
  if (m.is_factored()) {
    for (const auto& f : m.factors()) {
      if (!f.is_square()) {
        throw SingularError("every error-matrix factor must be square");
      }
      impl->factors.emplace_back(f, condition_cap);
    }
  } else {
    impl->factors.emplace_back(m, condition_cap);
  }
  for (const auto& f : impl->factors) {
    impl->size *= f.size();
    impl->condition *= f.condition();
  }
  if (impl->condition > condition_cap) {
    std::ostringstream os;
    os << "factored error matrix is ill-conditioned: condition estimate "
       << impl->condition << " exceeds cap " << condition_cap;
    throw SingularError(os.str());
  }
  impl_ = std::move(impl);
}

std::size_t Inverter::size() const noexcept { return impl_->size; }
double Inverter::condition() const noexcept { return impl_->condition; }

std::vector<double> Inverter::apply(std::span<const double> v) const {
  std::vector<double> cur(v.begin(), v.end());
  if (impl_->factors.size() == 1) {
    std::vector<double> out(cur.size());
    impl_->factors.front().apply(cur, out);
    return out;
  }
  // Apply each factor inverse along its own axis of the tensor.
  std::size_t outer = 1;
  std::vector<double> gather;
  std::vector<double> scatter;
  for (const auto& f : impl_->factors) {
    const std::size_t d = f.size();
    const std::size_t stride = impl_->size / (outer * d);
    gather.resize(d);
    scatter.resize(d);
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t i = 0; i < stride; ++i) {
        const std::size_t base = o * d * stride + i;
        for (std::size_t j = 0; j < d; ++j) gather[j] = cur[base + j * stride];
        f.apply(gather, scatter);
        for (std::size_t j = 0; j < d; ++j) cur[base + j * stride] = scatter[j];
      }
    }
    outer *= d;
  }
  return cur;
}

double settle_negative_mass(std::span<double> cells, std::size_t row_length,
                            std::span<const double> row_mass,
                            const RestoreOptions& options, bool& clipped) {
  double negative = 0.0;
  for (double c : cells)
    if (c < 0.0) negative -= c;
  clipped = false;
  if (negative == 0.0) return 0.0;
  if (negative > options.tol_incompat && !options.clip) {
    std::ostringstream os;
    os << "restored distribution has negative mass " << negative
       << " (tolerance " << options.tol_incompat
       << "); the observed data and the postulated error mechanism are "
          "incompatible";
    throw IncompatibleModelError(os.str());
  }
  clipped = true;
  const std::size_t rows = cells.size() / row_length;
  for (std::size_t r = 0; r < rows; ++r) {
    auto row = cells.subspan(r * row_length, row_length);
    double kept = 0.0;
    for (double& c : row) {
      if (c < 0.0) c = 0.0;
      kept += c;
    }
    if (kept > 0.0) {
      const double scale = std::max(row_mass[r], 0.0) / kept;
      for (double& c : row) c *= scale;
    }
  }
  return negative;
}

}  // namespace detail

namespace {

RestorationResult restore_rows(
    const JointTable& observed,
    const std::function<const detail::Inverter&(std::size_t)>& inverter_for,
    const RestoreOptions& options) {
  if (observed.kind() != VKind::W) {
    throw InvalidArgument("restoration expects an observed table over the proxy W");
  }
  const std::size_t cv = observed.card_v();
  const std::size_t rows = observed.card_x() * observed.card_y();
  std::vector<double> cells(observed.size());
  std::vector<double> row_mass(rows, 0.0);
  double condition = 1.0;

  for (std::size_t r = 0; r < rows; ++r) {
    const auto& inv = inverter_for(r);
    if (inv.size() != cv) {
      throw InvalidArgument("error matrix dimension does not match the proxy axis");
    }
    condition = std::max(condition, inv.condition());
    const auto in = observed.cells().subspan(r * cv, cv);
    row_mass[r] = std::accumulate(in.begin(), in.end(), 0.0);
    const auto out = inv.apply(in);
    std::copy(out.begin(), out.end(), cells.begin() + static_cast<std::ptrdiff_t>(r * cv));
  }

  bool clipped = false;
  const double negative =
      detail::settle_negative_mass(cells, cv, row_mass, options, clipped);

  RestorationResult result{
      JointTable(observed.card_x(), observed.card_y(), cv, std::move(cells),
                 VKind::Z),
      condition, negative, clipped};
  return result;
}

}  // namespace

RestorationResult restore_joint(const JointTable& observed, const ErrorMatrix& m,
                                const RestoreOptions& options) {
  const detail::Inverter inv(m, options.condition_cap);
  return restore_rows(
      observed, [&](std::size_t) -> const detail::Inverter& { return inv; },
      options);
}

RestorationResult restore_joint_differential(
    const JointTable& observed, std::span<const ErrorMatrix> m_family,
    const RestoreOptions& options) {
  const std::size_t rows = observed.card_x() * observed.card_y();
  if (m_family.size() != rows) {
    std::ostringstream os;
    os << "differential error needs one matrix per (x, y) cell: expected "
       << rows << ", got " << m_family.size();
    throw InvalidArgument(os.str());
  }
  std::vector<detail::Inverter> inverters;
  inverters.reserve(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    try {
      inverters.emplace_back(m_family[r], options.condition_cap);
    } catch (const SingularError& e) {
      std::ostringstream os;
      os << "(x=" << r / observed.card_y() << ", y=" << r % observed.card_y()
         << "): " << e.what();
      throw SingularError(os.str());
    }
  }
  return restore_rows(
      observed,
      [&](std::size_t r) -> const detail::Inverter& { return inverters[r]; },
      options);
}

std::vector<double> causal_effect_restored(const JointTable& observed,
                                           const ErrorMatrix& m, std::size_t x,
                                           const RestoreOptions& options) {
  return adjust_for_confounder(restore_joint(observed, m, options).restored, x);
}

ErrorMatrix expand_factored(std::span<const ErrorMatrix> factors,
                            std::size_t dense_cap) {
  if (factors.empty()) throw InvalidArgument("no factors to expand");
  std::size_t n_w = 1;
  std::size_t n_z = 1;
  for (const auto& f : factors) {
    n_w *= f.n_w();
    n_z *= f.n_z();
    if (n_w > dense_cap || n_z > dense_cap) {
      std::ostringstream os;
      os << "dense expansion exceeds the cap of " << dense_cap
         << "; use the factored restoration path";
      throw DimensionCapError(os.str());
    }
  }
  if (factors.size() == 1 && !factors.front().is_factored()) return factors.front();

  const ErrorMatrix lazy =
      ErrorMatrix::factored(std::vector<ErrorMatrix>(factors.begin(), factors.end()));
  std::vector<double> entries(n_w * n_z);
  for (std::size_t z = 0; z < n_z; ++z)
    for (std::size_t w = 0; w < n_w; ++w) entries[z * n_w + w] = lazy(w, z);
  // Round-off in the products can drift a column sum past 1e-12 for very
  // large expansions; renormalize exactly.
  for (std::size_t z = 0; z < n_z; ++z) {
    double s = 0.0;
    for (std::size_t w = 0; w < n_w; ++w) s += entries[z * n_w + w];
    for (std::size_t w = 0; w < n_w; ++w) entries[z * n_w + w] /= s;
  }
  return ErrorMatrix(n_w, n_z, std::move(entries));
}

Matrix invert(const ErrorMatrix& m, double condition_cap) {
  const detail::Inverter inv(m, condition_cap);
  const std::size_t n = inv.size();
  Matrix out{n, n, std::vector<double>(n * n)};
  std::vector<double> e(n, 0.0);
  for (std::size_t w = 0; w < n; ++w) {
    std::fill(e.begin(), e.end(), 0.0);
    e[w] = 1.0;
    const auto col = inv.apply(e);
    std::copy(col.begin(), col.end(), out.data.begin() + static_cast<std::ptrdiff_t>(w * n));
  }
  return out;
}

double condition_estimate(const ErrorMatrix& m) {
  return detail::Inverter(m, std::numeric_limits<double>::infinity()).condition();
}

std::vector<double> restored_propensity(std::span<const double> score_w,
                                        std::span<const double> p_w,
                                        const ErrorMatrix& m,
                                        double condition_cap) {
  if (score_w.size() != m.n_w() || p_w.size() != m.n_w()) {
    throw InvalidArgument("propensity inputs must have one entry per w");
  }
  const double total = std::accumulate(p_w.begin(), p_w.end(), 0.0);
  if (std::abs(total - 1.0) > kInputSumTolerance) {
    throw InvalidArgument("P(w) must be a distribution");
  }
  const detail::Inverter inv(m, condition_cap);

  std::vector<double> weighted(p_w.size());
  for (std::size_t w = 0; w < p_w.size(); ++w) weighted[w] = score_w[w] * p_w[w];
  const auto num = inv.apply(weighted);
  const auto den = inv.apply(p_w);

  std::vector<double> out(num.size());
  for (std::size_t z = 0; z < out.size(); ++z) {
    if (std::abs(den[z]) < kPropensityDenominatorTol) {
      std::ostringstream os;
      os << "restored P(z=" << z << ") = " << den[z]
         << " vanishes; propensity score undefined";
      throw DegenerateStratumError(os.str());
    }
    out[z] = num[z] / den[z];
  }
  return out;
}

namespace {

constexpr double kScoreTieTolerance = 1e-12;

struct ZMasses {
  std::vector<double> p_z;
  std::vector<double> p_x1z;
  double total = 0.0;
};

ZMasses z_masses(const JointTable& restored) {
  if (restored.kind() != VKind::Z) {
    throw InvalidArgument("propensity profile needs a restored table over Z");
  }
  if (restored.card_x() != 2) {
    throw InvalidArgument("propensity scores require a binary treatment X");
  }
  ZMasses m{std::vector<double>(restored.card_v(), 0.0),
            std::vector<double>(restored.card_v(), 0.0), restored.total()};
  for (std::size_t x = 0; x < 2; ++x)
    for (std::size_t y = 0; y < restored.card_y(); ++y)
      for (std::size_t z = 0; z < restored.card_v(); ++z) {
        m.p_z[z] += restored(x, y, z);
        if (x == 1) m.p_x1z[z] += restored(x, y, z);
      }
  return m;
}

}  // namespace

PropensityProfile profile_from_partition(
    const JointTable& restored, std::vector<std::vector<std::size_t>> strata) {
  const ZMasses m = z_masses(restored);
  const std::size_t cz = restored.card_v();

  PropensityProfile profile;
  profile.score.assign(cz, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t z = 0; z < cz; ++z)
    if (m.p_z[z] > 0.0) profile.score[z] = m.p_x1z[z] / m.p_z[z];

  std::vector<int> seen(cz, 0);
  for (const auto& s : strata)
    for (std::size_t z : s) {
      if (z >= cz) throw InvalidArgument("stratum references z out of range");
      ++seen[z];
    }
  for (std::size_t z = 0; z < cz; ++z) {
    if (seen[z] > 1) {
      throw InvalidArgument("z=" + std::to_string(z) + " appears in more than one stratum");
    }
    if (seen[z] == 0 && m.p_z[z] > 0.0) {
      throw InvalidArgument("z=" + std::to_string(z) +
                            " has positive mass but belongs to no stratum");
    }
  }

  profile.strata_weight.reserve(strata.size());
  for (const auto& s : strata) {
    double w = 0.0;
    for (std::size_t z : s) w += m.p_z[z];
    profile.strata_weight.push_back(w / m.total);
  }
  profile.strata = std::move(strata);
  return profile;
}

PropensityProfile make_propensity_profile(const JointTable& restored,
                                          std::size_t strata_count) {
  if (strata_count == 0) throw InvalidArgument("strata count must be positive");
  const ZMasses m = z_masses(restored);

  std::vector<std::pair<double, std::size_t>> scored;
  for (std::size_t z = 0; z < restored.card_v(); ++z)
    if (m.p_z[z] > 0.0) scored.emplace_back(m.p_x1z[z] / m.p_z[z], z);
  std::sort(scored.begin(), scored.end());

  std::vector<std::vector<std::size_t>> exact;
  for (std::size_t i = 0; i < scored.size(); ++i) {
    if (i == 0 || scored[i].first - scored[i - 1].first > kScoreTieTolerance) {
      exact.emplace_back();
    }
    exact.back().push_back(scored[i].second);
  }
  if (exact.size() <= strata_count) {
    return profile_from_partition(restored, std::move(exact));
  }

  std::vector<std::vector<std::size_t>> bins(strata_count);
  for (const auto& [score, z] : scored) {
    const double clamped = std::clamp(score, 0.0, 1.0);
    auto bin = static_cast<std::size_t>(clamped * static_cast<double>(strata_count));
    bins[std::min(bin, strata_count - 1)].push_back(z);
  }
  std::erase_if(bins, [](const auto& b) { return b.empty(); });
  return profile_from_partition(restored, std::move(bins));
}

std::vector<double> stratified_effect(const JointTable& restored,
                                      const PropensityProfile& profile,
                                      std::size_t x) {
  if (x >= restored.card_x()) throw InvalidArgument("treatment index out of range");
  if (profile.strata.size() != profile.strata_weight.size()) {
    throw InvalidArgument("profile strata and weights disagree in length");
  }
  const double weight_sum = std::accumulate(profile.strata_weight.begin(),
                                            profile.strata_weight.end(), 0.0);
  if (std::abs(weight_sum - 1.0) > kInputSumTolerance) {
    throw InvalidArgument("stratum weights must sum to 1");
  }

  const std::size_t cy = restored.card_y();
  std::vector<double> out(cy, 0.0);
  std::vector<double> p_xyl(cy);
  for (std::size_t l = 0; l < profile.strata.size(); ++l) {
    const double weight = profile.strata_weight[l];
    if (!(weight > 0.0)) continue;
    const auto& members = profile.strata[l];
    if (members.empty()) {
      throw DegenerateStratumError("stratum " + std::to_string(l) +
                                   " is empty but carries positive weight");
    }
    std::fill(p_xyl.begin(), p_xyl.end(), 0.0);
    for (std::size_t z : members)
      for (std::size_t y = 0; y < cy; ++y) p_xyl[y] += restored(x, y, z);
    const double p_xl = std::accumulate(p_xyl.begin(), p_xyl.end(), 0.0);
    if (!(p_xl > 0.0)) {
      std::ostringstream os;
      os << "positivity violated: P(X=" << x << ", stratum " << l << ") = " << p_xl;
      throw PositivityError(os.str());
    }
    for (std::size_t y = 0; y < cy; ++y) out[y] += p_xyl[y] / p_xl * weight;
  }
  return out;
}

}  // namespace mbias
