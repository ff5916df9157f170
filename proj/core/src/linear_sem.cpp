#include "mbias/linear_sem.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "mbias/errors.hpp"
#include "mbias/rng.hpp"

namespace mbias {
namespace {

constexpr double kRelativeDenominatorTol = 1e-9;
constexpr double kCorrelationSlack = 1e-9;

void require_relative(double den, double scale, const char* what) {
  if (!(std::abs(den) >= kRelativeDenominatorTol * scale) || scale == 0.0) {
    std::ostringstream os;
    os << what << " vanishes (" << den << " relative to scale " << scale << ")";
    throw UnidentifiableError(os.str());
  }
}

void require_v(const CovStats& s) {
  if (!s.has_v()) {
    throw InvalidArgument("a second indicator V (var_v, cov_xv, cov_yv, cov_wv) is required");
  }
}

// Running sums for one pass over (x, y, w[, v]).
struct Moments {
  std::size_t n = 0;
  std::array<double, 4> sum{};
  std::array<double, 10> cross{};  // upper triangle, row-major over 4 vars

  void add(const std::array<double, 4>& r, std::size_t dims) {
    ++n;
    std::size_t k = 0;
    for (std::size_t i = 0; i < dims; ++i) {
      sum[i] += r[i];
      for (std::size_t j = i; j < dims; ++j) cross[k++] += r[i] * r[j];
    }
  }

  CovStats finish(std::size_t dims) const {
    const double nn = static_cast<double>(n);
    std::array<double, 4> mean{};
    for (std::size_t i = 0; i < dims; ++i) mean[i] = sum[i] / nn;
    std::array<std::array<double, 4>, 4> c{};
    std::size_t k = 0;
    for (std::size_t i = 0; i < dims; ++i)
      for (std::size_t j = i; j < dims; ++j) {
        c[i][j] = (cross[k++] - nn * mean[i] * mean[j]) / (nn - 1.0);
      }
    CovStats s;
    s.var_x = c[0][0];
    s.var_y = c[1][1];
    s.var_w = c[2][2];
    s.cov_xy = c[0][1];
    s.cov_xw = c[0][2];
    s.cov_yw = c[1][2];
    if (dims == 4) {
      s.var_v = c[3][3];
      s.cov_xv = c[0][3];
      s.cov_yv = c[1][3];
      s.cov_wv = c[2][3];
    }
    s.n = n;
    return s;
  }
};

std::size_t checked_dims(const LinearData& rows) {
  const std::size_t n = rows.size();
  if (rows.y.size() != n || rows.w.size() != n ||
      (rows.has_v() && rows.v.size() != n)) {
    throw InvalidArgument("columns x, y, w[, v] must have equal length");
  }
  if (n < 2) throw InvalidArgument("at least two rows are needed for covariances");
  return rows.has_v() ? 4 : 3;
}

std::array<double, 4> row_at(const LinearData& rows, std::size_t i, std::size_t dims) {
  return {rows.x[i], rows.y[i], rows.w[i], dims == 4 ? rows.v[i] : 0.0};
}

}  // namespace

std::vector<std::string> CovStats::zero_variance_columns() const {
  std::vector<std::string> out;
  if (!(var_x > 0.0)) out.emplace_back("x");
  if (!(var_y > 0.0)) out.emplace_back("y");
  if (!(var_w > 0.0)) out.emplace_back("w");
  if (var_v && !(*var_v > 0.0)) out.emplace_back("v");
  return out;
}

void CovStats::validate() const {
  const auto zero = zero_variance_columns();
  if (!zero.empty()) {
    throw InvalidArgument("variance of '" + zero.front() + "' must be positive");
  }
  auto check = [](double cov, double va, double vb, const char* name) {
    if (std::abs(cov) > (1.0 + kCorrelationSlack) * std::sqrt(va * vb)) {
      throw InvalidArgument(std::string("implied correlation of ") + name +
                            " exceeds 1 in magnitude");
    }
  };
  check(cov_xy, var_x, var_y, "(x, y)");
  check(cov_xw, var_x, var_w, "(x, w)");
  check(cov_yw, var_y, var_w, "(y, w)");
  if (has_v()) {
    check(*cov_xv, var_x, *var_v, "(x, v)");
    check(*cov_yv, var_y, *var_v, "(y, v)");
    check(*cov_wv, var_w, *var_v, "(w, v)");
  } else if (var_v || cov_xv || cov_yv || cov_wv) {
    throw InvalidArgument("second-indicator moments must be given together");
  }
}

void LinearSemSpec::validate() const {
  if (!(var_z > 0.0 && var_ex > 0.0 && var_ey > 0.0 && var_ew > 0.0)) {
    throw InvalidArgument("exogenous variances must be strictly positive");
  }
  if (c_v.has_value() != var_ev.has_value()) {
    throw InvalidArgument("c_v and var_ev must be given together");
  }
  if (var_ev && !(*var_ev > 0.0)) {
    throw InvalidArgument("var_ev must be strictly positive");
  }
}

double lambda_from_two_indicators(const CovStats& s) {
  require_v(s);
  require_relative(*s.cov_xv, std::sqrt(std::abs(s.var_x * *s.var_v)), "cov(X, V)");
  return s.cov_xw * *s.cov_wv / *s.cov_xv;
}

double lambda_from_error_variance(double var_w, double var_ew) {
  if (!(var_ew >= 0.0 && var_ew < var_w)) {
    std::ostringstream os;
    os << "error variance " << var_ew << " must lie in [0, var(W) = " << var_w << ")";
    throw InvalidErrorVarianceError(os.str());
  }
  return var_w - var_ew;
}

double c0_from_lambda(const CovStats& s, double lambda) {
  if (!(lambda > 0.0)) throw InvalidArgument("lambda = c3^2 var(Z) must be positive");
  const double proxy_part = s.cov_xw * s.cov_xw / lambda;
  const double den = s.var_x - proxy_part;
  require_relative(den, std::max(std::abs(s.var_x), std::abs(proxy_part)),
                   "var(X) - cov^2(XW)/lambda");
  return (s.cov_xy - s.cov_xw * s.cov_yw / lambda) / den;
}

double c0_two_indicator(const CovStats& s) {
  require_v(s);
  const double a = *s.cov_wv * s.var_x;
  const double b = s.cov_xw * *s.cov_xv;
  require_relative(a - b, std::max(std::abs(a), std::abs(b)),
                   "cov(WV)var(X) - cov(XW)cov(XV)");
  return (s.cov_xy * *s.cov_wv - s.cov_yw * *s.cov_xv) / (a - b);
}

RegressionSlopes regression_slopes(const CovStats& s) {
  if (!(s.var_x > 0.0 && s.var_w > 0.0)) {
    throw UnidentifiableError("regression slopes need positive var(X) and var(W)");
  }
  return {s.cov_xy / s.var_x, s.cov_yw / s.var_w, s.cov_xw / s.var_x,
          s.cov_xw / s.var_w};
}

double c0_noiseless(const CovStats& s) {
  const auto b = regression_slopes(s);
  const double den = 1.0 - b.xw * b.wx;
  require_relative(den, 1.0, "1 - beta_xw beta_wx (X and W collinear)");
  return (b.yx - b.yw * b.wx) / den;
}

double c0_error_prone_k(double beta_yx, double beta_yw, double beta_wx,
                        double beta_xw, double k) {
  if (!(k > 0.0 && k <= 1.0)) {
    std::ostringstream os;
    os << "reliability k = " << k << " must lie in (0, 1]";
    throw InvalidArgument(os.str());
  }
  const double shrink = beta_xw * beta_wx / k;
  const double den = 1.0 - shrink;
  require_relative(den, std::max(1.0, std::abs(shrink)), "1 - beta_xw beta_wx / k");
  return (beta_yx - beta_yw * beta_wx / k) / den;
}

double surrogate_slope(const CovStats& s, double lambda) {
  if (!(s.var_w > 0.0)) throw InvalidArgument("var(W) must be positive");
  return lambda / s.var_w;
}

CovStats cov_from_samples(const LinearData& rows) {
  const std::size_t dims = checked_dims(rows);
  Moments m;
  for (std::size_t i = 0; i < rows.size(); ++i) m.add(row_at(rows, i, dims), dims);
  return m.finish(dims);
}

double bootstrap_se(const LinearData& rows,
                    const std::function<double(const CovStats&)>& estimator,
                    std::size_t resamples, std::uint64_t seed) {
  const std::size_t dims = checked_dims(rows);
  if (resamples < 2) throw InvalidArgument("bootstrap needs at least two resamples");
  const std::size_t n = rows.size();
  const Rng root(seed);

  std::vector<double> estimates;
  estimates.reserve(resamples);
  for (std::size_t b = 0; b < resamples; ++b) {
    Rng rng = root.split(b);
    Moments m;
    for (std::size_t i = 0; i < n; ++i) {
      m.add(row_at(rows, static_cast<std::size_t>(rng.below(n)), dims), dims);
    }
    try {
      estimates.push_back(estimator(m.finish(dims)));
    } catch (const Error&) {
      // degenerate resample
    }
  }
  if (estimates.size() * 2 < resamples) {
    throw UnidentifiableError("estimator failed on most bootstrap resamples");
  }
  double mean = 0.0;
  for (double e : estimates) mean += e;
  mean /= static_cast<double>(estimates.size());
  double ss = 0.0;
  for (double e : estimates) ss += (e - mean) * (e - mean);
  return std::sqrt(ss / static_cast<double>(estimates.size() - 1));
}

}  // namespace mbias
