#pragma once

// Effect identification in the linear-Gaussian model
//   X = c1 Z + e_X,  Y = c0 X + c2 Z + e_Y,  W = c3 Z + e_W  [, V = c_v Z + e_V]
// with Z latent and W (and optionally V) its proxies.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace mbias {

/// Second moments of the observed variables. Only one triangle is stored.
struct CovStats {
  double var_x = 0.0;
  double var_y = 0.0;
  double var_w = 0.0;
  double cov_xy = 0.0;
  double cov_xw = 0.0;
  double cov_yw = 0.0;
  std::optional<double> var_v;
  std::optional<double> cov_xv;
  std::optional<double> cov_yv;
  std::optional<double> cov_wv;
  /// Sample count; 0 for population (exact) moments.
  std::size_t n = 0;

  bool has_v() const noexcept { return var_v && cov_xv && cov_yv && cov_wv; }

  /// Names of columns whose variance is not strictly positive.
  std::vector<std::string> zero_variance_columns() const;

  /// Throws InvalidArgument on non-positive variances or any implied
  /// correlation exceeding 1 + 1e-9 in magnitude.
  void validate() const;
};

/// Ground-truth structural model.
struct LinearSemSpec {
  double c0 = 0.0;  // X -> Y
  double c1 = 0.0;  // Z -> X
  double c2 = 0.0;  // Z -> Y
  double c3 = 1.0;  // Z -> W
  std::optional<double> c_v;  // Z -> V
  double var_z = 1.0;
  double var_ex = 1.0;
  double var_ey = 1.0;
  double var_ew = 1.0;
  std::optional<double> var_ev;

  bool has_v() const noexcept { return c_v.has_value() && var_ev.has_value(); }
  void validate() const;
};

/// Columnar observations; `v` is empty when there is no second indicator.
struct LinearData {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> w;
  std::vector<double> v;

  std::size_t size() const noexcept { return x.size(); }
  bool has_v() const noexcept { return !v.empty(); }
};

/// c3^2 var(Z) = cov(XW) cov(WV) / cov(XV), from two independent indicators.
///
/// By path tracing cov(XW) = c1 c3 var(Z), cov(WV) = c3 c_v var(Z) and
/// cov(XV) = c1 c_v var(Z). (The ratio cov(XW) cov(XV) / cov(WV) equals
/// c1^2 var(Z), the loading of X, not of W.)
double lambda_from_two_indicators(const CovStats& s);

/// c3^2 var(Z) = var(W) - var(e_W). Throws InvalidErrorVarianceError unless
/// 0 <= var_ew < var_w.
double lambda_from_error_variance(double var_w, double var_ew);

/// c0 = [cov(XY) - cov(XW) cov(WY)/lambda] / [var(X) - cov^2(XW)/lambda].
/// Throws UnidentifiableError when the denominator vanishes relative to its
/// terms (X carries no signal beyond the proxy).
double c0_from_lambda(const CovStats& s, double lambda);

/// c0 = [cov(XY)cov(WV) - cov(YW)cov(XV)] / [cov(WV)var(X) - cov(XW)cov(XV)],
/// i.e. c0_from_lambda with lambda_from_two_indicators substituted.
double c0_two_indicator(const CovStats& s);

/// Noiseless proxy: the partial regression coefficient of X adjusting for W.
double c0_noiseless(const CovStats& s);

/// Simple regression slopes: beta_ab is the slope of a on b.
struct RegressionSlopes {
  double yx = 0.0;
  double yw = 0.0;
  double wx = 0.0;
  double xw = 0.0;
};
RegressionSlopes regression_slopes(const CovStats& s);

/// c0 = (beta_yx - beta_yw beta_wx / k) / (1 - beta_xw beta_wx / k),
/// k = 1 - var(e_W)/var(W) in (0, 1].
double c0_error_prone_k(double beta_yx, double beta_yw, double beta_wx,
                        double beta_xw, double k);

/// lambda / var(W): the reliability ratio of the proxy, equal to k.
double surrogate_slope(const CovStats& s, double lambda);

/// Unbiased (n - 1) sample moments. Throws InvalidArgument for n < 2 or
/// ragged columns. Constant columns are reported by zero_variance_columns().
CovStats cov_from_samples(const LinearData& rows);

/// Nonparametric bootstrap standard error of `estimator` (rows resampled
/// with replacement, `resamples` times, from Rng(seed)). Resamples on which
/// the estimator throws are skipped; throws UnidentifiableError if fewer
/// than half succeed.
double bootstrap_se(const LinearData& rows,
                    const std::function<double(const CovStats&)>& estimator,
                    std::size_t resamples = 1000, std::uint64_t seed = 1);

}  // namespace mbias
