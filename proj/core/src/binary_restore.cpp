#include "mbias/binary_restore.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "mbias/errors.hpp"
#include "mbias/rng.hpp"
#include "restore_common.hpp"

namespace mbias {

BinaryJoint BinaryJoint::from_table(const JointTable& table) {
  if (table.card_x() != 2 || table.card_y() != 2 || table.card_v() != 2) {
    throw InvalidArgument("binary routines need a 2x2x2 table");
  }
  BinaryJoint out;
  std::copy(table.cells().begin(), table.cells().end(), out.cells.begin());
  return out;
}

JointTable BinaryJoint::to_table(VKind kind) const {
  return JointTable(2, 2, 2, std::vector<double>(cells.begin(), cells.end()), kind);
}

BinaryJoint restore_binary(const BinaryJoint& observed,
                           const BinaryErrorParams& err,
                           const BinaryOptions& options) {
  check_binary_params(err, options.tol_sing);
  const double det = err.determinant();

  BinaryJoint out;
  std::array<double, 4> row_mass{};
  for (std::size_t x = 0; x < 2; ++x)
    for (std::size_t y = 0; y < 2; ++y) {
      const double w0 = observed(x, y, 0);
      const double w1 = observed(x, y, 1);
      out.cells[BinaryJoint::index(x, y, 0)] =
          ((1.0 - err.eps) * w0 - err.eps * w1) / det;
      out.cells[BinaryJoint::index(x, y, 1)] =
          (-err.delta * w0 + (1.0 - err.delta) * w1) / det;
      row_mass[x * 2 + y] = w0 + w1;
    }

  RestoreOptions settle{.condition_cap = 0.0,
                        .tol_incompat = options.tol_incompat,
                        .clip = options.clip};
  bool clipped = false;
  detail::settle_negative_mass(out.cells, 2, row_mass, settle, clipped);
  return out;
}

double weight_split(double p, const BinaryErrorParams& err, double tol_sing) {
  check_binary_params(err, tol_sing);
  const double lo = std::min(err.delta, 1.0 - err.eps);
  const double hi = std::max(err.delta, 1.0 - err.eps);
  if (!(p >= lo && p <= hi)) {
    std::ostringstream os;
    os << "P(w1|x,y) = " << p << " lies outside [" << lo << ", " << hi
       << "]; the data are incompatible with eps=" << err.eps
       << " delta=" << err.delta;
    throw IncompatibleModelError(os.str());
  }
  if (p == 1.0 - err.eps) return std::numeric_limits<double>::infinity();
  return (p - err.delta) / (1.0 - err.eps - p);
}

namespace {

// Observed quantities entering the modified IPW weights for one (x, y).
struct IpwTerms {
  double p_xyw[2];       // P(x, y, w)
  double p_w[2];         // P(w)
  double p_xw[2];        // P(x, w)
  double p_x_given_w[2]; // P(x | w)
  double p_w_given_xy[2];
  double p_x;
};

void require_nonvanishing(double value, const char* name) {
  if (!(std::abs(value) >= kBinaryDenominatorTol)) {
    std::ostringstream os;
    os << "denominator " << name << " = " << value << " vanishes";
    throw DegenerateDenominatorError(os.str());
  }
}

IpwTerms ipw_terms(const BinaryJoint& p, std::size_t x, std::size_t y) {
  if (x > 1 || y > 1) throw InvalidArgument("binary indices must be 0 or 1");
  IpwTerms t{};
  double total = 0.0;
  for (double c : p.cells) total += c;
  for (std::size_t w = 0; w < 2; ++w) {
    t.p_xyw[w] = p(x, y, w) / total;
    t.p_w[w] = (p(0, 0, w) + p(0, 1, w) + p(1, 0, w) + p(1, 1, w)) / total;
    t.p_xw[w] = (p(x, 0, w) + p(x, 1, w)) / total;
  }
  t.p_x = t.p_xw[0] + t.p_xw[1];
  const double p_xy = t.p_xyw[0] + t.p_xyw[1];

  require_nonvanishing(t.p_w[1], "P(w1)");
  require_nonvanishing(t.p_w[0], "P(w0)");
  for (std::size_t w = 0; w < 2; ++w) t.p_x_given_w[w] = t.p_xw[w] / t.p_w[w];
  require_nonvanishing(t.p_x_given_w[1], "P(x|w1)");
  require_nonvanishing(t.p_x_given_w[0], "P(x|w0)");
  require_nonvanishing(p_xy, "P(x,y)");
  for (std::size_t w = 0; w < 2; ++w) t.p_w_given_xy[w] = t.p_xyw[w] / p_xy;
  require_nonvanishing(t.p_w_given_xy[1], "P(w1|x,y)");
  require_nonvanishing(t.p_w_given_xy[0], "P(w0|x,y)");
  return t;
}

}  // namespace

double causal_effect_binary(const BinaryJoint& observed,
                            const BinaryErrorParams& err, std::size_t x,
                            std::size_t y, double tol_sing) {
  check_binary_params(err, tol_sing);
  const IpwTerms t = ipw_terms(observed, x, y);
  const double det = err.determinant();

  const double bracket1 = 1.0 - err.delta * t.p_x / t.p_xw[1];
  const double bracket0 = 1.0 - err.eps * t.p_x / t.p_xw[0];
  require_nonvanishing(bracket1, "1 - delta P(x)/P(x,w1)");
  require_nonvanishing(bracket0, "1 - eps P(x)/P(x,w0)");

  const double term1 = t.p_xyw[1] / t.p_x_given_w[1] *
                       (1.0 - err.delta / t.p_w_given_xy[1]) *
                       (1.0 - err.delta / t.p_w[1]) / (det * bracket1);
  const double term0 = t.p_xyw[0] / t.p_x_given_w[0] *
                       (1.0 - err.eps / t.p_w_given_xy[0]) *
                       (1.0 - err.eps / t.p_w[0]) / (det * bracket0);
  return term1 + term0;
}

double causal_effect_binary_infinitesimal(const BinaryJoint& observed,
                                          const BinaryErrorParams& err,
                                          std::size_t x, std::size_t y,
                                          double tol_sing) {
  check_binary_params(err, tol_sing);
  const IpwTerms t = ipw_terms(observed, x, y);
  const double common = 1.0 + err.eps + err.delta;

  const double mod1 =
      common - err.delta * (1.0 / t.p_w_given_xy[1] + 1.0 / t.p_w[1] -
                            t.p_x / t.p_xw[1]);
  const double mod0 =
      common - err.eps * (1.0 / t.p_w_given_xy[0] + 1.0 / t.p_w[0] -
                          t.p_x / t.p_xw[0]);
  return t.p_xyw[1] / t.p_x_given_w[1] * mod1 +
         t.p_xyw[0] / t.p_x_given_w[0] * mod0;
}

SynthesisResult synthesize_samples(std::span<const BinarySample> samples,
                                   std::span<const BinaryErrorParams> errs,
                                   std::uint64_t seed, double tol_sing) {
  const std::size_t k = errs.size();
  if (k == 0) throw InvalidArgument("at least one error component is required");
  for (const auto& e : errs) check_binary_params(e, tol_sing);

  // counts[g][i]: number of records in (x, y) group g with w_i = 1.
  std::array<std::size_t, 4> group_size{};
  std::vector<std::array<std::size_t, 4>> ones(k);
  for (std::size_t r = 0; r < samples.size(); ++r) {
    const auto& s = samples[r];
    if (s.x > 1 || s.y > 1) throw InvalidArgument("x and y must be 0 or 1");
    if (s.v.size() != k) {
      std::ostringstream os;
      os << "record " << r << " has " << s.v.size() << " proxy components, expected " << k;
      throw InvalidArgument(os.str());
    }
    const std::size_t g = s.x * 2u + s.y;
    ++group_size[g];
    for (std::size_t i = 0; i < k; ++i) {
      if (s.v[i] > 1) throw InvalidArgument("proxy components must be 0 or 1");
      ones[i][g] += s.v[i];
    }
  }

  SynthesisResult result;
  // Per group and component: P(z=1 | w=1) and P(z=1 | w=0).
  std::vector<std::array<std::array<double, 2>, 4>> keep(k);
  for (std::size_t g = 0; g < 4; ++g) {
    if (group_size[g] == 0) {
      std::ostringstream os;
      os << "no records with x=" << g / 2 << ", y=" << g % 2 << "; group passed through";
      result.warnings.push_back(os.str());
      continue;
    }
    for (std::size_t i = 0; i < k; ++i) {
      const double p = static_cast<double>(ones[i][g]) / static_cast<double>(group_size[g]);
      double ratio = 0.0;
      try {
        ratio = weight_split(p, errs[i], tol_sing);
      } catch (const IncompatibleModelError& e) {
        std::ostringstream os;
        os << "component " << i << " (x=" << g / 2 << ", y=" << g % 2 << "): " << e.what();
        throw IncompatibleModelError(os.str());
      }
      const double q = std::isinf(ratio) ? 1.0 : ratio / (1.0 + ratio);
      // Maximal coupling of z with w: P(z=1) = q overall.
      keep[i][g][1] = p > 0.0 ? std::min(1.0, q / p) : 0.0;
      keep[i][g][0] = p < 1.0 ? std::max(0.0, q - p) / (1.0 - p) : 0.0;
    }
  }

  const Rng root(seed);
  result.samples.reserve(samples.size());
  for (std::size_t r = 0; r < samples.size(); ++r) {
    const auto& s = samples[r];
    const std::size_t g = s.x * 2u + s.y;
    Rng stream = root.split(r);
    BinarySample out{s.x, s.y, std::vector<std::uint8_t>(k)};
    for (std::size_t i = 0; i < k; ++i) {
      const double prob_one = keep[i][g][s.v[i]];
      out.v[i] = stream.uniform() < prob_one ? 1 : 0;
    }
    result.samples.push_back(std::move(out));
  }
  return result;
}

JointTable tabulate(std::span<const BinarySample> samples, std::size_t k,
                    VKind kind, double smoothing) {
  if (k == 0 || k > 20) throw InvalidArgument("component count must be in [1, 20]");
  const std::size_t cv = std::size_t{1} << k;
  std::vector<double> counts(4 * cv, 0.0);
  for (const auto& s : samples) {
    if (s.v.size() != k) throw InvalidArgument("record has the wrong number of components");
    std::size_t v = 0;
    for (std::uint8_t bit : s.v) v = (v << 1) | (bit & 1u);
    counts[(s.x * 2u + s.y) * cv + v] += 1.0;
  }
  return JointTable::from_counts(2, 2, cv, counts, kind, smoothing);
}

}  // namespace mbias
