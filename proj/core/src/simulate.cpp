#include "mbias/simulate.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "mbias/errors.hpp"
#include "mbias/rng.hpp"

namespace mbias {
namespace {

void require_distribution(std::span<const double> p, const std::string& what) {
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0)) throw InvalidArgument(what + " has a negative entry");
    sum += v;
  }
  if (std::abs(sum - 1.0) > kInternalSumTolerance) {
    std::ostringstream os;
    os.precision(17);
    os << what << " sums to " << sum;
    throw InvalidArgument(os.str());
  }
}

std::size_t draw_categorical(Rng& rng, std::span<const double> p) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    acc += p[i];
    if (u < acc) return i;
  }
  // u landed in the round-off gap above the last partial sum.
  for (std::size_t i = p.size(); i-- > 0;)
    if (p[i] > 0.0) return i;
  return p.size() - 1;
}

}  // namespace

std::size_t DiscreteModelSpec::card_x() const {
  return p_x_given_z.empty() ? 0 : p_x_given_z.front().size();
}

std::size_t DiscreteModelSpec::card_y() const {
  return p_y_given_xz.empty() || p_y_given_xz.front().empty()
             ? 0
             : p_y_given_xz.front().front().size();
}

void DiscreteModelSpec::validate() const {
  const std::size_t cz = card_z();
  const std::size_t cx = card_x();
  const std::size_t cy = card_y();
  if (cz == 0 || cx == 0 || cy == 0) throw InvalidArgument("model has an empty axis");
  require_distribution(p_z, "P(z)");
  if (p_x_given_z.size() != cz) throw InvalidArgument("P(x|z) needs one row per z");
  for (std::size_t z = 0; z < cz; ++z) {
    if (p_x_given_z[z].size() != cx) throw InvalidArgument("ragged P(x|z)");
    require_distribution(p_x_given_z[z], "P(x|z=" + std::to_string(z) + ")");
  }
  if (p_y_given_xz.size() != cx) throw InvalidArgument("P(y|x,z) needs one block per x");
  for (std::size_t x = 0; x < cx; ++x) {
    if (p_y_given_xz[x].size() != cz) throw InvalidArgument("P(y|x,z) needs one row per z");
    for (std::size_t z = 0; z < cz; ++z) {
      if (p_y_given_xz[x][z].size() != cy) throw InvalidArgument("ragged P(y|x,z)");
      require_distribution(p_y_given_xz[x][z],
                           "P(y|x=" + std::to_string(x) + ",z=" + std::to_string(z) + ")");
    }
  }
  if (const auto* list = std::get_if<ComponentErrorList>(&error)) {
    if (list->empty() || list->size() > 20 ||
        (std::size_t{1} << list->size()) != cz) {
      throw InvalidArgument("component error list needs |Z| = 2^K");
    }
    for (const auto& e : *list) {
      if (!(e.eps >= 0.0 && e.eps < 1.0 && e.delta >= 0.0 && e.delta < 1.0)) {
        throw InvalidArgument("binary error parameters must lie in [0, 1)");
      }
    }
  } else if (std::get<ErrorMatrix>(error).n_z() != cz) {
    throw InvalidArgument("error matrix n_z does not match |Z|");
  }
}

ErrorMatrix DiscreteModelSpec::error_matrix() const {
  if (const auto* list = std::get_if<ComponentErrorList>(&error)) {
    std::vector<ErrorMatrix> factors;
    factors.reserve(list->size());
    for (const auto& e : *list) factors.push_back(ErrorMatrix::from_binary(e));
    if (factors.size() == 1) return factors.front();
    return ErrorMatrix::factored(std::move(factors));
  }
  return std::get<ErrorMatrix>(error);
}

JointTable DiscreteModelSpec::latent_joint() const {
  validate();
  const std::size_t cx = card_x();
  const std::size_t cy = card_y();
  const std::size_t cz = card_z();
  std::vector<double> cells(cx * cy * cz);
  for (std::size_t x = 0; x < cx; ++x)
    for (std::size_t y = 0; y < cy; ++y)
      for (std::size_t z = 0; z < cz; ++z)
        cells[(x * cy + y) * cz + z] =
            p_z[z] * p_x_given_z[z][x] * p_y_given_xz[x][z][y];
  return JointTable(cx, cy, cz, std::move(cells), VKind::Z);
}

JointTable DiscreteModelSpec::observed_joint() const {
  return push_forward(latent_joint(), error_matrix());
}

std::vector<std::vector<double>> DiscreteModelSpec::true_effect() const {
  validate();
  std::vector<std::vector<double>> out(card_x(), std::vector<double>(card_y(), 0.0));
  for (std::size_t x = 0; x < card_x(); ++x)
    for (std::size_t z = 0; z < card_z(); ++z)
      for (std::size_t y = 0; y < card_y(); ++y)
        out[x][y] += p_y_given_xz[x][z][y] * p_z[z];
  return out;
}

DiscreteSimulation simulate_discrete(const DiscreteModelSpec& spec, std::size_t n,
                                     std::uint64_t seed) {
  spec.validate();
  const ErrorMatrix m = spec.error_matrix();
  std::vector<ErrorMatrix> factors =
      m.is_factored() ? m.factors() : std::vector<ErrorMatrix>{m};

  // Columns of every factor, for categorical draws of each proxy digit.
  std::vector<std::vector<std::vector<double>>> columns(factors.size());
  for (std::size_t f = 0; f < factors.size(); ++f) {
    columns[f].resize(factors[f].n_z());
    for (std::size_t z = 0; z < factors[f].n_z(); ++z)
      for (std::size_t w = 0; w < factors[f].n_w(); ++w)
        columns[f][z].push_back(factors[f](w, z));
  }

  DiscreteSimulation sim;
  sim.ground_truth = spec.true_effect();
  sim.samples.reserve(n);
  Rng rng(seed);
  std::vector<std::size_t> digits(factors.size());
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t z = draw_categorical(rng, spec.p_z);
    const std::size_t x = draw_categorical(rng, spec.p_x_given_z[z]);
    const std::size_t y = draw_categorical(rng, spec.p_y_given_xz[x][z]);
    std::size_t rz = z;
    for (std::size_t f = factors.size(); f-- > 0;) {
      digits[f] = rz % factors[f].n_z();
      rz /= factors[f].n_z();
    }
    std::size_t w = 0;
    for (std::size_t f = 0; f < factors.size(); ++f) {
      w = w * factors[f].n_w() + draw_categorical(rng, columns[f][digits[f]]);
    }
    sim.samples.push_back({x, y, w});
  }
  return sim;
}

JointTable tabulate(std::span<const DiscreteSample> samples, std::size_t card_x,
                    std::size_t card_y, std::size_t card_w, double smoothing) {
  std::vector<double> counts(card_x * card_y * card_w, 0.0);
  for (const auto& s : samples) {
    if (s.x >= card_x || s.y >= card_y || s.w >= card_w) {
      throw InvalidArgument("record index exceeds the declared cardinality");
    }
    counts[(s.x * card_y + s.y) * card_w + s.w] += 1.0;
  }
  return JointTable::from_counts(card_x, card_y, card_w, counts, VKind::W, smoothing);
}

CovStats population_cov(const LinearSemSpec& spec) {
  spec.validate();
  const double vz = spec.var_z;
  CovStats s;
  s.var_x = spec.c1 * spec.c1 * vz + spec.var_ex;
  s.var_w = spec.c3 * spec.c3 * vz + spec.var_ew;
  s.cov_xw = spec.c1 * spec.c3 * vz;
  // Every Z path into Y: direct (c2) and through X (c0 c1).
  const double zy = spec.c2 + spec.c0 * spec.c1;
  s.cov_xy = spec.c0 * s.var_x + spec.c1 * spec.c2 * vz;
  s.cov_yw = spec.c3 * vz * zy;
  s.var_y = spec.c0 * spec.c0 * spec.var_ex + zy * zy * vz + spec.var_ey;
  if (spec.has_v()) {
    const double cv = *spec.c_v;
    s.var_v = cv * cv * vz + *spec.var_ev;
    s.cov_xv = spec.c1 * cv * vz;
    s.cov_wv = spec.c3 * cv * vz;
    s.cov_yv = cv * vz * zy;
  }
  s.n = 0;
  return s;
}

LinearSimulation simulate_linear(const LinearSemSpec& spec, std::size_t n,
                                 std::uint64_t seed) {
  LinearSimulation sim;
  sim.population = population_cov(spec);
  auto& r = sim.rows;
  r.x.reserve(n);
  r.y.reserve(n);
  r.w.reserve(n);
  if (spec.has_v()) r.v.reserve(n);

  const double sz = std::sqrt(spec.var_z);
  const double sx = std::sqrt(spec.var_ex);
  const double sy = std::sqrt(spec.var_ey);
  const double sw = std::sqrt(spec.var_ew);
  const double sv = spec.has_v() ? std::sqrt(*spec.var_ev) : 0.0;
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const double z = sz * rng.normal();
    const double x = spec.c1 * z + sx * rng.normal();
    const double y = spec.c0 * x + spec.c2 * z + sy * rng.normal();
    const double w = spec.c3 * z + sw * rng.normal();
    r.x.push_back(x);
    r.y.push_back(y);
    r.w.push_back(w);
    if (spec.has_v()) r.v.push_back(*spec.c_v * z + sv * rng.normal());
  }
  return sim;
}

}  // namespace mbias
