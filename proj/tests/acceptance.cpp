// Acceptance suite: nine end-to-end criteria, one PASS/FAIL line each.
// Exit status is non-zero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mbias/binary_restore.hpp"
#include "mbias/dsep_test.hpp"
#include "mbias/errors.hpp"
#include "mbias/linear_sem.hpp"
#include "mbias/matrix_restore.hpp"
#include "mbias/simulate.hpp"
#include "support/oracles.hpp"

using namespace mbias;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* title;
  double budget_seconds;  // 0: no runtime bound
  std::function<Outcome()> run;
};

template <typename... Args>
std::string fmt(const char* f, Args... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

MeanSe mean_se(const std::vector<double>& v) {
  MeanSe m;
  for (double x : v) m.mean += x;
  m.mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - m.mean) * (x - m.mean);
  m.se = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
  return m;
}

// 1. pushforward then restore recovers the table.
Outcome round_trip() {
  std::mt19937_64 g(101);
  std::uniform_int_distribution<std::size_t> card(1, 4);
  std::uniform_int_distribution<std::size_t> zcard(2, 4);
  double worst = 0.0;
  for (int rep = 0; rep < 1000; ++rep) {
    const std::size_t cx = card(g), cy = card(g), cz = zcard(g);
    const auto latent = oracle::random_table(g, cx, cy, cz, VKind::Z, 0.0);
    const auto m = oracle::to_error_matrix(oracle::random_stochastic(g, cz, 0.5));
    const auto r = restore_joint(push_forward(latent, m), m);
    for (std::size_t i = 0; i < latent.size(); ++i)
      worst = std::max(worst, std::abs(r.restored.cells()[i] - latent.cells()[i]));
  }
  return {worst < 1e-10, fmt("max cell error %.3g over 1000 pairs", worst)};
}

// 2. Closed-form modified IPW equals restore-then-adjust.
Outcome closed_form_equivalence() {
  std::mt19937_64 g(202);
  std::uniform_real_distribution<double> u(0.0, 0.45);
  double worst = 0.0;
  for (int rep = 0; rep < 1000; ++rep) {
    const BinaryErrorParams err{u(g), u(g)};
    const auto latent = oracle::random_table(g, 2, 2, 2, VKind::Z, 0.05);
    const auto obs = push_forward(latent, ErrorMatrix::from_binary(err));
    const auto bj = BinaryJoint::from_table(obs);
    const auto restored = restore_binary(bj, err).to_table(VKind::Z);
    for (std::size_t x = 0; x < 2; ++x) {
      const auto adj = adjust_for_confounder(restored, x);
      for (std::size_t y = 0; y < 2; ++y)
        worst = std::max(worst, std::abs(causal_effect_binary(bj, err, x, y) - adj[y]));
    }
  }
  return {worst < 1e-12, fmt("max |closed form - composition| %.3g over 1000 instances", worst)};
}

// 3. Every near-singular (eps, delta) is rejected.
Outcome singularity_gate() {
  BinaryJoint obs;
  obs.cells.fill(0.125);
  int errors = 0, total = 0;
  for (int i = 0; i < 10; ++i) {
    const double eps = 0.05 + 0.09 * i;
    for (int j = 0; j < 10; ++j) {
      const double offset = -9.5e-7 + 2.1e-7 * j;  // |1 - eps - delta| < 1e-6
      const BinaryErrorParams err{eps, 1.0 - eps - offset};
      ++total;
      int raised = 0;
      try {
        restore_binary(obs, err);
      } catch (const SingularError&) {
        ++raised;
      }
      try {
        causal_effect_binary(obs, err, 1, 1);
      } catch (const SingularError&) {
        ++raised;
      }
      try {
        weight_split(0.5, err);
      } catch (const SingularError&) {
        ++raised;
      }
      if (raised == 3) ++errors;
    }
  }
  return {errors == total && total == 100, fmt("%d of %d pairs raised SingularError", errors, total)};
}

// 4. Restoration removes the confounding bias that adjusting for W leaves.
Outcome bias_removal() {
  DiscreteModelSpec spec;
  spec.p_z = {0.5, 0.5};
  spec.p_x_given_z = {{0.85, 0.15}, {0.15, 0.85}};
  spec.p_y_given_xz = {{{0.8, 0.2}, {0.3, 0.7}}, {{0.6, 0.4}, {0.1, 0.9}}};
  const BinaryErrorParams err{0.2, 0.1};
  spec.error = ComponentErrorList{err};
  const double truth = spec.true_effect()[1][1];
  const auto m = spec.error_matrix();

  std::vector<double> corrected, naive;
  for (std::uint64_t r = 0; r < 200; ++r) {
    const auto sim = simulate_discrete(spec, 100000, 4000 + r);
    const auto obs = tabulate(sim.samples, 2, 2, 2);
    corrected.push_back(causal_effect_restored(obs, m, 1)[1]);
    naive.push_back(adjust_for_confounder(obs.relabeled(VKind::Z), 1)[1]);
  }
  const auto c = mean_se(corrected);
  const auto n = mean_se(naive);
  const double zc = std::abs(c.mean - truth) / c.se;
  const double zn = std::abs(n.mean - truth) / n.se;
  return {zc < 3.0 && zn > 5.0,
          fmt("truth %.4f; corrected %.2f SE off; naive %.1f SE off (bias %.4f)", truth, zc, zn,
              n.mean - truth)};
}

// 5. Linear identification from population and simulated moments.
Outcome linear_identification() {
  std::mt19937_64 g(505);
  double worst_pop = 0.0, worst_compose = 0.0, worst_z = 0.0;
  double sum_z = 0.0, sum_z2 = 0.0;  // calibration of the bootstrap SEs
  int within = 0;
  for (int rep = 0; rep < 50; ++rep) {
    const auto spec = oracle::random_spec(g, true);
    const double lambda = spec.c3 * spec.c3 * spec.var_z;
    const auto pop = oracle::sem_stats(spec);
    worst_pop = std::max(worst_pop, std::abs(c0_from_lambda(pop, lambda) - spec.c0));
    worst_compose =
        std::max(worst_compose, std::abs(c0_two_indicator(pop) -
                                         c0_from_lambda(pop, lambda_from_two_indicators(pop))));

    const auto rows = simulate_linear(spec, 100000, 5000 + rep).rows;
    auto est = [lambda](const CovStats& s) { return c0_from_lambda(s, lambda); };
    const double hat = est(cov_from_samples(rows));
    const double se = bootstrap_se(rows, est, 1000, 6000 + rep);
    const double signed_z = (hat - spec.c0) / se;
    const double z = std::abs(signed_z);
    sum_z += signed_z;
    sum_z2 += signed_z * signed_z;
    worst_z = std::max(worst_z, z);
    within += z < 3.0;
  }
  return {worst_pop < 1e-10 && worst_compose < 1e-12 && within == 50,
          fmt("population err %.3g; composition err %.3g; %d/50 within 3 SE (max %.2f SE; "
              "mean z %.2f, mean z^2 %.2f)",
              worst_pop, worst_compose, within, worst_z, sum_z / 50.0, sum_z2 / 50.0)};
}

// 6. With lambda = var(W) the estimator reduces to the partial regression.
Outcome noiseless_reduction() {
  std::mt19937_64 g(606);
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const auto s = oracle::sem_stats(oracle::random_spec(g, false));
    worst = std::max(worst, std::abs(c0_from_lambda(s, s.var_w) - c0_noiseless(s)));
  }
  return {worst < 1e-12, fmt("max difference %.3g over 100 instances", worst)};
}

// 7. Two-stage test: size under the null, power under a 5-SE alternative.
Outcome two_stage_size_power() {
  const std::size_t n = 5000;
  const int reps = 500;
  LinearSemSpec spec;
  spec.c0 = 0.0;
  spec.c1 = 0.9;
  spec.c2 = 0.8;
  spec.c3 = 1.0;
  spec.var_ew = 0.5;
  const double alpha = spec.c3 * spec.c3 * spec.var_z;

  int null_rejects = 0;
  for (int r = 0; r < reps; ++r)
    null_rejects += two_stage_test(simulate_linear(spec, n, 7000 + r).rows, alpha).reject;
  const double size = static_cast<double>(null_rejects) / reps;

  // Smallest c0 on a grid whose population a exceeds 5 population SEs.
  double ratio = 0.0;
  for (spec.c0 = 0.005; spec.c0 < 1.0; spec.c0 += 0.005) {
    const auto pop = oracle::two_stage_population(oracle::sem_stats(spec), alpha, n);
    ratio = pop.a / pop.se;
    if (ratio > 5.0) break;
  }
  int alt_rejects = 0;
  for (int r = 0; r < reps; ++r)
    alt_rejects += two_stage_test(simulate_linear(spec, n, 8000 + r).rows, alpha).reject;
  const double power = static_cast<double>(alt_rejects) / reps;
  return {std::abs(size - 0.05) <= 0.02 && power > 0.9,
          fmt("size %.3f; power %.3f at c0 = %.3f (population a/SE %.2f)", size, power, spec.c0,
              ratio)};
}

// 8. Restored propensity and stratified effect agree with the restored joint.
Outcome propensity_consistency() {
  std::mt19937_64 g(808);
  std::uniform_int_distribution<std::size_t> card(2, 4);
  double worst_l = 0.0, worst_s = 0.0;
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t cy = card(g), cz = card(g);
    const auto latent = oracle::random_table(g, 2, cy, cz, VKind::Z);
    const auto m = oracle::to_error_matrix(oracle::random_stochastic(g, cz));
    const auto obs = push_forward(latent, m);
    std::vector<double> lw(cz), pw(cz, 0.0);
    for (std::size_t w = 0; w < cz; ++w) {
      double p1 = 0.0;
      for (std::size_t x = 0; x < 2; ++x)
        for (std::size_t y = 0; y < cy; ++y) pw[w] += obs(x, y, w);
      for (std::size_t y = 0; y < cy; ++y) p1 += obs(1, y, w);
      lw[w] = p1 / pw[w];
    }
    const auto lz = restored_propensity(lw, pw, m);
    const auto restored = restore_joint(obs, m).restored;
    for (std::size_t z = 0; z < cz; ++z) {
      double pz = 0.0, p1 = 0.0;
      for (std::size_t x = 0; x < 2; ++x)
        for (std::size_t y = 0; y < cy; ++y) pz += restored(x, y, z);
      for (std::size_t y = 0; y < cy; ++y) p1 += restored(1, y, z);
      worst_l = std::max(worst_l, std::abs(lz[z] - p1 / pz));
    }
    const auto profile = make_propensity_profile(restored);
    for (std::size_t x = 0; x < 2; ++x) {
      const auto a = stratified_effect(restored, profile, x);
      const auto b = adjust_for_confounder(restored, x);
      for (std::size_t y = 0; y < cy; ++y) worst_s = std::max(worst_s, std::abs(a[y] - b[y]));
    }
  }
  return {worst_l < 1e-10 && worst_s < 1e-12,
          fmt("max propensity err %.3g; max stratified-vs-adjusted err %.3g", worst_l, worst_s)};
}

// 9. The first-order approximation error falls fourfold per halving.
Outcome approximation_order() {
  std::mt19937_64 g(909);
  const auto obs = BinaryJoint::from_table(oracle::random_table(g, 2, 2, 2, VKind::W, 0.3));
  double lo = 1e300, hi = 0.0, prev = 0.0;
  for (int k = 0; k <= 6; ++k) {
    const double e = 1e-3 / std::pow(2.0, k);
    const BinaryErrorParams err{e, e};
    const double d = std::abs(causal_effect_binary_infinitesimal(obs, err, 1, 1) -
                              causal_effect_binary(obs, err, 1, 1));
    if (k > 0) {
      lo = std::min(lo, prev / d);
      hi = std::max(hi, prev / d);
    }
    prev = d;
  }
  return {lo >= 3.5 && hi <= 4.5, fmt("error ratio per halving in [%.4f, %.4f]", lo, hi)};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "round-trip restoration", 5.0, round_trip},
      {2, "closed-form IPW equals restore+adjust", 1.0, closed_form_equivalence},
      {3, "singularity gate", 0.0, singularity_gate},
      {4, "bias removal at n=1e5", 120.0, bias_removal},
      {5, "linear identification", 120.0, linear_identification},
      {6, "noiseless reduction", 0.0, noiseless_reduction},
      {7, "two-stage test size and power", 180.0, two_stage_size_power},
      {8, "propensity consistency", 0.0, propensity_consistency},
      {9, "second-order approximation", 0.0, approximation_order},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool pass = o.pass;
    std::string timing = fmt("%.2fs", secs);
    if (c.budget_seconds > 0.0) {
      timing += fmt(" (budget %.0fs)", c.budget_seconds);
      if (secs > c.budget_seconds) pass = false;
    }
    std::printf("[%s] criterion %d: %s -- %s; %s\n", pass ? "PASS" : "FAIL", c.id, c.title,
                o.detail.c_str(), timing.c_str());
    std::fflush(stdout);
    failures += !pass;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
