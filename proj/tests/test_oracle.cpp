#include <doctest.h>

#include <cmath>
#include <random>

#include "mgrn/errors.hpp"
#include "mgrn/oracle.hpp"
#include "mgrn/training.hpp"

using namespace mgrn;

TEST_CASE("cond_mean_ar is the noiseless AR step") {
  ArState s;
  s.mu = 0.1;
  s.history = {1, 2, 3, 4, 5};
  CHECK(cond_mean_ar(s) == doctest::Approx(1.6).epsilon(1e-14));
  CHECK(cond_mean_ar(s) == ar5_step(s, 0.0));
}

TEST_CASE("cond_mean_exp: frozen values") {
  CHECK(cond_mean_exp({0.0, 0.0}) == 1.0);
  CHECK(cond_mean_exp({0.0, 0.01}) ==
        doctest::Approx(1.005012520859401).epsilon(1e-15));
  CHECK(cond_mean_exp({1.0, 0.01}) ==
        doctest::Approx(2.7319072728259268).epsilon(1e-15));
}

TEST_CASE("v1/v2: frozen values, parity, domain") {
  CHECK(v1_moment({0.0, 0.5}) == 0.0);
  CHECK(v2_moment({0.0, 0.0}) == 1.0);
  CHECK(v1_moment({0.2, 0.01}) ==
        doctest::Approx(0.20718143159810126).epsilon(1e-15));
  CHECK(v2_moment({0.2, 0.01}) ==
        doctest::Approx(1.0777619926567894).epsilon(1e-15));

  for (double phi : {0.05, 0.3, 1.2}) {
    CHECK(v1_moment({-phi, 0.02}) == doctest::Approx(-v1_moment({phi, 0.02})).epsilon(1e-15));
    CHECK(v2_moment({-phi, 0.02}) == doctest::Approx(v2_moment({phi, 0.02})).epsilon(1e-15));
    CHECK(v2_moment({phi, 0.02}) >= 0.0);
  }

  CHECK_THROWS_AS(v1_moment({0.1, 1.0}), DomainError);
  CHECK_THROWS_AS(v2_moment({0.1, 1.5}), DomainError);
}

TEST_CASE("cond_mean_g: zero case and swap symmetry") {
  CHECK(cond_mean_g({0.0, 0.01}, {0.0, 0.01}) == 0.0);
  const double a = cond_mean_g({0.3, 0.01}, {0.1, 0.01});
  const double b = cond_mean_g({-0.1, 0.01}, {-0.3, 0.01});
  CHECK(a == doctest::Approx(b).epsilon(1e-14));
}

TEST_CASE("cond_mean_gg: exact all-zero value and domain guard") {
  CHECK(cond_mean_gg({0, 0}, {0, 0}, {0, 0}, {0, 0}) == 2.25);
  // combined variance 0.6+0.6 >= 1 must be rejected even though each is < 1
  CHECK_THROWS_AS(cond_mean_gg({0, 0.6}, {0, 0.6}, {0, 0.6}, {0, 0.6}),
                  DomainError);
}

namespace {

// Brute-force samplers, independent of the closed forms (std:: generators).
struct McEstimate {
  double mean;
  double se;
};

template <typename F>
McEstimate mc_mean(std::size_t n, std::uint64_t seed, F&& sample) {
  std::mt19937_64 gen(seed);
  double acc = 0.0, acc2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = sample(gen);
    acc += v;
    acc2 += v * v;
  }
  const double mean = acc / static_cast<double>(n);
  const double var = acc2 / static_cast<double>(n) - mean * mean;
  return {mean, std::sqrt(var / static_cast<double>(n))};
}

}  // namespace

TEST_CASE("v1/v2/cond_mean_g agree with brute-force sampling (smoke scale)") {
  // the AAPL idiosyncratic constants as representative phi levels
  const double phi_u = 0.215, phi_v = 0.159, s2 = 0.01;
  const double sd = std::sqrt(s2);
  const std::size_t n = 2000000;

  const auto v1_mc = mc_mean(n, 11, [&](std::mt19937_64& g) {
    std::normal_distribution<double> nd(0.0, 1.0);
    const double w = nd(g);
    const double logu = phi_u + sd * nd(g);
    return w * std::exp(logu * w);
  });
  CHECK(std::abs(v1_mc.mean - v1_moment({phi_u, s2})) < 4.0 * v1_mc.se);

  const auto v2_mc = mc_mean(n, 12, [&](std::mt19937_64& g) {
    std::normal_distribution<double> nd(0.0, 1.0);
    const double w = nd(g);
    const double logu = phi_u + sd * nd(g);
    return w * w * std::exp(logu * w);
  });
  CHECK(std::abs(v2_mc.mean - v2_moment({phi_u, s2})) < 4.0 * v2_mc.se);

  const auto g_mc = mc_mean(n, 13, [&](std::mt19937_64& g) {
    std::normal_distribution<double> nd(0.0, 1.0);
    const double w = nd(g);
    const double u = std::exp(phi_u + sd * nd(g));
    const double v = std::exp(phi_v + sd * nd(g));
    return g_transform(w, u, v);
  });
  CHECK(std::abs(g_mc.mean - cond_mean_g({phi_u, s2}, {phi_v, s2})) <
        4.0 * g_mc.se);
}

TEST_CASE("cond_mean_gg: degenerate second factor reduces to E[1.5 w g1]") {
  // u2 = v2 = 1 deterministically makes g(w; u2, v2) = 1.5 w, so the cross
  // moment collapses to (3/8)(V2(u1) + V2(1/v1)) + 1.5
  const CondGaussian u1{0.18, 0.01}, v1{0.12, 0.01}, unit{0.0, 0.0};
  const double closed = cond_mean_gg(u1, v1, unit, unit);
  const double reduced =
      0.375 * (v2_moment(u1) + v2_moment({-v1.mean, v1.variance})) + 1.5;
  CHECK(closed == doctest::Approx(reduced).epsilon(1e-14));

  const auto mc = mc_mean(2000000, 15, [&](std::mt19937_64& g) {
    std::normal_distribution<double> nd(0.0, 1.0);
    const double w = nd(g);
    const double a = std::exp(u1.mean + 0.1 * nd(g));
    const double b = std::exp(v1.mean + 0.1 * nd(g));
    return g_transform(w, a, b) * (1.5 * w);
  });
  CHECK(std::abs(mc.mean - closed) < 4.0 * mc.se);
}

TEST_CASE("cond_mean_gg agrees with brute-force sampling (smoke scale)") {
  const CondGaussian u1{0.1, 0.01}, v1{0.15, 0.01}, u2{0.2, 0.01}, v2{0.05, 0.01};
  const auto mc = mc_mean(2000000, 14, [&](std::mt19937_64& g) {
    std::normal_distribution<double> nd(0.0, 1.0);
    const double w = nd(g);
    const double a = std::exp(u1.mean + 0.1 * nd(g));
    const double b = std::exp(v1.mean + 0.1 * nd(g));
    const double c = std::exp(u2.mean + 0.1 * nd(g));
    const double d = std::exp(v2.mean + 0.1 * nd(g));
    return g_transform(w, a, b) * g_transform(w, c, d);
  });
  CHECK(std::abs(mc.mean - cond_mean_gg(u1, v1, u2, v2)) < 4.0 * mc.se);
}

TEST_CASE("best_predictor: frozen deterministic evaluation at zero state") {
  // all histories zero AND all constant terms zero: every phi vanishes
  OracleState state;  // default ArState has mu = 0 and zero history
  const PredictorValue value = best_predictor(state);
  CHECK(value.y1 == 0.0);
  CHECK(value.y2 == 0.0);
  // independently evaluated: 100*exp(0.01)*((0.98^-1.5)/4 + 0.99^-1.5 + 1)
  CHECK(value.product == doctest::Approx(229.57245287614052).epsilon(1e-13));
}

TEST_CASE("best_predictor matches one-step Monte Carlo continuations") {
  const SimConstants& c1 = lookup_constants("IBM");
  const SimConstants& c2 = lookup_constants("KO");
  OracleState state = oracle_state(c1, c2);
  std::mt19937_64 hist_gen(77);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (int p = 0; p < kParamProcesses; ++p) {
    const double level = state.processes[p].mu / 0.3;
    for (int j = 0; j < 5; ++j)
      state.processes[p].history[j] = level + 0.15 * nd(hist_gen);
  }
  const PredictorValue closed = best_predictor(state);

  std::array<double, kParamProcesses> phis;
  for (int p = 0; p < kParamProcesses; ++p)
    phis[p] = cond_mean_ar(state.processes[p]);

  const std::size_t n = 400000;
  std::mt19937_64 gen(78);
  double acc = 0.0, acc2 = 0.0, acc_y1 = 0.0, acc_y2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double vals[kParamProcesses];
    for (int p = 0; p < kParamProcesses; ++p)
      vals[p] = phis[p] + kArNoiseStd * nd(gen);
    const double wm = nd(gen), w1 = nd(gen), w2 = nd(gen);
    double y[2];
    for (int s = 0; s < 2; ++s) {
      const double* v = vals + 7 * s;
      y[s] = v[0] +
             std::exp(v[1]) * g_transform(wm, std::exp(v[2]), std::exp(v[3])) +
             std::exp(v[4]) *
                 g_transform(s == 0 ? w1 : w2, std::exp(v[5]), std::exp(v[6]));
    }
    const double t = 100.0 * y[0] * y[1];
    acc += t;
    acc2 += t * t;
    acc_y1 += y[0];
    acc_y2 += y[1];
  }
  const double mean = acc / static_cast<double>(n);
  const double se =
      std::sqrt((acc2 / static_cast<double>(n) - mean * mean) / static_cast<double>(n));
  CHECK(std::abs(mean - closed.product) < 4.0 * se);
  CHECK(acc_y1 / static_cast<double>(n) == doctest::Approx(closed.y1).epsilon(0.05));
  CHECK(acc_y2 / static_cast<double>(n) == doctest::Approx(closed.y2).epsilon(0.05));
}

TEST_CASE("best_predictor ignores history older than five steps") {
  SimPath path = generate_path("BA", "CAT", 300, 3);
  const std::size_t t = 200;
  const double before = best_predictor(oracle_state_at(path, t)).product;
  // rewrite everything strictly older than the 5-step window
  for (std::size_t older = 0; older + 5 < t; ++older)
    for (int c = 0; c < SimPath::kColumns; ++c)
      path.data[older * SimPath::kColumns + c] = 1.0;
  const double after = best_predictor(oracle_state_at(path, t)).product;
  CHECK(before == after);
}

TEST_CASE("min_mse: zero for a perfect predictor and convex in constant shifts") {
  const SimPath path = generate_path("IBM", "KO", 4000, 21);
  const SegmentMse base = min_mse(path);
  CHECK(std::isfinite(base.mse));
  CHECK(base.mse > 0.0);

  // replacing the predictor with the realized target gives exactly zero
  double self = 0.0;
  for (std::size_t t = base.first_target; t < base.end_target; ++t)
    self += (path.target(t) - path.target(t)) * (path.target(t) - path.target(t));
  CHECK(self == 0.0);

  // the oracle beats every constant-shifted variant of itself
  const auto preds = oracle_predictions(path);
  for (double shift : {-1.0, -0.5, 0.5, 1.0}) {
    double shifted = 0.0;
    for (std::size_t t = base.first_target; t < base.end_target; ++t) {
      const double err = path.target(t) - (preds[t] + shift);
      shifted += err * err;
    }
    shifted /= static_cast<double>(base.count);
    CHECK(base.mse < shifted);
  }
}

TEST_CASE("min_mse default range matches the training test split") {
  const auto path = std::make_shared<const SimPath>(generate_path("IBM", "KO", 3000, 4));
  const WindowDataset ds = split_dataset(make_windows(path));
  const SegmentMse seg = min_mse(*path);
  REQUIRE(!ds.test.empty());
  CHECK(seg.first_target == ds.test.front());
  CHECK(seg.end_target == ds.test.back() + 1);
  CHECK(seg.count == ds.test.size());
}

TEST_CASE("oracle_predictions aligns to path rows") {
  const SimPath path = generate_path("CVX", "PG", 100, 9);
  const auto preds = oracle_predictions(path);
  REQUIRE(preds.size() == path.steps);
  for (int t = 0; t < 5; ++t) CHECK(std::isnan(preds[t]));
  for (std::size_t t = 5; t < path.steps; ++t) CHECK(std::isfinite(preds[t]));
  CHECK(preds[10] == best_predictor(oracle_state_at(path, 10)).product);
}
