#include "mgrn/oracle.hpp"

#include <cmath>
#include <limits>

#include "mgrn/errors.hpp"

namespace mgrn {

namespace {

// Latent process offsets within one series' block of seven.
enum : int { kAlpha = 0, kLogBeta, kLogUm, kLogVm, kLogGamma, kLogU, kLogV };

CondGaussian negated(const CondGaussian& p) { return {-p.mean, p.variance}; }

}  // namespace

double cond_mean_ar(const ArState& s) { return ar5_step(s, 0.0); }

double cond_mean_exp(const CondGaussian& p) {
  return std::exp(p.mean + 0.5 * p.variance);
}

namespace {
void check_v_domain(const CondGaussian& log_u, const char* what) {
  if (log_u.variance >= 1.0)
    throw DomainError(std::string(what) +
                      ": sigma^2 = " + std::to_string(log_u.variance) +
                      " >= 1, the defining integral diverges");
}
}  // namespace

double v1_moment(const CondGaussian& log_u) {
  check_v_domain(log_u, "v1_moment");
  const double phi = log_u.mean;
  const double one_minus = 1.0 - log_u.variance;
  return phi / (one_minus * std::sqrt(one_minus)) *
         std::exp(phi * phi / (2.0 * one_minus));
}

double v2_moment(const CondGaussian& log_u) {
  check_v_domain(log_u, "v2_moment");
  const double phi = log_u.mean;
  const double one_minus = 1.0 - log_u.variance;
  return (1.0 + phi * phi - log_u.variance) /
         (one_minus * one_minus * std::sqrt(one_minus)) *
         std::exp(phi * phi / (2.0 * one_minus));
}

double cond_mean_g(const CondGaussian& log_u, const CondGaussian& log_v) {
  return (v1_moment(log_u) + v1_moment(negated(log_v))) / kTailScaleA;
}

double cond_mean_gg(const CondGaussian& log_u1, const CondGaussian& log_v1,
                    const CondGaussian& log_u2, const CondGaussian& log_v2) {
  auto combined = [](const CondGaussian& a, const CondGaussian& b) {
    return CondGaussian{a.mean + b.mean, a.variance + b.variance};
  };
  const double pair_terms =
      v2_moment(combined(log_u1, log_u2)) +
      v2_moment(combined(log_u1, negated(log_v2))) +
      v2_moment(combined(log_u2, negated(log_v1))) +
      v2_moment(combined(negated(log_v1), negated(log_v2)));
  const double single_terms =
      v2_moment(log_u1) + v2_moment(log_u2) + v2_moment(negated(log_v1)) +
      v2_moment(negated(log_v2));
  return pair_terms / (kTailScaleA * kTailScaleA) + single_terms / kTailScaleA +
         1.0;
}

OracleState oracle_state(const SimConstants& c1, const SimConstants& c2) {
  OracleState state;
  const auto m1 = c1.mus();
  const auto m2 = c2.mus();
  for (int j = 0; j < 7; ++j) {
    state.processes[j].mu = m1[j];
    state.processes[7 + j].mu = m2[j];
  }
  return state;
}

OracleState oracle_state_at(const SimPath& path, std::size_t t) {
  detail::require(t >= 5 && t <= path.steps,
                  "oracle_state_at: needs a full 5-step history");
  OracleState state =
      oracle_state(lookup_constants(path.ticker1), lookup_constants(path.ticker2));
  for (int p = 0; p < kParamProcesses; ++p) {
    const int column = 2 + p;
    const bool log_process = (p % 7) != kAlpha;
    for (int j = 0; j < 5; ++j) {
      const double value = path.value(t - 1 - j, column);
      state.processes[p].history[j] = log_process ? std::log(value) : value;
    }
  }
  return state;
}

PredictorValue best_predictor(const OracleState& state) {
  auto phi = [&](int series, int which) {
    return cond_mean_ar(state.processes[7 * series + which]);
  };
  auto cg = [&](int series, int which) {
    return CondGaussian{phi(series, which), kProcessNoiseVariance};
  };

  double alpha[2], e_beta[2], e_gamma[2], eg_idio[2], eg_market[2];
  for (int s = 0; s < 2; ++s) {
    alpha[s] = phi(s, kAlpha);
    e_beta[s] = cond_mean_exp(cg(s, kLogBeta));
    e_gamma[s] = cond_mean_exp(cg(s, kLogGamma));
    eg_idio[s] = cond_mean_g(cg(s, kLogU), cg(s, kLogV));
    eg_market[s] = cond_mean_g(cg(s, kLogUm), cg(s, kLogVm));
  }
  const double e_gg =
      cond_mean_gg(cg(0, kLogUm), cg(0, kLogVm), cg(1, kLogUm), cg(1, kLogVm));

  const double ey1 = alpha[0] + e_beta[0] * eg_market[0] + e_gamma[0] * eg_idio[0];
  const double ey2 = alpha[1] + e_beta[1] * eg_market[1] + e_gamma[1] * eg_idio[1];
  const double product =
      100.0 * ((alpha[0] + e_gamma[0] * eg_idio[0]) * ey2 +
               e_beta[0] * eg_market[0] * (alpha[1] + e_gamma[1] * eg_idio[1]) +
               e_beta[0] * e_beta[1] * e_gg);
  return {product, ey1, ey2};
}

SegmentMse min_mse(const SimPath& path, std::size_t first_target,
                   std::size_t end_target) {
  detail::require(first_target >= 5, "min_mse: first target needs 5-step history");
  detail::require(end_target <= path.steps && first_target < end_target,
                  "min_mse: empty or out-of-range evaluation range");
  double acc = 0.0;
  for (std::size_t t = first_target; t < end_target; ++t) {
    const double pred = best_predictor(oracle_state_at(path, t)).product;
    const double err = path.target(t) - pred;
    acc += err * err;
  }
  const std::size_t count = end_target - first_target;
  return {acc / static_cast<double>(count), first_target, end_target, count};
}

SegmentMse min_mse(const SimPath& path) {
  // Matches the training split: test targets start at floor(0.85*steps) with
  // the first `lookback` (5) of them dropped.
  const auto test_begin =
      static_cast<std::size_t>(0.85 * static_cast<double>(path.steps));
  return min_mse(path, test_begin + 5, path.steps);
}

std::vector<double> oracle_predictions(const SimPath& path) {
  std::vector<double> pred(path.steps,
                           std::numeric_limits<double>::quiet_NaN());
  for (std::size_t t = 5; t < path.steps; ++t)
    pred[t] = best_predictor(oracle_state_at(path, t)).product;
  return pred;
}

}  // namespace mgrn
