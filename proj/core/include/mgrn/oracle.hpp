#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "mgrn/simgen.hpp"

namespace mgrn {

/// Conditional N(mean, variance) law of one parameter process at the next step.
struct CondGaussian {
  double mean = 0.0;
  double variance = 0.0;
};

inline constexpr double kProcessNoiseVariance = kArNoiseStd * kArNoiseStd;

/// Conditional mean of the AR process: ar5_step with zero noise.
double cond_mean_ar(const ArState& s);

/// E[exp(p) | F] = exp(mean + variance/2) for p ~ N(mean, variance).
double cond_mean_exp(const CondGaussian& p);

// Lognormal-weighted moments for omega ~ N(0,1) independent of u with
// log u ~ N(phi, s2), s2 < 1 (throws DomainError otherwise):
//   V1 = E[omega u^omega] = phi/(1-s2)^(3/2) exp(phi^2/(2-2 s2))
//   V2 = E[omega^2 u^omega] = (1+phi^2-s2)/(1-s2)^(5/2) exp(phi^2/(2-2 s2))
double v1_moment(const CondGaussian& log_u);
double v2_moment(const CondGaussian& log_u);

/// E[g(omega; u, v) | F] = (V1(u) + V1(1/v)) / A; log(1/v) has negated mean.
double cond_mean_g(const CondGaussian& log_u, const CondGaussian& log_v);

/// E[g(omega; u1, v1) g(omega; u2, v2) | F] with a shared omega. Product
/// arguments like u1*u2 are conditionally lognormal with summed means and
/// summed variances (independent AR innovations).
double cond_mean_gg(const CondGaussian& log_u1, const CondGaussian& log_v1,
                    const CondGaussian& log_u2, const CondGaussian& log_v2);

/// 5-step histories of all 14 parameter processes, aligned to step t-1, with
/// each process's constant term baked into its ArState.
struct OracleState {
  std::array<ArState, kParamProcesses> processes;
};

/// Zero histories for a ticker pair.
OracleState oracle_state(const SimConstants& c1, const SimConstants& c2);

/// Histories read from path rows t-5..t-1 (log-transformed where the process
/// is a log process). Requires t >= 5.
OracleState oracle_state_at(const SimPath& path, std::size_t t);

struct PredictorValue {
  double product;  // E[100 y1 y2 | F]
  double y1;       // E[y1 | F]
  double y2;       // E[y2 | F]
};

/// Closed-form best predictor of 100*y1(t)*y2(t) given the 5-step histories.
PredictorValue best_predictor(const OracleState& state);

struct SegmentMse {
  double mse = 0.0;
  std::size_t first_target = 0;
  std::size_t end_target = 0;  // one past the last target index
  std::size_t count = 0;
};

/// Mean squared error of the best predictor over target indices
/// [first_target, end_target).
SegmentMse min_mse(const SimPath& path, std::size_t first_target,
                   std::size_t end_target);

/// Default evaluation range: the chronological test segment used by training,
/// i.e. targets [floor(0.85*steps) + 5, steps).
SegmentMse min_mse(const SimPath& path);

/// Best-predictor value per path row; NaN for rows without a full history.
std::vector<double> oracle_predictions(const SimPath& path);

}  // namespace mgrn
