#pragma once

#include <vector>

#include "json.hpp"

namespace bandit {

enum class ScheduleCase { TrivialSmallT, CaseI, CaseII, SingleBatch };

// Choice of effective dimension used by the schedule formulas: the default
// carries two logarithmic factors, the light variant a single one.
enum class EffectiveDimKind { LogSquared, SingleLog };

// A horizon split into batch lengths plus the running endpoints
// (cumulative sums capped at T, so the last endpoint is exactly T).
struct BatchSchedule {
  std::vector<long long> lengths;
  std::vector<long long> endpoints;
  ScheduleCase case_tag = ScheduleCase::SingleBatch;
  double gamma = 0.0;
  double d_tilde = 0.0;
  int h = 0;
  EffectiveDimKind dim_kind = EffectiveDimKind::LogSquared;
};

// d * ln(T*d*K/delta) * ln(T/(lambda*delta)) with lambda = 10/T for the
// two-log variant; d * ln(T*K*d/delta) for the single-log variant.
double effective_dimension(long long T, int d, int K, double delta, EffectiveDimKind kind);

// Geometric-growth batch lengths from the two-case construction, driven
// directly by the effective dimension and h; every length is rounded up to an
// even integer and endpoints are capped at T.
BatchSchedule schedule_from_dtilde(long long T, double d_tilde, int h, int M);

// Derives d_tilde and h = min(d, K) from the problem parameters, then builds
// the schedule. M = 1 gives the single batch [T]; T below d_tilde gives the
// trivial single-batch split.
BatchSchedule compute_schedule(long long T, int d, int K, int M, double delta,
                               EffectiveDimKind kind = EffectiveDimKind::LogSquared);

// gamma values of the two schedule cases, exposed for boundary diagnostics.
double case_one_gamma(double T, double d_tilde, int M);
double case_two_gamma(double T, double d_tilde, int h, int M);

// Regret upper-bound rate with constant 1 and no log factors, capped at 2T;
// M = 1 returns the cap.
double theorem1_bound(long long T, int d, int K, int M);

// Same shape with the effective dimension in place of d.
double theorem1_bound_dressed(long long T, int d, int K, int M, double delta,
                              EffectiveDimKind kind = EffectiveDimKind::LogSquared);

// Regret lower-bound rate: min of the two terms divided by M, capped at T.
double theorem2_lower_bound(long long T, int d, int K, int M);

// Max of the per-batch regret drivers for a given split:
// max{T_1, T_2 * min(sqrt(d_tilde*h/T_1), 1), max_{i>=3} T_i * sqrt(d_tilde/T_{i-1})}.
double schedule_objective(const std::vector<double>& lengths, double d_tilde, int h);

// Value no grid point can beat: min of the two bound terms (evaluated with
// d_tilde) divided by M, capped at T.
double schedule_objective_floor(long long T, double d_tilde, int h, int M);

struct GridSearchResult {
  std::vector<double> lengths;
  double objective = 0.0;
};

// Exhaustive search over geometric grids of T_1..T_{M-1} (the last length
// takes the remainder needed to reach total T). Ties resolve to the
// lexicographically smallest schedule. Desk scale only: M <= 5,
// grid_points <= 1e6.
GridSearchResult brute_force_schedule_opt(long long T, double d_tilde, int h, int M,
                                          long long grid_points);

nlohmann::json schedule_to_json(const BatchSchedule& schedule);

}  // namespace bandit
