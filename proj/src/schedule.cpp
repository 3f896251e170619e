#include "bandit/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace bandit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

long long even_ceil(double x) {
  const double halves = std::ceil(x / 2.0);
  return 2LL * static_cast<long long>(halves);
}

// First bound term T^{1/p} * dim^{(1 - 2^{2-M})/p} with p = 2 - 2^{2-M};
// degenerate (infinite) at M = 1.
double bound_term_one(double T, double dim, int M) {
  if (M == 1) return kInf;
  const double s = std::pow(2.0, 2 - M);
  const double p = 2.0 - s;
  return std::pow(T, 1.0 / p) * std::pow(dim, (1.0 - s) / p);
}

// Second bound term T^{1/q} * dim^{(1 - 2^{1-M})/q} * h^{2^{1-M}/q} with
// q = 2 - 2^{1-M}.
double bound_term_two(double T, double dim, double h, int M) {
  const double s = std::pow(2.0, 1 - M);
  const double q = 2.0 - s;
  return std::pow(T, 1.0 / q) * std::pow(dim, (1.0 - s) / q) * std::pow(h, s / q);
}

void finalize_endpoints(BatchSchedule& schedule, long long T) {
  schedule.endpoints.clear();
  long long acc = 0;
  for (long long len : schedule.lengths) {
    acc = std::min(acc + len, T);
    schedule.endpoints.push_back(acc);
  }
  // The construction guarantees the lengths cover T; make the guarantee hard.
  if (schedule.endpoints.empty() || schedule.endpoints.back() < T) {
    if (schedule.lengths.empty()) {
      schedule.lengths.push_back(T);
      schedule.endpoints.push_back(T);
    } else {
      schedule.lengths.back() += T - schedule.endpoints.back();
      schedule.endpoints.back() = T;
    }
  }
}

}  // namespace

double effective_dimension(long long T, int d, int K, double delta, EffectiveDimKind kind) {
  require(T >= 1 && d >= 1 && K >= 1, "effective_dimension: T, d, K must be >= 1");
  require(delta > 0.0 && delta < 1.0, "effective_dimension: delta must be in (0,1)");
  const double Td = static_cast<double>(T);
  const double first_log = std::log(Td * d * K / delta);
  if (kind == EffectiveDimKind::SingleLog) return d * first_log;
  const double lambda = 10.0 / Td;
  return d * first_log * std::log(Td / (lambda * delta));
}

double case_one_gamma(double T, double d_tilde, int M) {
  const double s = std::pow(2.0, -M + 2);
  const double p = 2.0 - s;
  return std::pow(T, 1.0 / p) * std::pow(d_tilde, (1.0 - s) / p);
}

double case_two_gamma(double T, double d_tilde, int h, int M) {
  const double s = std::pow(2.0, -M + 1);
  const double q = 2.0 - s;
  return std::pow(T, 1.0 / q) * std::pow(d_tilde, (1.0 - s) / q) * std::pow(h, s / q);
}

BatchSchedule schedule_from_dtilde(long long T, double d_tilde, int h, int M) {
  require(T >= 1, "schedule_from_dtilde: T must be >= 1");
  require(d_tilde > 0.0, "schedule_from_dtilde: d_tilde must be positive");
  require(h >= 1, "schedule_from_dtilde: h must be >= 1");
  require(M >= 1, "schedule_from_dtilde: M must be >= 1");

  BatchSchedule schedule;
  schedule.d_tilde = d_tilde;
  schedule.h = h;

  if (M == 1) {
    schedule.case_tag = ScheduleCase::SingleBatch;
    schedule.gamma = static_cast<double>(T);
    schedule.lengths = {T};
    finalize_endpoints(schedule, T);
    return schedule;
  }
  if (static_cast<double>(T) < d_tilde) {
    schedule.case_tag = ScheduleCase::TrivialSmallT;
    schedule.gamma = static_cast<double>(T);
    schedule.lengths = {T};
    finalize_endpoints(schedule, T);
    return schedule;
  }

  const double Td = static_cast<double>(T);
  const double case_split = d_tilde * std::pow(h, 2.0 - std::pow(2.0, -M + 2));
  if (Td <= case_split) {
    schedule.case_tag = ScheduleCase::CaseI;
    schedule.gamma = case_one_gamma(Td, d_tilde, M);
    schedule.lengths.push_back(even_ceil(schedule.gamma));
    schedule.lengths.push_back(even_ceil(schedule.gamma));
  } else {
    schedule.case_tag = ScheduleCase::CaseII;
    schedule.gamma = case_two_gamma(Td, d_tilde, h, M);
    const long long t1 = even_ceil(schedule.gamma);
    schedule.lengths.push_back(t1);
    schedule.lengths.push_back(
        even_ceil(schedule.gamma * std::sqrt(static_cast<double>(t1) / (d_tilde * h))));
  }
  for (int k = 3; k <= M; ++k) {
    const double prev = static_cast<double>(schedule.lengths.back());
    schedule.lengths.push_back(even_ceil(schedule.gamma * std::sqrt(prev / d_tilde)));
  }
  finalize_endpoints(schedule, T);
  return schedule;
}

BatchSchedule compute_schedule(long long T, int d, int K, int M, double delta,
                               EffectiveDimKind kind) {
  require(d >= 1, "compute_schedule: d must be >= 1");
  require(T >= d, "compute_schedule: T must be >= d");
  require(K >= 1, "compute_schedule: K must be >= 1");
  require(M >= 1, "compute_schedule: M must be >= 1");
  require(delta > 0.0 && delta < 1.0, "compute_schedule: delta must be in (0,1)");
  BatchSchedule schedule =
      schedule_from_dtilde(T, effective_dimension(T, d, K, delta, kind), std::min(d, K), M);
  schedule.dim_kind = kind;
  return schedule;
}

double theorem1_bound(long long T, int d, int K, int M) {
  require(T >= d && d >= 1 && K >= 1 && M >= 1, "theorem1_bound: need T >= d >= 1, K, M >= 1");
  const double Td = static_cast<double>(T);
  if (M == 1) return 2.0 * Td;
  const double h = std::min(d, K);
  const double value = std::min(bound_term_one(Td, d, M), bound_term_two(Td, d, h, M));
  return std::min(value, 2.0 * Td);
}

double theorem1_bound_dressed(long long T, int d, int K, int M, double delta,
                              EffectiveDimKind kind) {
  require(T >= d && d >= 1 && K >= 1 && M >= 1,
          "theorem1_bound_dressed: need T >= d >= 1, K, M >= 1");
  const double Td = static_cast<double>(T);
  if (M == 1) return 2.0 * Td;
  const double dim = effective_dimension(T, d, K, delta, kind);
  const double h = std::min(d, K);
  const double value = std::min(bound_term_one(Td, dim, M), bound_term_two(Td, dim, h, M));
  return std::min(value, 2.0 * Td);
}

double theorem2_lower_bound(long long T, int d, int K, int M) {
  require(T >= d && d >= 1 && K >= 1 && M >= 1,
          "theorem2_lower_bound: need T >= d >= 1, K, M >= 1");
  const double Td = static_cast<double>(T);
  const double h = std::min(d, K);
  const double value = std::min(bound_term_one(Td, d, M), bound_term_two(Td, d, h, M)) / M;
  return std::min(value, Td);
}

double schedule_objective(const std::vector<double>& lengths, double d_tilde, int h) {
  require(!lengths.empty(), "schedule_objective: lengths must be non-empty");
  require(d_tilde > 0.0 && h >= 1, "schedule_objective: d_tilde > 0 and h >= 1 required");
  double obj = lengths[0];
  if (lengths.size() >= 2) {
    const double t1 = lengths[0];
    const double damp = t1 > 0.0 ? std::min(std::sqrt(d_tilde * h / t1), 1.0) : 1.0;
    obj = std::max(obj, lengths[1] * damp);
  }
  for (std::size_t i = 2; i < lengths.size(); ++i) {
    const double prev = lengths[i - 1];
    if (lengths[i] <= 0.0) continue;
    obj = std::max(obj, prev > 0.0 ? lengths[i] * std::sqrt(d_tilde / prev) : kInf);
  }
  return obj;
}

double schedule_objective_floor(long long T, double d_tilde, int h, int M) {
  require(T >= 1 && d_tilde > 0.0 && h >= 1 && M >= 1,
          "schedule_objective_floor: bad parameters");
  const double Td = static_cast<double>(T);
  const double value =
      std::min(bound_term_one(Td, d_tilde, M), bound_term_two(Td, d_tilde, h, M)) / M;
  return std::min(value, Td);
}

GridSearchResult brute_force_schedule_opt(long long T, double d_tilde, int h, int M,
                                          long long grid_points) {
  require(T >= 1, "brute_force_schedule_opt: T must be >= 1");
  require(d_tilde > 0.0, "brute_force_schedule_opt: d_tilde must be positive");
  require(h >= 1, "brute_force_schedule_opt: h must be >= 1");
  require(M >= 1 && M <= 5, "brute_force_schedule_opt: M must be in 1..5");
  require(grid_points >= 1 && grid_points <= 1000000,
          "brute_force_schedule_opt: grid_points must be in 1..1e6");

  GridSearchResult best;
  if (M == 1) {
    best.lengths = {static_cast<double>(T)};
    best.objective = static_cast<double>(T);
    return best;
  }

  const int free_coords = M - 1;
  const int g = std::max(
      2, static_cast<int>(std::floor(std::pow(static_cast<double>(grid_points),
                                              1.0 / free_coords))));
  require(std::pow(static_cast<double>(g), free_coords) <= 2.0 * grid_points + 16.0,
          "brute_force_schedule_opt: grid resolution overflow");

  std::vector<double> grid(static_cast<std::size_t>(g));
  for (int j = 0; j < g; ++j) {
    grid[static_cast<std::size_t>(j)] =
        std::pow(static_cast<double>(T), static_cast<double>(j) / (g - 1));
  }

  best.objective = kInf;
  std::vector<int> idx(static_cast<std::size_t>(free_coords), 0);
  std::vector<double> lengths(static_cast<std::size_t>(M), 0.0);
  while (true) {
    double partial = 0.0;
    for (int c = 0; c < free_coords; ++c) {
      lengths[static_cast<std::size_t>(c)] = grid[static_cast<std::size_t>(idx[static_cast<std::size_t>(c)])];
      partial += lengths[static_cast<std::size_t>(c)];
    }
    lengths[static_cast<std::size_t>(M - 1)] = std::max(0.0, static_cast<double>(T) - partial);
    const double obj = schedule_objective(lengths, d_tilde, h);
    if (obj < best.objective ||
        (obj == best.objective && (best.lengths.empty() || lengths < best.lengths))) {
      best.objective = obj;
      best.lengths = lengths;
    }

    int c = free_coords - 1;
    while (c >= 0 && ++idx[static_cast<std::size_t>(c)] == g) {
      idx[static_cast<std::size_t>(c)] = 0;
      --c;
    }
    if (c < 0) break;
  }
  if (!std::isfinite(best.objective)) {
    throw std::invalid_argument("brute_force_schedule_opt: no feasible grid point");
  }
  return best;
}

nlohmann::json schedule_to_json(const BatchSchedule& schedule) {
  nlohmann::json j;
  j["lengths"] = schedule.lengths;
  j["endpoints"] = schedule.endpoints;
  switch (schedule.case_tag) {
    case ScheduleCase::TrivialSmallT: j["case"] = "trivial_small_T"; break;
    case ScheduleCase::CaseI: j["case"] = "case_I"; break;
    case ScheduleCase::CaseII: j["case"] = "case_II"; break;
    case ScheduleCase::SingleBatch: j["case"] = "single_batch"; break;
  }
  j["gamma"] = schedule.gamma;
  j["d_tilde"] = schedule.d_tilde;
  j["h"] = schedule.h;
  j["effective_dim_kind"] =
      schedule.dim_kind == EffectiveDimKind::LogSquared ? "log_squared" : "single_log";
  return j;
}

}  // namespace bandit
