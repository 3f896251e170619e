#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "bandit/agent.hpp"
#include "bandit/environment.hpp"
#include "json.hpp"

namespace bandit {

// One experiment: a single instance evaluated over a (T, M) grid with
// independent replications per cell, all derived from one master seed.
struct ExperimentConfig {
  BanditInstance instance;
  std::vector<long long> T_grid;
  std::vector<int> M_grid;
  int replications = 1;
  std::uint64_t master_seed = 1;
  std::string out_dir = ".";
  AgentOverrides overrides;
  bool audit_invariants = false;
};

// Parses the single-document JSON config. Unknown keys anywhere in the
// document are fatal; the instance comes either inline ("instance") or from
// a named family ("family": {"name": ..., parameters}).
ExperimentConfig parse_experiment_config(const nlohmann::json& j);

// One CSV row: the final-round snapshot of one run. A grid of C cells with
// R replications therefore produces exactly C*R rows.
struct RunRow {
  int run_id = 0;
  long long T = 0;
  int M = 0;
  int d = 0;
  int K = 0;
  std::uint64_t seed = 0;
  int batch = 0;          // last batch that acted
  long long round = 0;    // rounds executed (= T)
  double regret = 0.0;    // final round's instantaneous regret
  double cum_regret = 0.0;
  int survivors = 0;      // candidate-set size at the final round
  int policy_epoch = 0;   // mixture epoch drawn at the final round (-1 on design rounds)
};

inline constexpr const char* kCsvHeader =
    "run_id,T,M,d,K,seed,batch,round,regret,cum_regret,survivors,policy_epoch";

std::string rows_to_csv(const std::vector<RunRow>& rows);

struct ExperimentReport {
  std::vector<RunRow> rows;
  nlohmann::json summary;
  std::string csv_path;      // empty when files were not written
  std::string summary_path;
};

// Runs the full grid. Cells iterate T-major, replications within a cell;
// run seeds depend only on (master_seed, cell index, replication index), so
// reports are identical across thread counts. threads <= 0 picks the
// hardware concurrency. With write_files, emits runs.csv and summary.json
// under out_dir.
ExperimentReport run_experiment(const ExperimentConfig& config, int threads = 1,
                                bool write_files = true);

struct ScalingFit {
  std::vector<std::pair<double, double>> points;  // (ln T, ln mean regret)
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;        // RMS of the fit residuals
  double predicted_slope = 0.0; // caller-supplied reference exponent
};

// Ordinary least squares on (ln T, ln mean regret) points. Requires at
// least three points with pairwise-distinct abscissae.
ScalingFit fit_scaling_exponent(const std::vector<std::pair<double, double>>& points,
                                double predicted_slope = 0.0);

// Reference regret exponents: 1/(2 - 2^{-M+2}) below the case threshold,
// 1/(2 - 2^{-M+1}) above it.
double predicted_exponent(int M, bool beyond_threshold);

// Exact per-round probability that batch-1 optimal-design play lands on each
// designated arm of a duplicated-arm instance (indexed by designated offset
// 0..d/2-1), computed by enumerating the finite support and the design law.
std::vector<double> group2_visitation_rates(const BanditInstance& instance);

// Arms h/2+1 .. h/2+d/2 whose visitation rate is at most 2/((h/2+1)(d/2)),
// padded with the lowest-rate arms up to ceil(d/4) if the threshold alone
// selects fewer. Returns 1-indexed arm ids, ascending.
std::vector<int> low_visitation_designated_arms(const std::vector<double>& rates, int d, int h);

using AgentRunner =
    std::function<RegretTrace(const BanditInstance& instance, std::uint64_t seed)>;

// Picks the sign assignment (+eps / -eps on the designated arms) that is
// empirically worst for the given agent: computes the batch-1 visitation
// rates, takes the low-visitation set, and evaluates flipping that set's
// signs both ways with probe_budget paired probe runs (each probe runs both
// candidates on a shared seed), returning the assignment with the larger
// estimated regret (ties keep +eps). The per-candidate mean cumulative
// regrets are reported through the optional out-params.
std::map<int, int> adversarial_group2_signs(const AgentRunner& runner, int d, int h, double eps,
                                            int probe_budget, std::uint64_t seed,
                                            double* mean_regret_plus = nullptr,
                                            double* mean_regret_minus = nullptr);

}  // namespace bandit
