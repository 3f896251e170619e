#include <cmath>
#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "bandit/concentration.hpp"
#include "bandit/design.hpp"
#include "bandit/errors.hpp"
#include "bandit/harness.hpp"
#include "bandit/schedule.hpp"
#include "json.hpp"

namespace {

using nlohmann::json;

bandit::EffectiveDimKind parse_dim_kind(const std::string& name) {
  if (name == "log_squared") return bandit::EffectiveDimKind::LogSquared;
  if (name == "single_log") return bandit::EffectiveDimKind::SingleLog;
  throw bandit::config_error("--dim-kind must be log_squared or single_log, got \"" + name +
                             "\"");
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw bandit::config_error("cannot open config file \"" + path + "\"");
  json j;
  in >> j;
  return j;
}

int cmd_run(const std::string& config_path, bool seed_given, std::uint64_t seed,
            const std::string& out_dir, int threads) {
  bandit::ExperimentConfig config = bandit::parse_experiment_config(load_json_file(config_path));
  if (seed_given) config.master_seed = seed;
  if (!out_dir.empty()) config.out_dir = out_dir;
  const bandit::ExperimentReport report = bandit::run_experiment(config, threads, true);
  json out = report.summary;
  out["csv_path"] = report.csv_path;
  out["summary_path"] = report.summary_path;
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_schedule(long long T, int d, int K, int M, double delta, const std::string& dim_kind) {
  const bandit::EffectiveDimKind kind = parse_dim_kind(dim_kind);
  if (delta <= 0.0) {
    const double Td = static_cast<double>(T);
    delta = 1.0 / (Td * Td * Td);
  }
  const bandit::BatchSchedule schedule = bandit::compute_schedule(T, d, K, M, delta, kind);
  json out = bandit::schedule_to_json(schedule);
  out["theorem1_bound"] = bandit::theorem1_bound(T, d, K, M);
  out["theorem1_bound_dressed"] = bandit::theorem1_bound_dressed(T, d, K, M, delta, kind);
  out["theorem2_lower_bound"] = bandit::theorem2_lower_bound(T, d, K, M);
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_conc(const std::string& family, int d, int n, double eps, double delta, double p,
             long long trials, std::uint64_t seed) {
  bandit::MartingaleSpec spec;
  if (family == "fixed") spec.family = bandit::MartingaleFamily::FixedBoundProjectors;
  else if (family == "growing") spec.family = bandit::MartingaleFamily::GrowingBoundRankOne;
  else if (family == "replay") spec.family = bandit::MartingaleFamily::ClippedBanditReplay;
  else if (family == "deterministic") spec.family = bandit::MartingaleFamily::Deterministic;
  else
    throw bandit::config_error(
        "--family must be fixed, growing, replay, or deterministic, got \"" + family + "\"");
  spec.d = d;
  spec.n = n;
  spec.epsilon = eps;
  spec.delta = delta;
  spec.bernoulli_p = p;
  bandit::Rng rng(seed);
  const bandit::ViolationReport report =
      bandit::simulate_dynamic_concentration(spec, trials, rng);
  std::cout << bandit::violation_report_to_json(report).dump(2) << "\n";
  return 0;
}

int cmd_design_check(int d, int K, int n_sets, std::uint64_t seed) {
  double worst_ratio = 0.0;
  long long worst_set = -1;
  for (long long s = 0; s < n_sets; ++s) {
    bandit::Rng rng(bandit::derive_seed(seed, static_cast<std::uint64_t>(s)));
    const int dim = d > 0 ? d : 1 + static_cast<int>(rng.uniform() * 16.0);
    const int arms = K > 0 ? K : 1 + static_cast<int>(rng.uniform() * 64.0);
    std::vector<bandit::Vector> X;
    X.reserve(static_cast<std::size_t>(arms));
    for (int i = 0; i < arms; ++i) {
      X.push_back(rng.uniform(0.25, 1.0) * rng.unit_sphere(dim));
    }
    const bandit::DesignWeights design = bandit::g_optimal_design(X);
    const double criterion = bandit::design_criterion(X, design.weights, design.epsilon_reg);
    const double ratio = criterion / (2.0 * dim);
    if (ratio > worst_ratio) {
      worst_ratio = ratio;
      worst_set = s;
    }
  }
  json out;
  out["sets"] = n_sets;
  out["worst_criterion_over_2d"] = worst_ratio;
  out["worst_set"] = worst_set;
  out["all_within_bound"] = worst_ratio <= 1.0;
  std::cout << out.dump(2) << "\n";
  return worst_ratio <= 1.0 ? 0 : 2;
}

int cmd_lb_verify(long long T, double d_tilde, int h, int M, long long grid_points) {
  const bandit::GridSearchResult brute =
      bandit::brute_force_schedule_opt(T, d_tilde, h, M, grid_points);
  const double floor = bandit::schedule_objective_floor(T, d_tilde, h, M);
  const bandit::BatchSchedule schedule = bandit::schedule_from_dtilde(T, d_tilde, h, M);
  std::vector<double> lengths(schedule.lengths.begin(), schedule.lengths.end());
  const double schedule_value = bandit::schedule_objective(lengths, d_tilde, h);
  const bool floor_holds = brute.objective >= floor * (1.0 - 1e-9);

  json out;
  out["brute_objective"] = brute.objective;
  out["brute_lengths"] = brute.lengths;
  out["objective_floor"] = floor;
  out["floor_holds"] = floor_holds;
  out["schedule_lengths"] = schedule.lengths;
  out["schedule_objective"] = schedule_value;
  out["schedule_over_brute"] = brute.objective > 0.0 ? schedule_value / brute.objective : 0.0;
  std::cout << out.dump(2) << "\n";
  return floor_holds ? 0 : 2;
}

int cmd_fit(const std::string& csv_path, int M, const std::string& regime) {
  std::ifstream in(csv_path);
  if (!in) throw bandit::config_error("cannot open CSV file \"" + csv_path + "\"");
  std::string line;
  if (!std::getline(in, line) || line != bandit::kCsvHeader) {
    throw bandit::config_error("unrecognized CSV header in \"" + csv_path + "\"");
  }
  std::map<long long, std::pair<double, long long>> by_T;  // T -> (sum regret, count)
  std::vector<long long> t_order;
  int seen_M = 0;
  bool mixed_M = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 12)
      throw bandit::config_error("malformed CSV row \"" + line + "\"");
    const long long T = std::stoll(fields[1]);
    const int row_M = std::stoi(fields[2]);
    if (M > 0 && row_M != M) continue;
    if (seen_M == 0) seen_M = row_M;
    else if (seen_M != row_M) mixed_M = true;
    const double cum = std::stod(fields[9]);
    auto [it, fresh] = by_T.try_emplace(T, 0.0, 0);
    if (fresh) t_order.push_back(T);
    it->second.first += cum;
    it->second.second += 1;
  }
  if (mixed_M)
    throw bandit::config_error("CSV mixes batch budgets; select one with --M");
  if (by_T.empty()) throw bandit::config_error("no usable rows in \"" + csv_path + "\"");

  std::vector<std::pair<double, double>> points;
  json point_list = json::array();
  for (long long T : t_order) {
    const auto& [sum, count] = by_T.at(T);
    const double mean = sum / static_cast<double>(count);
    if (mean <= 0.0)
      throw bandit::config_error("mean regret at T=" + std::to_string(T) +
                                 " is not positive; cannot fit a log-log slope");
    points.emplace_back(std::log(static_cast<double>(T)), std::log(mean));
    point_list.push_back({{"T", T}, {"mean_cum_regret", mean}, {"runs", count}});
  }
  const int fit_M = M > 0 ? M : seen_M;
  const bool beyond = regime != "case1";
  const double predicted = fit_M > 0 ? bandit::predicted_exponent(fit_M, beyond) : 0.0;
  const bandit::ScalingFit fit = bandit::fit_scaling_exponent(points, predicted);

  json out;
  out["slope"] = fit.slope;
  out["intercept"] = fit.intercept;
  out["residual"] = fit.residual;
  out["predicted_slope"] = fit.predicted_slope;
  out["M"] = fit_M;
  out["regime"] = beyond ? "case2" : "case1";
  out["points"] = std::move(point_list);
  std::cout << out.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"batch linear contextual bandit laboratory"};
  app.require_subcommand(1);

  // run
  auto* run_cmd = app.add_subcommand("run", "run an experiment grid from a JSON config");
  std::string run_config;
  std::uint64_t run_seed = 0;
  std::string run_out;
  int run_threads = 0;
  run_cmd->add_option("--config", run_config, "experiment config JSON path")->required();
  run_cmd->add_option("--seed", run_seed, "override the master seed");
  run_cmd->add_option("--out", run_out, "override the output directory");
  run_cmd->add_option("--threads", run_threads, "worker threads (0 = hardware)");

  // schedule
  auto* sched_cmd = app.add_subcommand("schedule", "print the batch schedule and bound values");
  long long sched_T = 0;
  int sched_d = 0, sched_K = 0, sched_M = 0;
  double sched_delta = -1.0;
  std::string sched_kind = "log_squared";
  sched_cmd->add_option("--T", sched_T, "horizon")->required();
  sched_cmd->add_option("--d", sched_d, "dimension")->required();
  sched_cmd->add_option("--K", sched_K, "arms per round")->required();
  sched_cmd->add_option("--M", sched_M, "batch budget")->required();
  sched_cmd->add_option("--delta", sched_delta, "failure probability (default 1/T^3)");
  sched_cmd->add_option("--dim-kind", sched_kind, "log_squared or single_log");

  // conc
  auto* conc_cmd = app.add_subcommand("conc", "Monte-Carlo matrix concentration check");
  std::string conc_family = "fixed";
  int conc_d = 2, conc_n = 100;
  double conc_eps = 0.5, conc_delta = 0.05, conc_p = 0.5;
  long long conc_trials = 1000;
  std::uint64_t conc_seed = 1;
  conc_cmd->add_option("--family", conc_family, "fixed, growing, replay, or deterministic");
  conc_cmd->add_option("--d", conc_d, "matrix dimension");
  conc_cmd->add_option("--n", conc_n, "martingale length");
  conc_cmd->add_option("--eps", conc_eps, "sandwich epsilon");
  conc_cmd->add_option("--delta", conc_delta, "failure probability");
  conc_cmd->add_option("--p", conc_p, "Bernoulli parameter for projector families");
  conc_cmd->add_option("--trials", conc_trials, "Monte-Carlo trials");
  conc_cmd->add_option("--seed", conc_seed, "RNG seed");

  // design-check
  auto* design_cmd = app.add_subcommand("design-check", "optimal-design criterion spot check");
  int design_d = 0, design_K = 0;
  long long design_sets = 200;
  std::uint64_t design_seed = 1;
  design_cmd->add_option("--d", design_d, "dimension (0 = random per set, up to 16)");
  design_cmd->add_option("--K", design_K, "set size (0 = random per set, up to 64)");
  design_cmd->add_option("--sets", design_sets, "number of random sets");
  design_cmd->add_option("--seed", design_seed, "RNG seed");

  // lb-verify
  auto* lb_cmd = app.add_subcommand("lb-verify", "brute-force check of the schedule objective");
  // "--h" is taken by this subcommand's arm-count parameter, so help keeps only the long form.
  lb_cmd->set_help_flag("--help", "print help");
  long long lb_T = 0, lb_grid = 4000;
  double lb_dtilde = 0.0;
  int lb_h = 2, lb_M = 2;
  lb_cmd->add_option("--T", lb_T, "horizon")->required();
  lb_cmd->add_option("--dtilde", lb_dtilde, "effective dimension")->required();
  lb_cmd->add_option("--h", lb_h, "effective arm count");
  lb_cmd->add_option("--M", lb_M, "batch budget")->required();
  lb_cmd->add_option("--grid-points", lb_grid, "geometric grid resolution per length");

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "fit a log-log regret slope from a runs CSV");
  std::string fit_csv;
  int fit_M = 0;
  std::string fit_regime = "case2";
  fit_cmd->add_option("--csv", fit_csv, "runs.csv produced by `run`")->required();
  fit_cmd->add_option("--M", fit_M, "batch budget to select (0 = require a single value)");
  fit_cmd->add_option("--regime", fit_regime, "case1 or case2 reference exponent");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (run_cmd->parsed()) {
      return cmd_run(run_config, run_cmd->count("--seed") > 0, run_seed, run_out, run_threads);
    }
    if (sched_cmd->parsed()) {
      return cmd_schedule(sched_T, sched_d, sched_K, sched_M, sched_delta, sched_kind);
    }
    if (conc_cmd->parsed()) {
      return cmd_conc(conc_family, conc_d, conc_n, conc_eps, conc_delta, conc_p, conc_trials,
                      conc_seed);
    }
    if (design_cmd->parsed()) {
      return cmd_design_check(design_d, design_K, design_sets, design_seed);
    }
    if (lb_cmd->parsed()) {
      return cmd_lb_verify(lb_T, lb_dtilde, lb_h, lb_M, lb_grid);
    }
    if (fit_cmd->parsed()) {
      return cmd_fit(fit_csv, fit_M, fit_regime);
    }
  } catch (const bandit::numerical_error& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 2;
  } catch (const bandit::config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
