#include "bandit/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <utility>

#include "bandit/design.hpp"
#include "bandit/errors.hpp"
#include "bandit/schedule.hpp"

namespace bandit {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

void require_config(bool cond, const std::string& msg) {
  if (!cond) throw config_error(msg);
}

// Typos in configs must not pass silently: any key outside the allowed set
// for its enclosing object is fatal.
void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* key : allowed) {
      if (it.key() == key) {
        known = true;
        break;
      }
    }
    if (!known) throw config_error("unknown key \"" + it.key() + "\" in " + where);
  }
}

const nlohmann::json& get_field(const nlohmann::json& j, const char* key,
                                const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) throw config_error("missing key \"" + std::string(key) + "\" in " + where);
  return *it;
}

long long get_integer(const nlohmann::json& j, const char* key, const std::string& where) {
  const nlohmann::json& v = get_field(j, key, where);
  if (!v.is_number_integer() && !v.is_number_unsigned())
    throw config_error("key \"" + std::string(key) + "\" in " + where + " must be an integer");
  return v.get<long long>();
}

double get_number(const nlohmann::json& j, const char* key, const std::string& where) {
  const nlohmann::json& v = get_field(j, key, where);
  if (!v.is_number())
    throw config_error("key \"" + std::string(key) + "\" in " + where + " must be a number");
  return v.get<double>();
}

AgentOverrides parse_overrides(const nlohmann::json& j) {
  check_keys(j, {"delta", "alpha", "alpha_ln_coeff", "lambda_reg", "L", "kappa", "dim_kind"},
             "overrides");
  AgentOverrides ov;
  if (j.contains("delta")) ov.delta = get_number(j, "delta", "overrides");
  if (j.contains("alpha")) ov.alpha = get_number(j, "alpha", "overrides");
  if (j.contains("alpha_ln_coeff"))
    ov.alpha_ln_coeff = get_number(j, "alpha_ln_coeff", "overrides");
  if (j.contains("lambda_reg")) ov.lambda_reg = get_number(j, "lambda_reg", "overrides");
  if (j.contains("L")) ov.L = get_number(j, "L", "overrides");
  if (j.contains("kappa")) ov.kappa = get_number(j, "kappa", "overrides");
  if (j.contains("dim_kind")) {
    const nlohmann::json& v = j.at("dim_kind");
    if (!v.is_string())
      throw config_error("key \"dim_kind\" in overrides must be a string");
    const std::string kind = v.get<std::string>();
    if (kind == "log_squared") ov.dim_kind = EffectiveDimKind::LogSquared;
    else if (kind == "single_log") ov.dim_kind = EffectiveDimKind::SingleLog;
    else throw config_error("overrides.dim_kind must be \"log_squared\" or \"single_log\"");
  }
  return ov;
}

BanditInstance parse_family(const nlohmann::json& j) {
  if (!j.is_object()) throw config_error("\"family\" must be an object");
  const nlohmann::json& name_json = get_field(j, "name", "family");
  if (!name_json.is_string()) throw config_error("family.name must be a string");
  const std::string name = name_json.get<std::string>();

  if (name == "random") {
    check_keys(j, {"name", "d", "K", "seed"}, "family");
    const long long d = get_integer(j, "d", "family");
    const long long K = get_integer(j, "K", "family");
    const long long seed = get_integer(j, "seed", "family");
    require_config(d >= 1 && K >= 1, "family random: d and K must be >= 1");
    require_config(seed >= 0, "family random: seed must be non-negative");
    return make_random_instance(static_cast<int>(d), static_cast<int>(K),
                                static_cast<std::uint64_t>(seed));
  }
  if (name == "group1") {
    check_keys(j, {"name", "h", "j_star"}, "family");
    return make_group1_instance(static_cast<int>(get_integer(j, "h", "family")),
                                static_cast<int>(get_integer(j, "j_star", "family")));
  }
  if (name == "group2") {
    check_keys(j, {"name", "d", "h", "eps", "sigma", "signs"}, "family");
    const int d = static_cast<int>(get_integer(j, "d", "family"));
    const int h = static_cast<int>(get_integer(j, "h", "family"));
    const double eps = get_number(j, "eps", "family");
    std::vector<int> sigma =
        j.contains("sigma") ? j.at("sigma").get<std::vector<int>>() : identity_permutation(d);
    std::map<int, int> signs;
    if (j.contains("signs")) {
      const nlohmann::json& s = j.at("signs");
      if (!s.is_object()) throw config_error("family.signs must be an object");
      for (auto it = s.begin(); it != s.end(); ++it) {
        int arm = 0;
        try {
          arm = std::stoi(it.key());
        } catch (const std::exception&) {
          throw config_error("family.signs keys must be integer arm ids, got \"" + it.key() +
                             "\"");
        }
        if (!it.value().is_number_integer())
          throw config_error("family.signs values must be +1 or -1");
        signs[arm] = it.value().get<int>();
      }
    }
    return make_group2_instance(d, h, sigma, signs, eps);
  }
  if (name == "group3") {
    check_keys(j, {"name", "d_arms", "j_star", "eps"}, "family");
    return make_group3_instance(static_cast<int>(get_integer(j, "d_arms", "family")),
                                static_cast<int>(get_integer(j, "j_star", "family")),
                                get_number(j, "eps", "family"));
  }
  throw config_error("unknown instance family \"" + name + "\"");
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Per-run diagnostics kept out of the CSV but folded into the summary.
struct RunStats {
  long long ci_checks = 0;
  long long ci_violations = 0;
  bool event_E_held = true;
  int eliminated_optimal = 0;
  int empty_intersection = 0;
  int width_bound_violations = 0;
  int batches_run = 0;
};

}  // namespace

ExperimentConfig parse_experiment_config(const nlohmann::json& j) {
  if (!j.is_object()) throw config_error("experiment config must be a JSON object");
  check_keys(j,
             {"instance", "family", "T_grid", "M_grid", "replications", "master_seed", "out_dir",
              "overrides", "audit_invariants"},
             "config");

  ExperimentConfig config;
  const bool has_instance = j.contains("instance");
  const bool has_family = j.contains("family");
  require_config(has_instance != has_family,
                 "config must contain exactly one of \"instance\" and \"family\"");
  if (has_instance) {
    const nlohmann::json& inst = j.at("instance");
    if (!inst.is_object()) throw config_error("\"instance\" must be an object");
    check_keys(inst,
               {"d", "K", "family", "theta", "noise", "law", "gen_scale", "support", "probs",
                "meta", "sigma"},
               "instance");
    config.instance = instance_from_json(inst);
  } else {
    config.instance = parse_family(j.at("family"));
  }

  const nlohmann::json& t_grid = get_field(j, "T_grid", "config");
  require_config(t_grid.is_array() && !t_grid.empty(), "T_grid must be a non-empty array");
  for (const nlohmann::json& v : t_grid) {
    require_config(v.is_number_integer() || v.is_number_unsigned(),
                   "T_grid entries must be integers");
    const long long T = v.get<long long>();
    require_config(T >= 1, "T_grid entries must be >= 1");
    config.T_grid.push_back(T);
  }
  const nlohmann::json& m_grid = get_field(j, "M_grid", "config");
  require_config(m_grid.is_array() && !m_grid.empty(), "M_grid must be a non-empty array");
  for (const nlohmann::json& v : m_grid) {
    require_config(v.is_number_integer() || v.is_number_unsigned(),
                   "M_grid entries must be integers");
    const long long M = v.get<long long>();
    require_config(M >= 1, "M_grid entries must be >= 1");
    config.M_grid.push_back(static_cast<int>(M));
  }

  if (j.contains("replications")) {
    const long long reps = get_integer(j, "replications", "config");
    require_config(reps >= 1, "replications must be >= 1");
    config.replications = static_cast<int>(reps);
  }
  if (j.contains("master_seed")) {
    const nlohmann::json& v = j.at("master_seed");
    require_config(v.is_number_unsigned() ||
                       (v.is_number_integer() && v.get<long long>() >= 0),
                   "master_seed must be a non-negative integer");
    config.master_seed = v.get<std::uint64_t>();
  }
  if (j.contains("out_dir")) {
    const nlohmann::json& v = j.at("out_dir");
    require_config(v.is_string(), "out_dir must be a string");
    config.out_dir = v.get<std::string>();
  }
  if (j.contains("overrides")) {
    const nlohmann::json& v = j.at("overrides");
    require_config(v.is_object(), "overrides must be an object");
    config.overrides = parse_overrides(v);
  }
  if (j.contains("audit_invariants")) {
    const nlohmann::json& v = j.at("audit_invariants");
    require_config(v.is_boolean(), "audit_invariants must be a boolean");
    config.audit_invariants = v.get<bool>();
  }
  return config;
}

std::string rows_to_csv(const std::vector<RunRow>& rows) {
  std::string out(kCsvHeader);
  out.push_back('\n');
  for (const RunRow& r : rows) {
    out += std::to_string(r.run_id);
    out.push_back(',');
    out += std::to_string(r.T);
    out.push_back(',');
    out += std::to_string(r.M);
    out.push_back(',');
    out += std::to_string(r.d);
    out.push_back(',');
    out += std::to_string(r.K);
    out.push_back(',');
    out += std::to_string(r.seed);
    out.push_back(',');
    out += std::to_string(r.batch);
    out.push_back(',');
    out += std::to_string(r.round);
    out.push_back(',');
    out += format_double(r.regret);
    out.push_back(',');
    out += format_double(r.cum_regret);
    out.push_back(',');
    out += std::to_string(r.survivors);
    out.push_back(',');
    out += std::to_string(r.policy_epoch);
    out.push_back('\n');
  }
  return out;
}

ExperimentReport run_experiment(const ExperimentConfig& config, int threads, bool write_files) {
  require_config(!config.T_grid.empty(), "run_experiment: T_grid must be non-empty");
  require_config(!config.M_grid.empty(), "run_experiment: M_grid must be non-empty");
  require_config(config.replications >= 1, "run_experiment: replications must be >= 1");
  audit_instance(config.instance);

  const int d = config.instance.d;
  const int K = config.instance.K;
  const std::size_t n_cells = config.T_grid.size() * config.M_grid.size();
  std::vector<AgentConfig> cell_configs;
  cell_configs.reserve(n_cells);
  for (long long T : config.T_grid) {
    for (int M : config.M_grid) {
      AgentConfig cfg = make_agent_config(T, M, d, K, config.overrides);
      cfg.audit_invariants = config.audit_invariants;
      cell_configs.push_back(std::move(cfg));
    }
  }

  const long long reps = config.replications;
  const long long total = static_cast<long long>(n_cells) * reps;
  std::vector<RunRow> rows(static_cast<std::size_t>(total));
  std::vector<RunStats> stats(static_cast<std::size_t>(total));

  std::atomic<long long> next_job{0};
  std::atomic<bool> stop{false};
  std::mutex error_mutex;
  std::exception_ptr first_error;

  auto worker = [&]() {
    for (;;) {
      if (stop.load(std::memory_order_relaxed)) return;
      const long long job = next_job.fetch_add(1, std::memory_order_relaxed);
      if (job >= total) return;
      const std::size_t cell = static_cast<std::size_t>(job / reps);
      const std::uint64_t rep = static_cast<std::uint64_t>(job % reps);
      const AgentConfig& cfg = cell_configs[cell];
      const std::uint64_t seed =
          derive_seed(config.master_seed, static_cast<std::uint64_t>(cell), rep);
      try {
        Rng rng(seed);
        const RegretTrace trace = run_batch_algorithm(config.instance, cfg, rng);
        RunRow& row = rows[static_cast<std::size_t>(job)];
        row.run_id = static_cast<int>(job);
        row.T = cfg.T;
        row.M = cfg.M;
        row.d = d;
        row.K = K;
        row.seed = seed;
        row.batch = trace.batch_index.back();
        row.round = cfg.T;
        row.regret = trace.per_round_regret.back();
        row.cum_regret = trace.cumulative.back();
        row.survivors = trace.survivor_counts.back();
        row.policy_epoch = trace.policy_epoch.back();
        RunStats& st = stats[static_cast<std::size_t>(job)];
        st.ci_checks = trace.ci_checks;
        st.ci_violations = trace.ci_violations;
        st.event_E_held = trace.event_E_held;
        st.eliminated_optimal = trace.eliminated_optimal_count;
        st.empty_intersection = trace.empty_intersection_count;
        st.width_bound_violations = trace.width_bound_violations;
        st.batches_run = trace.batches_run;
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        stop.store(true, std::memory_order_relaxed);
        return;
      }
    }
  };

  int n_threads = threads;
  if (n_threads <= 0) {
    n_threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  }
  n_threads = static_cast<int>(std::min<long long>(n_threads, total));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  ExperimentReport report;
  report.rows = std::move(rows);

  nlohmann::json cells = nlohmann::json::array();
  for (std::size_t cell = 0; cell < n_cells; ++cell) {
    const AgentConfig& cfg = cell_configs[cell];
    const std::size_t base = cell * static_cast<std::size_t>(reps);
    double sum = 0.0;
    double sum_survivors = 0.0;
    long long ci_checks = 0, ci_violations = 0;
    long long event_held_runs = 0, eliminated_optimal = 0, empty_intersection = 0,
              width_violations = 0;
    int max_batches = 0;
    for (long long r = 0; r < reps; ++r) {
      const RunRow& row = report.rows[base + static_cast<std::size_t>(r)];
      const RunStats& st = stats[base + static_cast<std::size_t>(r)];
      sum += row.cum_regret;
      sum_survivors += row.survivors;
      ci_checks += st.ci_checks;
      ci_violations += st.ci_violations;
      event_held_runs += st.event_E_held ? 1 : 0;
      eliminated_optimal += st.eliminated_optimal;
      empty_intersection += st.empty_intersection;
      width_violations += st.width_bound_violations;
      max_batches = std::max(max_batches, st.batches_run);
    }
    const double mean = sum / static_cast<double>(reps);
    double sq = 0.0;
    for (long long r = 0; r < reps; ++r) {
      const double dev = report.rows[base + static_cast<std::size_t>(r)].cum_regret - mean;
      sq += dev * dev;
    }
    const double stderr_mean =
        reps > 1 ? std::sqrt(sq / static_cast<double>(reps - 1)) / std::sqrt(static_cast<double>(reps))
                 : 0.0;

    nlohmann::json c;
    c["T"] = cfg.T;
    c["M"] = cfg.M;
    c["agent"] = agent_config_to_json(cfg);
    c["mean_cum_regret"] = mean;
    c["stderr_cum_regret"] = stderr_mean;
    c["mean_final_survivors"] = sum_survivors / static_cast<double>(reps);
    c["ci_checks_total"] = ci_checks;
    c["ci_violations_total"] = ci_violations;
    c["event_E_held_runs"] = event_held_runs;
    c["eliminated_optimal_total"] = eliminated_optimal;
    c["empty_intersection_total"] = empty_intersection;
    c["width_bound_violations_total"] = width_violations;
    c["max_batches_run"] = max_batches;
    c["theorem1_bound"] = theorem1_bound(cfg.T, d, K, cfg.M);
    c["theorem1_bound_dressed"] =
        theorem1_bound_dressed(cfg.T, d, K, cfg.M, cfg.delta, cfg.dim_kind);
    c["theorem2_lower_bound"] = theorem2_lower_bound(cfg.T, d, K, cfg.M);
    cells.push_back(std::move(c));
  }

  nlohmann::json summary;
  summary["instance"] = instance_to_json(config.instance);
  summary["replications"] = config.replications;
  summary["master_seed"] = config.master_seed;
  summary["total_runs"] = total;
  summary["cells"] = std::move(cells);
  report.summary = std::move(summary);

  if (write_files) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(config.out_dir, ec);
    if (ec) {
      throw config_error("run_experiment: cannot create output directory \"" + config.out_dir +
                         "\": " + ec.message());
    }
    const fs::path csv_path = fs::path(config.out_dir) / "runs.csv";
    const fs::path summary_path = fs::path(config.out_dir) / "summary.json";
    {
      std::ofstream out(csv_path, std::ios::binary);
      if (!out) throw config_error("run_experiment: cannot write " + csv_path.string());
      out << rows_to_csv(report.rows);
      if (!out) throw config_error("run_experiment: write failed for " + csv_path.string());
    }
    {
      std::ofstream out(summary_path, std::ios::binary);
      if (!out) throw config_error("run_experiment: cannot write " + summary_path.string());
      out << report.summary.dump(2) << '\n';
      if (!out) throw config_error("run_experiment: write failed for " + summary_path.string());
    }
    report.csv_path = csv_path.string();
    report.summary_path = summary_path.string();
  }
  return report;
}

ScalingFit fit_scaling_exponent(const std::vector<std::pair<double, double>>& points,
                                double predicted_slope) {
  require(points.size() >= 3, "fit_scaling_exponent: need at least 3 points");
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      require(std::abs(points[i].first - points[j].first) > 1e-12,
              "fit_scaling_exponent: abscissae must be pairwise distinct");
    }
  }
  const double n = static_cast<double>(points.size());
  double mean_x = 0.0, mean_y = 0.0;
  for (const auto& p : points) {
    mean_x += p.first;
    mean_y += p.second;
  }
  mean_x /= n;
  mean_y /= n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& p : points) {
    sxx += (p.first - mean_x) * (p.first - mean_x);
    sxy += (p.first - mean_x) * (p.second - mean_y);
  }
  ScalingFit fit;
  fit.points = points;
  fit.slope = sxy / sxx;
  fit.intercept = mean_y - fit.slope * mean_x;
  double sq = 0.0;
  for (const auto& p : points) {
    const double resid = p.second - (fit.intercept + fit.slope * p.first);
    sq += resid * resid;
  }
  fit.residual = std::sqrt(sq / n);
  fit.predicted_slope = predicted_slope;
  return fit;
}

double predicted_exponent(int M, bool beyond_threshold) {
  require(M >= 1, "predicted_exponent: M must be >= 1");
  if (M == 1) return 1.0;
  const double s = beyond_threshold ? std::pow(2.0, -M + 1) : std::pow(2.0, -M + 2);
  return 1.0 / (2.0 - s);
}

std::vector<double> group2_visitation_rates(const BanditInstance& instance) {
  require(instance.family == "group2",
          "group2_visitation_rates: instance is not a duplicated-arm family");
  require(instance.law == ContextLawKind::FiniteSupport &&
              instance.support.size() == instance.probs.size() && !instance.support.empty(),
          "group2_visitation_rates: malformed finite-support instance");
  const int h = instance.K;
  const int h1 = h / 2;
  std::vector<double> rates;
  rates.reserve(instance.support.size());
  for (std::size_t s = 0; s < instance.support.size(); ++s) {
    const ContextSet& set = instance.support[s];
    require(set.K() == h, "group2_visitation_rates: support set has wrong arm count");
    const DesignWeights design = g_optimal_design(set.vectors);
    double mass = 0.0;
    for (int pos = h1; pos < h; ++pos) mass += design.weights[static_cast<std::size_t>(pos)];
    rates.push_back(instance.probs[s] * mass);
  }
  return rates;
}

std::vector<int> low_visitation_designated_arms(const std::vector<double>& rates, int d, int h) {
  require(d >= 2 && d % 2 == 0 && h >= 2 && h % 2 == 0,
          "low_visitation_designated_arms: d and h must be even and >= 2");
  const int d1 = d / 2;
  const int h1 = h / 2;
  require(static_cast<int>(rates.size()) == d1,
          "low_visitation_designated_arms: need one rate per designated arm");
  const double threshold = 2.0 / (static_cast<double>(h1 + 1) * static_cast<double>(d1));
  const double cutoff = threshold * (1.0 + 1e-9) + 1e-15;

  std::vector<int> selected;
  for (int s = 0; s < d1; ++s) {
    if (rates[static_cast<std::size_t>(s)] <= cutoff) selected.push_back(h1 + 1 + s);
  }
  const int min_size = (d1 + 1) / 2;
  if (static_cast<int>(selected.size()) < min_size) {
    // The threshold is guaranteed to catch at least half the designated arms
    // only for exactly low-visit policies; pad with the lowest-rate arms so
    // the counting guarantee holds for every input.
    std::vector<int> order(static_cast<std::size_t>(d1));
    for (int s = 0; s < d1; ++s) order[static_cast<std::size_t>(s)] = s;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      const double ra = rates[static_cast<std::size_t>(a)];
      const double rb = rates[static_cast<std::size_t>(b)];
      if (ra != rb) return ra < rb;
      return a < b;
    });
    selected.clear();
    for (int i = 0; i < min_size; ++i) selected.push_back(h1 + 1 + order[static_cast<std::size_t>(i)]);
    std::sort(selected.begin(), selected.end());
  }
  return selected;
}

std::map<int, int> adversarial_group2_signs(const AgentRunner& runner, int d, int h, double eps,
                                            int probe_budget, std::uint64_t seed,
                                            double* mean_regret_plus,
                                            double* mean_regret_minus) {
  require(static_cast<bool>(runner), "adversarial_group2_signs: runner must be callable");
  require(d >= 2 && d % 2 == 0 && h >= 2 && h % 2 == 0,
          "adversarial_group2_signs: d and h must be even and >= 2");
  require(eps > 0.0 && eps <= 0.25, "adversarial_group2_signs: eps must be in (0, 1/4]");
  require(probe_budget >= 1, "adversarial_group2_signs: probe_budget must be >= 1");

  const std::vector<int> sigma = identity_permutation(d);
  const BanditInstance baseline = make_group2_instance(d, h, sigma, {}, eps);
  const std::vector<double> rates = group2_visitation_rates(baseline);
  const std::vector<int> low_arms = low_visitation_designated_arms(rates, d, h);

  // Arms outside the low-visitation set keep the +eps default in both
  // candidates; only the poorly explored arms flip.
  std::map<int, int> plus_signs, minus_signs;
  for (int arm : low_arms) {
    plus_signs[arm] = 1;
    minus_signs[arm] = -1;
  }
  const BanditInstance inst_plus = make_group2_instance(d, h, sigma, plus_signs, eps);
  const BanditInstance inst_minus = make_group2_instance(d, h, sigma, minus_signs, eps);

  double sum_plus = 0.0, sum_minus = 0.0;
  for (int probe = 0; probe < probe_budget; ++probe) {
    const std::uint64_t probe_seed = derive_seed(seed, 0x9e3779b9u, static_cast<std::uint64_t>(probe));
    sum_plus += runner(inst_plus, probe_seed).cumulative.back();
    sum_minus += runner(inst_minus, probe_seed).cumulative.back();
  }
  if (mean_regret_plus) *mean_regret_plus = sum_plus / probe_budget;
  if (mean_regret_minus) *mean_regret_minus = sum_minus / probe_budget;
  return sum_minus > sum_plus ? minus_signs : plus_signs;
}

}  // namespace bandit
