#include "bandit/environment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "bandit/errors.hpp"

namespace bandit {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

void check_mean(const BanditInstance& instance, const Vector& x, const std::string& where) {
  const double mu = x.dot(instance.theta);
  require(std::isfinite(mu), "audit_instance: non-finite mean at " + where);
  require(std::abs(mu) <= 1.0 + 1e-12,
          "audit_instance: |x^T theta| > 1 at " + where + " (value " + std::to_string(mu) + ")");
  if (instance.noise == NoiseKind::Bernoulli) {
    require(mu >= -1e-12 && mu <= 1.0 + 1e-12,
            "audit_instance: Bernoulli mean outside [0,1] at " + where + " (value " +
                std::to_string(mu) + ")");
  }
}

Vector basis_vector(int d, int axis) {
  Vector e = Vector::Zero(d);
  e(axis) = 1.0;
  return e;
}

}  // namespace

ContextSet sample_context(const BanditInstance& instance, Rng& rng, int* support_index) {
  switch (instance.law) {
    case ContextLawKind::FixedSet: {
      if (support_index) *support_index = 0;
      return instance.support.at(0);
    }
    case ContextLawKind::FiniteSupport: {
      const std::size_t idx = rng.categorical(instance.probs);
      if (support_index) *support_index = static_cast<int>(idx);
      return instance.support.at(idx);
    }
    case ContextLawKind::Generator: {
      if (support_index) *support_index = -1;
      ContextSet set;
      set.vectors.reserve(static_cast<std::size_t>(instance.K));
      for (int a = 0; a < instance.K; ++a) {
        set.vectors.push_back(instance.gen_scale * rng.unit_sphere(instance.d));
      }
      return set;
    }
  }
  throw std::invalid_argument("sample_context: unknown context law");
}

double sample_reward(const BanditInstance& instance, const Vector& x, Rng& rng) {
  const double mu = x.dot(instance.theta);
  switch (instance.noise) {
    case NoiseKind::Gaussian:
      return mu + rng.normal();
    case NoiseKind::Rademacher:
      return mu + rng.rademacher();
    case NoiseKind::Bernoulli: {
      if (mu < -1e-12 || mu > 1.0 + 1e-12) {
        throw std::invalid_argument("sample_reward: Bernoulli mean " + std::to_string(mu) +
                                    " outside [0,1]");
      }
      return rng.bernoulli(std::min(std::max(mu, 0.0), 1.0)) ? 1.0 : 0.0;
    }
  }
  throw std::invalid_argument("sample_reward: unknown noise kind");
}

void audit_instance(const BanditInstance& instance, int n_samples) {
  require(instance.d >= 1, "audit_instance: d must be >= 1");
  require(instance.K >= 1, "audit_instance: K must be >= 1");
  require(instance.theta.size() == instance.d, "audit_instance: theta dimension != d");
  for (int i = 0; i < instance.d; ++i) {
    require(std::isfinite(instance.theta(i)), "audit_instance: non-finite theta entry");
    require(std::abs(instance.theta(i)) <= 1.0 + 1e-12,
            "audit_instance: |theta_i| > 1 at coordinate " + std::to_string(i));
  }

  switch (instance.law) {
    case ContextLawKind::FixedSet:
      require(instance.support.size() == 1, "audit_instance: FixedSet needs exactly one set");
      break;
    case ContextLawKind::FiniteSupport: {
      require(!instance.support.empty(), "audit_instance: FiniteSupport needs sets");
      require(instance.probs.size() == instance.support.size(),
              "audit_instance: probs size != support size");
      double total = 0.0;
      for (double p : instance.probs) {
        require(std::isfinite(p) && p >= 0.0, "audit_instance: negative support probability");
        total += p;
      }
      require(std::abs(total - 1.0) <= 1e-9, "audit_instance: support probabilities sum to " +
                                                 std::to_string(total) + ", expected 1");
      break;
    }
    case ContextLawKind::Generator:
      require(instance.gen_scale > 0.0, "audit_instance: generator scale must be positive");
      break;
  }

  if (instance.law == ContextLawKind::Generator) {
    Rng rng(derive_seed(0x9e3779b97f4a7c15ULL, 41, 1));
    for (int s = 0; s < n_samples; ++s) {
      ContextSet set = sample_context(instance, rng);
      require(set.K() == instance.K, "audit_instance: sampled set has wrong K");
      for (int a = 0; a < set.K(); ++a) {
        check_mean(instance, set.vectors[static_cast<std::size_t>(a)],
                   "generator sample " + std::to_string(s) + " arm " + std::to_string(a));
      }
    }
  } else {
    for (std::size_t s = 0; s < instance.support.size(); ++s) {
      const ContextSet& set = instance.support[s];
      require(set.K() == instance.K, "audit_instance: support set " + std::to_string(s) +
                                         " has K = " + std::to_string(set.K()) + ", expected " +
                                         std::to_string(instance.K));
      for (int a = 0; a < set.K(); ++a) {
        const Vector& x = set.vectors[static_cast<std::size_t>(a)];
        require(x.size() == instance.d, "audit_instance: feature dimension != d in support set " +
                                            std::to_string(s));
        for (int i = 0; i < instance.d; ++i) {
          require(std::isfinite(x(i)), "audit_instance: non-finite feature entry");
        }
        check_mean(instance, x, "support set " + std::to_string(s) + " arm " + std::to_string(a));
      }
    }
  }
}

BanditInstance make_random_instance(int d, int K, std::uint64_t seed) {
  require(d >= 1 && K >= 1, "make_random_instance: d and K must be >= 1");
  Rng rng(derive_seed(seed, 7, 0));
  BanditInstance inst;
  inst.d = d;
  inst.K = K;
  inst.noise = NoiseKind::Gaussian;
  inst.law = ContextLawKind::Generator;
  inst.gen_scale = 1.0;
  inst.family = "random";
  inst.meta["seed"] = static_cast<double>(seed);

  inst.theta = Vector::Zero(d);
  for (int i = 0; i < d; ++i) inst.theta(i) = rng.uniform(-1.0, 1.0);
  // Unit-sphere features guarantee |x^T theta| <= ||theta||_2, so pull the
  // draw inside the unit ball while keeping the sup-norm constraint.
  const double norm = inst.theta.norm();
  if (norm > 1.0) inst.theta /= norm;

  audit_instance(inst, 64);
  return inst;
}

BanditInstance make_group1_instance(int h, int j_star) {
  require(h >= 1, "make_group1_instance: h must be >= 1");
  require(j_star >= 1 && j_star <= h, "make_group1_instance: j_star must be in 1..h");
  BanditInstance inst;
  inst.d = h;
  inst.K = h;
  inst.noise = NoiseKind::Bernoulli;
  inst.law = ContextLawKind::FixedSet;
  inst.family = "group1";
  inst.meta["h"] = h;
  inst.meta["j_star"] = j_star;

  inst.theta = Vector::Zero(h);
  inst.theta(j_star - 1) = 1.0;

  ContextSet set;
  set.vectors.reserve(static_cast<std::size_t>(h));
  for (int j = 0; j < h; ++j) set.vectors.push_back(basis_vector(h, j));
  inst.support = {set};

  audit_instance(inst);
  return inst;
}

BanditInstance make_group2_instance(int d, int h, const std::vector<int>& sigma,
                                    const std::map<int, int>& signs, double eps) {
  require(d >= 2 && d % 2 == 0, "make_group2_instance: d must be even and >= 2");
  require(h >= 2 && h % 2 == 0, "make_group2_instance: h must be even and >= 2");
  require(h <= d, "make_group2_instance: h must be <= d");
  require(eps > 0.0 && eps <= 0.25, "make_group2_instance: eps must be in (0, 1/4]");
  const int d1 = d / 2;
  const int h1 = h / 2;
  require(static_cast<int>(sigma.size()) == d, "make_group2_instance: sigma must have d entries");
  {
    std::vector<bool> seen(static_cast<std::size_t>(d), false);
    for (int v : sigma) {
      require(v >= 0 && v < d, "make_group2_instance: sigma entries must lie in 0..d-1");
      require(!seen[static_cast<std::size_t>(v)], "make_group2_instance: sigma must be a permutation");
      seen[static_cast<std::size_t>(v)] = true;
    }
  }
  for (const auto& [arm, sign] : signs) {
    require(arm >= h1 + 1 && arm <= h1 + d1,
            "make_group2_instance: signs keys must be designated arms h/2+1..h/2+d/2");
    require(sign == 1 || sign == -1, "make_group2_instance: signs values must be +1 or -1");
  }

  BanditInstance inst;
  inst.d = d;
  inst.K = h;
  inst.noise = NoiseKind::Bernoulli;
  inst.law = ContextLawKind::FiniteSupport;
  inst.family = "group2";
  inst.meta["d"] = d;
  inst.meta["h"] = h;
  inst.meta["eps"] = eps;
  inst.sigma = sigma;

  // Arm j (1-indexed, j in 1..h1+d1) lives on basis axis sigma[j-1]; features
  // are basis vectors, so theta(axis) directly encodes the arm's mean: 1/2 for
  // common arms, 1/2 + sign * eps for designated ones.
  inst.theta = Vector::Zero(d);
  const int n_arms = h1 + d1;
  for (int arm = 1; arm <= n_arms; ++arm) {
    double mean = 0.5;
    if (arm > h1) {
      const auto it = signs.find(arm);
      const int sign = (it == signs.end()) ? 1 : it->second;
      mean = 0.5 + sign * eps;
    }
    inst.theta(sigma[static_cast<std::size_t>(arm - 1)]) = mean;
  }

  inst.support.reserve(static_cast<std::size_t>(d1));
  inst.probs.assign(static_cast<std::size_t>(d1), 1.0 / static_cast<double>(d1));
  for (int i = 1; i <= d1; ++i) {
    ContextSet set;
    set.vectors.reserve(static_cast<std::size_t>(h));
    for (int arm = 1; arm <= h1; ++arm) {
      set.vectors.push_back(basis_vector(d, sigma[static_cast<std::size_t>(arm - 1)]));
    }
    const int designated = h1 + i;
    for (int copy = 0; copy < h1; ++copy) {
      set.vectors.push_back(basis_vector(d, sigma[static_cast<std::size_t>(designated - 1)]));
    }
    inst.support.push_back(std::move(set));
  }

  audit_instance(inst);
  return inst;
}

BanditInstance make_group3_instance(int d_arms, int j_star, double eps) {
  require(d_arms >= 1, "make_group3_instance: d_arms must be >= 1");
  require(j_star >= 0 && j_star <= d_arms, "make_group3_instance: j_star must be in 0..d_arms");
  require(eps >= 0.0 && eps <= 0.25, "make_group3_instance: eps must be in [0, 1/4]");
  BanditInstance inst;
  inst.d = d_arms;
  inst.K = d_arms;
  inst.noise = NoiseKind::Bernoulli;
  inst.law = ContextLawKind::FixedSet;
  inst.family = "group3";
  inst.meta["j_star"] = j_star;
  inst.meta["eps"] = eps;

  inst.theta = Vector::Constant(d_arms, 0.5);
  if (j_star >= 1) inst.theta(j_star - 1) = 0.5 + eps;

  ContextSet set;
  set.vectors.reserve(static_cast<std::size_t>(d_arms));
  for (int j = 0; j < d_arms; ++j) set.vectors.push_back(basis_vector(d_arms, j));
  inst.support = {set};

  audit_instance(inst);
  return inst;
}

std::vector<int> identity_permutation(int d) {
  std::vector<int> sigma(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) sigma[static_cast<std::size_t>(i)] = i;
  return sigma;
}

int arm_id_from_vector(const BanditInstance& instance, const Vector& x) {
  require(x.size() == instance.d, "arm_id_from_vector: dimension mismatch");
  int axis = -1;
  for (int i = 0; i < instance.d; ++i) {
    const double v = x(i);
    if (std::abs(v) <= 1e-12) continue;
    require(std::abs(v - 1.0) <= 1e-9 && axis == -1,
            "arm_id_from_vector: vector is not a standard basis vector");
    axis = i;
  }
  require(axis >= 0, "arm_id_from_vector: zero vector has no arm id");
  if (instance.family == "group2") {
    for (std::size_t j = 0; j < instance.sigma.size(); ++j) {
      if (instance.sigma[j] == axis) return static_cast<int>(j) + 1;
    }
    throw std::invalid_argument("arm_id_from_vector: axis not covered by sigma");
  }
  return axis + 1;
}

nlohmann::json instance_to_json(const BanditInstance& instance) {
  nlohmann::json j;
  j["d"] = instance.d;
  j["K"] = instance.K;
  j["family"] = instance.family;
  j["theta"] = std::vector<double>(instance.theta.data(), instance.theta.data() + instance.theta.size());
  switch (instance.noise) {
    case NoiseKind::Gaussian: j["noise"] = "gaussian"; break;
    case NoiseKind::Rademacher: j["noise"] = "rademacher"; break;
    case NoiseKind::Bernoulli: j["noise"] = "bernoulli"; break;
  }
  switch (instance.law) {
    case ContextLawKind::FixedSet: j["law"] = "fixed_set"; break;
    case ContextLawKind::FiniteSupport: j["law"] = "finite_support"; break;
    case ContextLawKind::Generator: j["law"] = "generator"; break;
  }
  if (instance.law == ContextLawKind::Generator) {
    j["gen_scale"] = instance.gen_scale;
  } else {
    nlohmann::json sets = nlohmann::json::array();
    for (const ContextSet& set : instance.support) {
      nlohmann::json vecs = nlohmann::json::array();
      for (const Vector& x : set.vectors) {
        vecs.push_back(std::vector<double>(x.data(), x.data() + x.size()));
      }
      sets.push_back(vecs);
    }
    j["support"] = sets;
    if (instance.law == ContextLawKind::FiniteSupport) j["probs"] = instance.probs;
  }
  if (!instance.meta.empty()) j["meta"] = instance.meta;
  if (!instance.sigma.empty()) j["sigma"] = instance.sigma;
  return j;
}

BanditInstance instance_from_json(const nlohmann::json& j) {
  BanditInstance inst;
  try {
    inst.d = j.at("d").get<int>();
    inst.K = j.at("K").get<int>();
    inst.family = j.value("family", std::string("custom"));
    const auto theta = j.at("theta").get<std::vector<double>>();
    inst.theta = Eigen::Map<const Vector>(theta.data(), static_cast<Eigen::Index>(theta.size()));

    const std::string noise = j.at("noise").get<std::string>();
    if (noise == "gaussian") inst.noise = NoiseKind::Gaussian;
    else if (noise == "rademacher") inst.noise = NoiseKind::Rademacher;
    else if (noise == "bernoulli") inst.noise = NoiseKind::Bernoulli;
    else throw config_error("instance_from_json: unknown noise kind '" + noise + "'");

    const std::string law = j.at("law").get<std::string>();
    if (law == "fixed_set") inst.law = ContextLawKind::FixedSet;
    else if (law == "finite_support") inst.law = ContextLawKind::FiniteSupport;
    else if (law == "generator") inst.law = ContextLawKind::Generator;
    else throw config_error("instance_from_json: unknown context law '" + law + "'");

    if (inst.law == ContextLawKind::Generator) {
      inst.gen_scale = j.value("gen_scale", 1.0);
    } else {
      for (const auto& set_json : j.at("support")) {
        ContextSet set;
        for (const auto& vec_json : set_json) {
          const auto vals = vec_json.get<std::vector<double>>();
          set.vectors.push_back(
              Eigen::Map<const Vector>(vals.data(), static_cast<Eigen::Index>(vals.size())));
        }
        inst.support.push_back(std::move(set));
      }
      if (inst.law == ContextLawKind::FiniteSupport) {
        inst.probs = j.at("probs").get<std::vector<double>>();
      }
    }
    if (j.contains("meta")) inst.meta = j.at("meta").get<std::map<std::string, double>>();
    if (j.contains("sigma")) inst.sigma = j.at("sigma").get<std::vector<int>>();
  } catch (const nlohmann::json::exception& e) {
    throw config_error(std::string("instance_from_json: malformed instance JSON: ") + e.what());
  }
  audit_instance(inst, 64);
  return inst;
}

}  // namespace bandit
