#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "bandit/linalg.hpp"
#include "bandit/rng.hpp"
#include "json.hpp"

namespace bandit {

// One revealed set of exactly K feature vectors (duplicates allowed).
struct ContextSet {
  std::vector<Vector> vectors;

  int K() const { return static_cast<int>(vectors.size()); }
  int d() const { return vectors.empty() ? 0 : static_cast<int>(vectors[0].size()); }
};

enum class NoiseKind { Gaussian, Rademacher, Bernoulli };
enum class ContextLawKind { FiniteSupport, FixedSet, Generator };

// Hidden linear model plus the context-set distribution and the reward noise
// law. Instances are immutable after construction; samplers take an external
// stream so replications are reproducible.
struct BanditInstance {
  Vector theta;          // sup-norm <= 1
  int d = 0;
  int K = 0;
  NoiseKind noise = NoiseKind::Gaussian;
  ContextLawKind law = ContextLawKind::FixedSet;

  // FiniteSupport / FixedSet payload (FixedSet uses support[0]).
  std::vector<ContextSet> support;
  std::vector<double> probs;

  // Generator payload: K i.i.d. unit-sphere directions scaled by gen_scale.
  double gen_scale = 1.0;

  // Provenance tag plus family parameters, kept for serialization and for
  // mapping played vectors back to arm identities in the structured families.
  std::string family = "custom";
  std::map<std::string, double> meta;
  std::vector<int> sigma;  // group-2 basis assignment (0-indexed permutation)
};

// Draws one context set; fills *support_index with the drawn support index for
// finite laws (0 for FixedSet, -1 for Generator) when non-null.
ContextSet sample_context(const BanditInstance& instance, Rng& rng, int* support_index = nullptr);

// Reward with mean x^T theta and the instance's noise law. Bernoulli mode
// requires x^T theta in [0, 1].
double sample_reward(const BanditInstance& instance, const Vector& x, Rng& rng);

// Checks |x^T theta| <= 1 (and the Bernoulli mean-range requirement) over the
// whole support for finite laws, or over n_samples draws for generators.
// Throws std::invalid_argument naming the failure.
void audit_instance(const BanditInstance& instance, int n_samples = 1000);

// Benchmark generator: theta uniform on [-1,1]^d rescaled to the unit ball so
// every unit-sphere feature satisfies |x^T theta| <= 1; Gaussian rewards.
BanditInstance make_random_instance(int d, int K, std::uint64_t seed);

// h-armed problem embedded as the orthonormal basis of R^h; the distinguished
// arm has mean 1, every other arm mean 0; Bernoulli rewards. j_star is
// 1-indexed.
BanditInstance make_group1_instance(int h, int j_star);

// Half-common / half-designated family. d and h even; d1 = d/2 context sets,
// each {arms 1..h1} plus arm h1+i repeated h1 times so |X| = h; arm j sits on
// basis axis sigma[j-1] (sigma a 0-indexed permutation of 0..d-1); common arms
// have mean 1/2, designated arm h1+i mean 1/2 + signs(h1+i) * eps; Bernoulli.
// signs maps 1-indexed designated arm -> +1/-1 (missing entries default +1).
BanditInstance make_group2_instance(int d, int h, const std::vector<int>& sigma,
                                    const std::map<int, int>& signs, double eps);

// Fixed orthonormal context of d_arms arms; mean 1/2 everywhere except arm
// j_star (1-indexed) at 1/2 + eps; j_star = 0 means no elevated arm.
BanditInstance make_group3_instance(int d_arms, int j_star, double eps);

// Identity permutation helper for group-2 construction.
std::vector<int> identity_permutation(int d);

// Maps a played basis vector back to its 1-indexed arm id in the structured
// families (group1/group2/group3); throws for non-basis vectors.
int arm_id_from_vector(const BanditInstance& instance, const Vector& x);

nlohmann::json instance_to_json(const BanditInstance& instance);
BanditInstance instance_from_json(const nlohmann::json& j);

}  // namespace bandit
