#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace bandit {

// splitmix64 finalizer; used to derive independent stream seeds from a master
// seed and structural indices (grid cell, replication) so parallel workers
// never share a stream.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0) {
  return splitmix64(splitmix64(splitmix64(master) ^ a) ^ b);
}

// Deterministic random stream. The engine is std::mt19937_64 (bit-exact across
// platforms by the standard); every distribution on top of it is hand rolled
// because the standard library's distribution objects are not reproducible
// across implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // Standard normal via Box-Muller; one value per call, nothing cached, so the
  // draw count per event is fixed and replay is exact.
  double normal() {
    double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  double rademacher() { return (next_u64() & 1ULL) ? 1.0 : -1.0; }

  bool bernoulli(double p) { return uniform() < p; }

  // Index drawn proportionally to non-negative weights (need not sum to 1).
  int categorical(const std::vector<double>& weights) {
    double total = 0.0;
    int last_positive = -1;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      double w = weights[i];
      if (!(w >= 0.0) || !std::isfinite(w)) {
        throw std::invalid_argument("categorical: weights must be finite and non-negative");
      }
      total += w;
      if (w > 0.0) last_positive = static_cast<int>(i);
    }
    if (total <= 0.0) throw std::invalid_argument("categorical: total weight must be positive");
    double u = uniform() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      acc += weights[i];
      if (u < acc) return static_cast<int>(i);
    }
    return last_positive;  // floating-point leakage at the right edge
  }

  // Uniform direction on the unit sphere in R^d.
  Eigen::VectorXd unit_sphere(int d) {
    if (d < 1) throw std::invalid_argument("unit_sphere: d must be >= 1");
    Eigen::VectorXd v(d);
    while (true) {
      for (int i = 0; i < d; ++i) v(i) = normal();
      double n = v.norm();
      if (n > 1e-12) return v / n;
    }
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace bandit
