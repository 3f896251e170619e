#pragma once

#include <stdexcept>
#include <string>

namespace bandit {

// Configuration or input mistakes: malformed JSON, unknown keys, inconsistent
// dimensions, out-of-range parameters. The CLI maps these to exit code 1.
class config_error : public std::runtime_error {
 public:
  explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failures: factorizing a matrix that is not positive definite,
// corrupted incremental state, a solver that cannot reach its guarantee.
// The CLI maps these to exit code 2.
class numerical_error : public std::runtime_error {
 public:
  explicit numerical_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace bandit
