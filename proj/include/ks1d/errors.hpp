// SPDX-License-Identifier: Apache-2.0

#ifndef KS1D_ERRORS_HPP
#define KS1D_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace ks1d
{

// Invalid user input: bad sizes, out-of-range parameters, malformed files.
// CLI maps this to exit code 2.
class ConfigError : public std::runtime_error
{
public:
  explicit ConfigError(const std::string &msg) : std::runtime_error(msg) {}
};

// A solver failed to converge or hit a guarded degeneracy (vanishing gap,
// ill-conditioned system, iteration budget exhausted). CLI exit code 3.
class SolverError : public std::runtime_error
{
public:
  explicit SolverError(const std::string &msg) : std::runtime_error(msg) {}
};

// An internal cross-check failed: two routes to the same quantity disagree
// beyond tolerance, or a structural identity is violated. CLI exit code 4.
class ConsistencyError : public std::runtime_error
{
public:
  explicit ConsistencyError(const std::string &msg) : std::runtime_error(msg) {}
};

}  // namespace ks1d

#endif  // KS1D_ERRORS_HPP
