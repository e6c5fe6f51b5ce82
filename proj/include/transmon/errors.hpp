#pragma once

#include <stdexcept>
#include <string>

namespace transmon {

/// Input outside the domain of a physical relation (e.g. positive anharmonicity).
class DomainError : public std::domain_error {
public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

/// Invalid configuration: bad device/plan values, undersampling, step size too large.
class ConfigError : public std::invalid_argument {
public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

/// Caller misuse such as empty inputs.
class UsageError : public std::invalid_argument {
public:
  explicit UsageError(const std::string& what) : std::invalid_argument(what) {}
};

} // namespace transmon
