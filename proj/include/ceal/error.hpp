#pragma once

#include <stdexcept>
#include <string>

namespace ceal {

/// Invalid user input: spec files, budgets, hyperparameters, CLI values.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

/// Mismatched shapes between cooperating objects (feature lengths,
/// binding indices, model/binding counts).
class StructuralError : public std::logic_error {
 public:
  explicit StructuralError(const std::string& what) : std::logic_error(what) {}
};

/// No feasible configuration could be produced within the rejection budget.
class InfeasibleSpaceError : public std::runtime_error {
 public:
  explicit InfeasibleSpaceError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ceal
