#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ceal/expression.hpp"
#include "ceal/rng.hpp"

namespace ceal {

/// One tunable dimension: an ordered, strictly increasing list of numeric
/// option values.
class Parameter {
 public:
  Parameter(std::string name, std::vector<double> options);
  /// Arithmetic range lo, lo+step, ..., expanding to floor((hi-lo)/step)+1 values.
  static Parameter range(std::string name, double lo, double hi, double step);

  const std::string& name() const { return name_; }
  const std::vector<double>& options() const { return options_; }
  std::size_t size() const { return options_.size(); }
  /// Index of `value` in the domain, if it is a member.
  std::optional<std::size_t> index_of(double value) const;

 private:
  std::string name_;
  std::vector<double> options_;
};

/// Feasibility predicate, declared by parameter names. Resolved against a
/// ParameterSpace into a Constraint.
struct ConstraintSpec {
  enum class Kind { ProductLe, LinearLe, Expression };
  Kind kind = Kind::ProductLe;
  std::vector<std::string> operands;  // unused for Expression (derived from text)
  std::vector<double> coefficients;   // LinearLe only; defaults to all 1
  double bound = 0.0;
  std::string expression;             // Expression only

  static ConstraintSpec product_le(std::vector<std::string> names, double bound);
  static ConstraintSpec linear_le(std::vector<std::string> names, std::vector<double> coefficients, double bound);
  static ConstraintSpec expr(std::string text);

  /// All parameter names the predicate reads.
  std::vector<std::string> referenced_names() const;
};

class Constraint {
 public:
  Constraint(const ConstraintSpec& spec, std::span<const std::string> names);

  bool satisfied(std::span<const double> values) const;
  const ConstraintSpec& spec() const { return spec_; }

 private:
  ConstraintSpec spec_;
  std::vector<std::size_t> slots_;
  std::optional<Expression> expr_;
};

struct Configuration {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  bool operator==(const Configuration&) const = default;
  auto operator<=>(const Configuration&) const = default;
};

/// Stable 64-bit fingerprint of the bit patterns of the values.
std::uint64_t fingerprint(const Configuration& c);

struct ConfigurationHash {
  std::size_t operator()(const Configuration& c) const { return static_cast<std::size_t>(fingerprint(c)); }
};

struct SpaceSize {
  std::uint64_t count = 1;
  bool saturated = false;  // true when the product exceeds 2^64-1
};

class ParameterSpace {
 public:
  ParameterSpace() = default;
  ParameterSpace(std::vector<Parameter> parameters, std::vector<ConstraintSpec> constraints = {});

  const std::vector<Parameter>& parameters() const { return parameters_; }
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<Constraint>& constraints() const { return constraints_; }
  std::size_t dimension() const { return parameters_.size(); }
  std::optional<std::size_t> index_of(const std::string& name) const;

  bool contains(const Configuration& c) const;  // every value is in its domain
  bool feasible(const Configuration& c) const;  // contains() and all constraints hold
  bool feasible_values(std::span<const double> values) const;

  /// Space restricted to `indices` (in that order). Keeps exactly the
  /// constraints whose operands all lie inside the subspace.
  ParameterSpace subspace(std::span<const std::size_t> indices) const;

  /// Hex fingerprint over names, domains and constraints.
  std::string fingerprint() const;

 private:
  std::vector<Parameter> parameters_;
  std::vector<std::string> names_;
  std::vector<ConstraintSpec> constraint_specs_;
  std::vector<Constraint> constraints_;
};

/// Which workflow-space parameters belong to one component, in component order.
struct ComponentBinding {
  std::size_t component = 0;
  std::vector<std::size_t> indices;
};

/// Distinct feasible configurations drawn from a space; entries are moved
/// out (consumed) monotonically by the tuners.
class SamplePool {
 public:
  SamplePool() = default;
  explicit SamplePool(std::vector<Configuration> entries, std::size_t requested = 0);

  std::size_t size() const { return entries_.size(); }
  const Configuration& operator[](std::size_t i) const { return entries_[i]; }
  const std::vector<Configuration>& entries() const { return entries_; }

  bool consumed(std::size_t i) const { return consumed_[i]; }
  void consume(std::size_t i);
  std::size_t remaining() const { return remaining_; }
  std::vector<std::size_t> remaining_indices() const;

  /// Number of configurations asked for when building; larger than size()
  /// when the space held fewer feasible points.
  std::size_t requested() const { return requested_; }
  bool truncated() const { return requested_ > entries_.size(); }

  /// Order-sensitive fingerprint of the entries (hex), used to verify that
  /// paired runs share a pool.
  std::string fingerprint() const;

 private:
  std::vector<Configuration> entries_;
  std::vector<bool> consumed_;
  std::size_t remaining_ = 0;
  std::size_t requested_ = 0;
};

// ---- operations ----

/// Unconstrained Cartesian cardinality; saturates at 2^64-1 with a flag.
SpaceSize space_size(const ParameterSpace& space);

/// Monte-Carlo estimate of the fraction of unconstrained points that
/// satisfy every constraint. Deterministic in `seed`.
double feasible_fraction_estimate(const ParameterSpace& space, std::size_t sample_count, std::uint64_t seed);

/// Exact feasible fraction by enumeration; nullopt when the space has more
/// than `limit` points.
std::optional<double> feasible_fraction_exact(const ParameterSpace& space, std::uint64_t limit = 10'000'000);

/// Calls `visit` for every feasible point in lexicographic index order.
/// Throws ConfigError if the unconstrained size exceeds `limit`.
void enumerate_feasible(const ParameterSpace& space, const std::function<void(const Configuration&)>& visit,
                        std::uint64_t limit = 10'000'000);

inline constexpr std::size_t kDefaultRejectionBudget = 10'000;

/// Uniform per-dimension draw with rejection on constraint violation.
/// Throws InfeasibleSpaceError after `max_attempts` rejections.
Configuration random_configuration(const ParameterSpace& space, Rng& rng,
                                   std::size_t max_attempts = kDefaultRejectionBudget);

/// ceil(-n * ln(1 - P)): pool size whose best entry lies in the top 1/n of
/// the space with probability at least P.
std::size_t pool_size_for(double n, double probability);

/// `p` distinct feasible configurations. If the space has fewer feasible
/// points, all of them are returned and the pool reports truncated().
SamplePool build_pool(const ParameterSpace& space, std::size_t p, Rng& rng);

/// Component-subspace view of a workflow configuration.
Configuration project(const Configuration& config, const ComponentBinding& binding);

}  // namespace ceal
