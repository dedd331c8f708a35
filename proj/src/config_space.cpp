#include "ceal/config_space.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <unordered_set>

#include <fmt/format.h>

#include "ceal/error.hpp"

namespace ceal {

Parameter::Parameter(std::string name, std::vector<double> options)
    : name_(std::move(name)), options_(std::move(options)) {
  if (name_.empty()) throw ConfigError("parameter name must be non-empty");
  if (options_.empty()) throw ConfigError("parameter '" + name_ + "' has an empty domain");
  for (std::size_t i = 0; i < options_.size(); ++i) {
    if (!std::isfinite(options_[i])) throw ConfigError("parameter '" + name_ + "' has a non-finite option");
    if (i > 0 && !(options_[i - 1] < options_[i])) {
      throw ConfigError("parameter '" + name_ + "' options must be strictly increasing and duplicate-free");
    }
  }
}

Parameter Parameter::range(std::string name, double lo, double hi, double step) {
  if (!(step > 0.0) || !(hi >= lo) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw ConfigError("parameter '" + name + "': invalid range");
  }
  const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  std::vector<double> opts;
  opts.reserve(count);
  for (std::size_t k = 0; k < count; ++k) opts.push_back(lo + static_cast<double>(k) * step);
  return Parameter(std::move(name), std::move(opts));
}

std::optional<std::size_t> Parameter::index_of(double value) const {
  auto it = std::lower_bound(options_.begin(), options_.end(), value);
  if (it == options_.end() || *it != value) return std::nullopt;
  return static_cast<std::size_t>(it - options_.begin());
}

ConstraintSpec ConstraintSpec::product_le(std::vector<std::string> names, double bound) {
  ConstraintSpec s;
  s.kind = Kind::ProductLe;
  s.operands = std::move(names);
  s.bound = bound;
  return s;
}

ConstraintSpec ConstraintSpec::linear_le(std::vector<std::string> names, std::vector<double> coefficients,
                                         double bound) {
  ConstraintSpec s;
  s.kind = Kind::LinearLe;
  s.operands = std::move(names);
  s.coefficients = std::move(coefficients);
  s.bound = bound;
  return s;
}

ConstraintSpec ConstraintSpec::expr(std::string text) {
  ConstraintSpec s;
  s.kind = Kind::Expression;
  s.expression = std::move(text);
  return s;
}

std::vector<std::string> ConstraintSpec::referenced_names() const {
  if (kind == Kind::Expression) return expression_identifiers(expression);
  return operands;
}

Constraint::Constraint(const ConstraintSpec& spec, std::span<const std::string> names) : spec_(spec) {
  if (spec_.kind == ConstraintSpec::Kind::Expression) {
    expr_ = Expression::parse(spec_.expression, names);
    return;
  }
  if (spec_.operands.empty()) throw ConfigError("constraint needs at least one operand");
  for (const auto& op : spec_.operands) {
    auto it = std::find(names.begin(), names.end(), op);
    if (it == names.end()) throw ConfigError("constraint references unknown parameter '" + op + "'");
    slots_.push_back(static_cast<std::size_t>(it - names.begin()));
  }
  if (spec_.kind == ConstraintSpec::Kind::LinearLe) {
    if (spec_.coefficients.empty()) spec_.coefficients.assign(slots_.size(), 1.0);
    if (spec_.coefficients.size() != slots_.size()) {
      throw ConfigError("linear constraint: coefficient count does not match operand count");
    }
  }
}

bool Constraint::satisfied(std::span<const double> values) const {
  switch (spec_.kind) {
    case ConstraintSpec::Kind::ProductLe: {
      double prod = 1.0;
      for (auto s : slots_) prod *= values[s];
      return prod <= spec_.bound;
    }
    case ConstraintSpec::Kind::LinearLe: {
      double sum = 0.0;
      for (std::size_t k = 0; k < slots_.size(); ++k) sum += spec_.coefficients[k] * values[slots_[k]];
      return sum <= spec_.bound;
    }
    case ConstraintSpec::Kind::Expression:
      return expr_->holds(values);
  }
  return false;
}

std::uint64_t fingerprint(const Configuration& c) {
  std::uint64_t h = 0x84222325cbf29ce4ULL ^ c.values.size();
  for (double v : c.values) h = mix64(h ^ std::bit_cast<std::uint64_t>(v + 0.0));  // +0.0 folds -0 into 0
  return h;
}

ParameterSpace::ParameterSpace(std::vector<Parameter> parameters, std::vector<ConstraintSpec> constraints)
    : parameters_(std::move(parameters)), constraint_specs_(std::move(constraints)) {
  for (const auto& p : parameters_) {
    if (std::find(names_.begin(), names_.end(), p.name()) != names_.end()) {
      throw ConfigError("duplicate parameter name '" + p.name() + "'");
    }
    names_.push_back(p.name());
  }
  constraints_.reserve(constraint_specs_.size());
  for (const auto& cs : constraint_specs_) constraints_.emplace_back(cs, names_);
}

std::optional<std::size_t> ParameterSpace::index_of(const std::string& name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names_.begin());
}

bool ParameterSpace::contains(const Configuration& c) const {
  if (c.size() != parameters_.size()) return false;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (!parameters_[i].index_of(c[i])) return false;
  }
  return true;
}

bool ParameterSpace::feasible_values(std::span<const double> values) const {
  for (const auto& con : constraints_) {
    if (!con.satisfied(values)) return false;
  }
  return true;
}

bool ParameterSpace::feasible(const Configuration& c) const { return contains(c) && feasible_values(c.values); }

ParameterSpace ParameterSpace::subspace(std::span<const std::size_t> indices) const {
  std::vector<Parameter> params;
  std::vector<std::string> kept;
  for (auto i : indices) {
    if (i >= parameters_.size()) throw StructuralError("subspace index out of range");
    params.push_back(parameters_[i]);
    kept.push_back(names_[i]);
  }
  std::vector<ConstraintSpec> cons;
  for (const auto& cs : constraint_specs_) {
    const auto refs = cs.referenced_names();
    const bool inside = std::all_of(refs.begin(), refs.end(), [&](const std::string& n) {
      return std::find(kept.begin(), kept.end(), n) != kept.end();
    });
    if (inside) cons.push_back(cs);
  }
  return ParameterSpace(std::move(params), std::move(cons));
}

std::string ParameterSpace::fingerprint() const {
  std::uint64_t h = fnv1a("ceal-space-v1");
  for (const auto& p : parameters_) {
    h = fnv1a(p.name(), h);
    for (double v : p.options()) h = mix64(h ^ std::bit_cast<std::uint64_t>(v));
  }
  for (const auto& cs : constraint_specs_) {
    h = mix64(h ^ static_cast<std::uint64_t>(cs.kind));
    for (const auto& n : cs.operands) h = fnv1a(n, h);
    for (double v : cs.coefficients) h = mix64(h ^ std::bit_cast<std::uint64_t>(v));
    h = mix64(h ^ std::bit_cast<std::uint64_t>(cs.bound));
    h = fnv1a(cs.expression, h);
  }
  return fmt::format("{:016x}", h);
}

SamplePool::SamplePool(std::vector<Configuration> entries, std::size_t requested)
    : entries_(std::move(entries)),
      consumed_(entries_.size(), false),
      remaining_(entries_.size()),
      requested_(std::max(requested, entries_.size())) {
  std::unordered_set<Configuration, ConfigurationHash> seen;
  for (const auto& e : entries_) {
    if (!seen.insert(e).second) throw ConfigError("sample pool entries must be distinct");
  }
}

void SamplePool::consume(std::size_t i) {
  if (i >= entries_.size()) throw StructuralError("pool index out of range");
  if (consumed_[i]) throw StructuralError("pool entry already consumed");
  consumed_[i] = true;
  --remaining_;
}

std::vector<std::size_t> SamplePool::remaining_indices() const {
  std::vector<std::size_t> out;
  out.reserve(remaining_);
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (!consumed_[i]) out.push_back(i);
  }
  return out;
}

std::string SamplePool::fingerprint() const {
  std::uint64_t h = fnv1a("ceal-pool-v1");
  for (const auto& e : entries_) h = mix64(h ^ ceal::fingerprint(e));
  return fmt::format("{:016x}", h);
}

SpaceSize space_size(const ParameterSpace& space) {
  SpaceSize s;
  for (const auto& p : space.parameters()) {
    const std::uint64_t n = p.size();
    if (s.saturated || s.count > std::numeric_limits<std::uint64_t>::max() / n) {
      s.count = std::numeric_limits<std::uint64_t>::max();
      s.saturated = true;
    } else {
      s.count *= n;
    }
  }
  return s;
}

namespace {

Configuration draw_unconstrained(const ParameterSpace& space, Rng& rng) {
  Configuration c;
  c.values.reserve(space.dimension());
  for (const auto& p : space.parameters()) c.values.push_back(p.options()[uniform_index(rng, p.size())]);
  return c;
}

}  // namespace

double feasible_fraction_estimate(const ParameterSpace& space, std::size_t sample_count, std::uint64_t seed) {
  if (sample_count == 0) throw ConfigError("feasible_fraction_estimate: sample_count must be >= 1");
  if (space.constraints().empty()) return 1.0;
  Rng rng(seed);
  std::size_t ok = 0;
  for (std::size_t i = 0; i < sample_count; ++i) {
    if (space.feasible_values(draw_unconstrained(space, rng).values)) ++ok;
  }
  return static_cast<double>(ok) / static_cast<double>(sample_count);
}

void enumerate_feasible(const ParameterSpace& space, const std::function<void(const Configuration&)>& visit,
                        std::uint64_t limit) {
  const auto sz = space_size(space);
  if (sz.saturated || sz.count > limit) {
    throw ConfigError(fmt::format("space too large to enumerate ({} points, limit {})", sz.count, limit));
  }
  const auto& params = space.parameters();
  std::vector<std::size_t> idx(params.size(), 0);
  Configuration c;
  c.values.resize(params.size());
  for (std::uint64_t k = 0; k < sz.count; ++k) {
    for (std::size_t d = 0; d < params.size(); ++d) c.values[d] = params[d].options()[idx[d]];
    if (space.feasible_values(c.values)) visit(c);
    // odometer increment, last dimension fastest
    for (std::size_t d = params.size(); d-- > 0;) {
      if (++idx[d] < params[d].size()) break;
      idx[d] = 0;
    }
  }
}

std::optional<double> feasible_fraction_exact(const ParameterSpace& space, std::uint64_t limit) {
  const auto sz = space_size(space);
  if (sz.saturated || sz.count > limit) return std::nullopt;
  std::uint64_t ok = 0;
  enumerate_feasible(space, [&](const Configuration&) { ++ok; }, limit);
  return static_cast<double>(ok) / static_cast<double>(sz.count);
}

Configuration random_configuration(const ParameterSpace& space, Rng& rng, std::size_t max_attempts) {
  for (std::size_t attempt = 0; attempt < max_attempts; ++attempt) {
    auto c = draw_unconstrained(space, rng);
    if (space.feasible_values(c.values)) return c;
  }
  throw InfeasibleSpaceError(
      fmt::format("no feasible configuration found in {} attempts", max_attempts));
}

std::size_t pool_size_for(double n, double probability) {
  if (!(n >= 1.0)) throw ConfigError("pool_size_for: n must be >= 1");
  if (!(probability > 0.0)) throw ConfigError("pool_size_for: probability must be > 0");
  if (!(probability < 1.0)) throw ConfigError("pool_size_for: probability must be < 1 (infinite pool)");
  return static_cast<std::size_t>(std::ceil(-n * std::log1p(-probability)));
}

SamplePool build_pool(const ParameterSpace& space, std::size_t p, Rng& rng) {
  if (p == 0) throw ConfigError("build_pool: pool size must be >= 1");

  // spaces near p: exact enumeration
  const auto sz = space_size(space);
  const std::uint64_t enumerate_below = std::min<std::uint64_t>(1u << 20, 8 * static_cast<std::uint64_t>(p));
  if (!sz.saturated && sz.count <= enumerate_below) {
    std::vector<Configuration> all;
    enumerate_feasible(space, [&](const Configuration& c) { all.push_back(c); });
    if (all.size() <= p) {
      for (std::size_t i = all.size(); i > 1; --i) std::swap(all[i - 1], all[uniform_index(rng, i)]);
      return SamplePool(std::move(all), p);
    }
  }

  std::vector<Configuration> entries;
  std::unordered_set<Configuration, ConfigurationHash> seen;
  entries.reserve(p);
  const std::size_t max_streak = std::max<std::size_t>(1000, 50 * p);
  std::size_t streak = 0;
  while (entries.size() < p && streak < max_streak) {
    auto c = random_configuration(space, rng);
    if (seen.insert(c).second) {
      entries.push_back(std::move(c));
      streak = 0;
    } else {
      ++streak;
    }
  }
  return SamplePool(std::move(entries), p);
}

Configuration project(const Configuration& config, const ComponentBinding& binding) {
  Configuration out;
  out.values.reserve(binding.indices.size());
  for (auto i : binding.indices) {
    if (i >= config.size()) {
      throw StructuralError(fmt::format("binding index {} out of range for configuration of size {}", i,
                                        config.size()));
    }
    out.values.push_back(config.values[i]);
  }
  return out;
}

}  // namespace ceal
