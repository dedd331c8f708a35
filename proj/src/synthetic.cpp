#include "ceal/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "ceal/error.hpp"
#include "ceal/kernels.hpp"
#include "ceal/rng.hpp"

namespace ceal {

void SyntheticComponent::validate() const {
  if (fixed()) {
    if (!(fixed_time > 0.0)) throw ConfigError("synthetic: unconfigurable component needs fixed_time > 0");
    if (fixed_nodes == 0) throw ConfigError("synthetic: fixed_nodes must be positive");
    return;
  }
  if (work < 0.0 || overhead < 0.0 || comm < 0.0) throw ConfigError("synthetic: coefficients must be >= 0");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("synthetic: alpha must be in (0,1]");
}

void SyntheticWorkflowSpec::validate() const {
  if (components.empty()) throw ConfigError("synthetic: no components");
  for (const auto& c : components) c.validate();
  for (auto [a, b] : couplings) {
    if (a >= components.size() || b >= components.size() || a == b) throw ConfigError("synthetic: bad coupling pair");
  }
  if (coupling_lambda < 0.0) throw ConfigError("synthetic: coupling_lambda must be >= 0");
  if (noise_sigma < 0.0) throw ConfigError("synthetic: noise_sigma must be >= 0");
  if (cores_per_node == 0) throw ConfigError("synthetic: cores_per_node must be positive");
}

double synth_component_time(const SyntheticComponent& spec, const Configuration& cj) {
  if (spec.fixed()) return spec.fixed_time;
  const double p = cj[*spec.procs_slot];
  if (!(p > 0.0)) throw ConfigError(fmt::format("synthetic: process count must be positive, got {}", p));
  const double threads = spec.threads_slot ? cj[*spec.threads_slot] : 1.0;
  if (!(threads > 0.0)) throw ConfigError("synthetic: thread count must be positive");
  return spec.work / std::pow(p * threads, spec.alpha) + spec.overhead * p +
         spec.comm * std::log2(std::max(p, 2.0));
}

std::size_t synth_component_nodes(const SyntheticComponent& spec, const Configuration& cj,
                                  std::size_t cores_per_node) {
  if (spec.fixed()) return spec.fixed_nodes;
  const double p = cj[*spec.procs_slot];
  const double ppn = spec.ppn_slot ? cj[*spec.ppn_slot] : static_cast<double>(cores_per_node);
  if (!(ppn > 0.0)) throw ConfigError("synthetic: processes per node must be positive");
  return static_cast<std::size_t>(std::ceil(p / ppn));
}

SyntheticWorkflow::SyntheticWorkflow(SyntheticWorkflowSpec spec, std::vector<ComponentBinding> bindings)
    : spec_(std::move(spec)), bindings_(std::move(bindings)) {
  spec_.validate();
  if (bindings_.size() != spec_.components.size()) {
    throw StructuralError("synthetic: one binding per component required");
  }
  for (std::size_t j = 0; j < bindings_.size(); ++j) {
    const auto& c = spec_.components[j];
    const std::size_t n = bindings_[j].indices.size();
    for (auto slot : {c.procs_slot, c.ppn_slot, c.threads_slot}) {
      if (slot && *slot >= n) throw StructuralError("synthetic: role slot outside the component subspace");
    }
  }
}

Measurement SyntheticWorkflow::measure(const Configuration& c, std::uint64_t noise_seed, bool noisy) const {
  const std::size_t J = spec_.components.size();
  std::vector<double> times(J);
  std::size_t nodes = 0;
  Rng rng(derive_seed(noise_seed, "workflow", fingerprint(c)));
  for (std::size_t j = 0; j < J; ++j) {
    const auto cj = project(c, bindings_[j]);
    times[j] = synth_component_time(spec_.components[j], cj);
    nodes += synth_component_nodes(spec_.components[j], cj, spec_.cores_per_node);
    const double z = standard_normal(rng);
    if (noisy && spec_.noise_sigma > 0.0) times[j] *= std::exp(spec_.noise_sigma * z);
  }
  std::vector<double> penalized = times;
  for (auto [a, b] : spec_.couplings) {
    const double pen = spec_.coupling_lambda * std::fabs(1.0 / times[a] - 1.0 / times[b]);
    penalized[times[a] >= times[b] ? a : b] += pen;
  }
  return Measurement::make(c, std::move(penalized), nodes, spec_.cores_per_node, Provenance::Synthetic);
}

ComponentMeasurement SyntheticWorkflow::measure_component(std::size_t component, const Configuration& cj,
                                                          std::uint64_t noise_seed, bool noisy) const {
  if (component >= spec_.components.size()) throw StructuralError("synthetic: component index out of range");
  if (cj.size() != bindings_[component].indices.size()) {
    throw StructuralError("synthetic: component configuration has the wrong length");
  }
  const auto& spec = spec_.components[component];
  double t = synth_component_time(spec, cj);
  if (noisy && spec_.noise_sigma > 0.0) {
    Rng rng(derive_seed(noise_seed, "component", mix64(component) ^ fingerprint(cj)));
    t *= std::exp(spec_.noise_sigma * standard_normal(rng));
  }
  return ComponentMeasurement::make(component, cj, t, synth_component_nodes(spec, cj, spec_.cores_per_node),
                                    spec_.cores_per_node, Provenance::Synthetic);
}

const std::vector<double>& OracleTable::values(MetricKind m) const {
  switch (m) {
    case MetricKind::ExecutionTime: return exec_time;
    case MetricKind::ComputerTime: return computer_time;
    case MetricKind::Throughput: break;
  }
  throw ConfigError("oracle tables hold execution and computer time only");
}

double OracleTable::minimum(MetricKind m) const {
  const auto& v = values(m);
  if (v.empty()) throw ConfigError("empty oracle table");
  return *std::min_element(v.begin(), v.end());
}

std::vector<std::size_t> OracleTable::ranks(MetricKind m) const {
  const auto order = kernels::rank_ascending(values(m));
  std::vector<std::size_t> rank(order.size());
  for (std::size_t r = 0; r < order.size(); ++r) rank[order[r]] = r + 1;
  return rank;
}

namespace {

OracleTable evaluate_all(const SyntheticWorkflow& workflow, std::vector<Configuration> configs) {
  OracleTable t;
  t.exec_time.resize(configs.size());
  t.computer_time.resize(configs.size());
  kernels::parallel::for_each_index(configs.size(), [&](std::size_t i) {
    const auto m = workflow.measure(configs[i], 0, /*noisy=*/false);
    t.exec_time[i] = m.exec_time;
    t.computer_time[i] = m.computer_time;
  });
  t.configs = std::move(configs);
  return t;
}

}  // namespace

OracleTable brute_force_oracle(const SyntheticWorkflow& workflow, const SamplePool& pool) {
  return evaluate_all(workflow, pool.entries());
}

OracleTable brute_force_oracle(const SyntheticWorkflow& workflow, const ParameterSpace& space, std::uint64_t limit) {
  std::vector<Configuration> all;
  enumerate_feasible(space, [&](const Configuration& c) { all.push_back(c); }, limit);
  return evaluate_all(workflow, std::move(all));
}

}  // namespace ceal
