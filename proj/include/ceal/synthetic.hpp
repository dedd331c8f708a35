#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "ceal/config_space.hpp"
#include "ceal/measurement.hpp"

namespace ceal {

/// Performance surface of one synthetic component:
///
///   t(p, threads) = work / (p * threads)^alpha + overhead * p + comm * log2(max(p, 2))
///
/// The slots point into the component's own parameter subspace. A
/// component without a process-count slot is unconfigurable and always
/// takes `fixed_time` seconds on `fixed_nodes` nodes.
struct SyntheticComponent {
  double work = 0.0;      // seconds * cores
  double alpha = 1.0;     // parallel efficiency exponent, (0, 1]
  double overhead = 0.0;  // seconds per process
  double comm = 0.0;      // seconds per log2(process)
  std::optional<std::size_t> procs_slot;
  std::optional<std::size_t> ppn_slot;
  std::optional<std::size_t> threads_slot;
  double fixed_time = 0.0;
  std::size_t fixed_nodes = 1;

  bool fixed() const { return !procs_slot.has_value(); }
  void validate() const;
};

struct SyntheticWorkflowSpec {
  std::vector<SyntheticComponent> components;  // aligned with the workflow's components
  /// (producer, consumer) component pairs. The slower side of each pair
  /// pays coupling_lambda * |1/t_producer - 1/t_consumer| seconds.
  std::vector<std::pair<std::size_t, std::size_t>> couplings;
  double coupling_lambda = 0.0;  // seconds^2
  double noise_sigma = 0.0;      // lognormal sigma, multiplicative per component
  std::uint64_t seed = 0;
  std::size_t cores_per_node = 36;

  void validate() const;
};

/// Noise-free time of one component at component configuration `cj`.
double synth_component_time(const SyntheticComponent& spec, const Configuration& cj);

/// Nodes a component occupies: ceil(processes / processes-per-node).
std::size_t synth_component_nodes(const SyntheticComponent& spec, const Configuration& cj, std::size_t cores_per_node);

/// A synthetic workflow bound to a concrete workflow parameter layout.
class SyntheticWorkflow {
 public:
  SyntheticWorkflow(SyntheticWorkflowSpec spec, std::vector<ComponentBinding> bindings);

  /// Whole-workflow run. Noise draws are keyed by (noise_seed, c), so the
  /// same configuration always measures the same; noisy=false gives the
  /// ground truth.
  Measurement measure(const Configuration& c, std::uint64_t noise_seed, bool noisy = true) const;
  ComponentMeasurement measure_component(std::size_t component, const Configuration& cj, std::uint64_t noise_seed,
                                         bool noisy = true) const;

  const SyntheticWorkflowSpec& spec() const { return spec_; }
  const std::vector<ComponentBinding>& bindings() const { return bindings_; }

 private:
  SyntheticWorkflowSpec spec_;
  std::vector<ComponentBinding> bindings_;
};

class SyntheticExecutor final : public Executor {
 public:
  SyntheticExecutor(SyntheticWorkflow workflow, std::uint64_t noise_seed)
      : workflow_(std::move(workflow)), noise_seed_(noise_seed) {}

  Measurement measure(const Configuration& c) override { return workflow_.measure(c, noise_seed_); }
  ComponentMeasurement measure_component(std::size_t j, const Configuration& cj) override {
    return workflow_.measure_component(j, cj, noise_seed_);
  }
  bool reentrant() const override { return true; }

  const SyntheticWorkflow& workflow() const { return workflow_; }

 private:
  SyntheticWorkflow workflow_;
  std::uint64_t noise_seed_;
};

/// Noise-free ground truth for a set of configurations.
struct OracleTable {
  std::vector<Configuration> configs;
  std::vector<double> exec_time;
  std::vector<double> computer_time;

  std::size_t size() const { return configs.size(); }
  const std::vector<double>& values(MetricKind m) const;
  double minimum(MetricKind m) const;
  /// 1-based rank of each row under `m` (ties by row order).
  std::vector<std::size_t> ranks(MetricKind m) const;
};

OracleTable brute_force_oracle(const SyntheticWorkflow& workflow, const SamplePool& pool);
/// Enumerates every feasible point; refuses spaces above `limit` points.
OracleTable brute_force_oracle(const SyntheticWorkflow& workflow, const ParameterSpace& space,
                               std::uint64_t limit = 1'000'000);

}  // namespace ceal
