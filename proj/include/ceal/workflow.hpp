#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ceal/combiner.hpp"
#include "ceal/config_space.hpp"
#include "ceal/external.hpp"
#include "ceal/synthetic.hpp"

namespace ceal {

struct Component {
  std::string name;
  std::vector<std::size_t> binding;  // workflow-space indices, component order
  ParameterSpace space;              // subspace over `binding`
  std::optional<std::filesystem::path> history_file;

  bool configurable() const { return !binding.empty(); }
};

struct ExternalSpec {
  std::string command;
  double timeout_s = 600.0;
  std::map<std::string, std::string> component_commands;  // by component name
};

/// A workflow description: its joint parameter space, component
/// structure, optimization metric and measurement backends.
struct Workflow {
  std::string name;
  ParameterSpace space;
  std::vector<Component> components;
  MetricKind metric = MetricKind::ExecutionTime;
  std::optional<Configuration> reference;  // e.g. an expert-recommended configuration
  std::optional<SyntheticWorkflowSpec> synthetic;
  std::optional<ExternalSpec> external;

  /// Bindings of all components, in component order.
  std::vector<ComponentBinding> bindings() const;
  /// Indices of the components that have tunable parameters.
  std::vector<std::size_t> configurable_components() const;
};

/// Parses a workflow description. Relative history paths resolve against
/// `base_dir`. Unknown fields are rejected with ConfigError.
Workflow parse_workflow(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
Workflow load_workflow(const std::filesystem::path& path);

SyntheticWorkflow make_synthetic(const Workflow& wf);

enum class ExecutorKind { Synthetic, External };
ExecutorKind parse_executor_kind(const std::string& s);

/// Executor for `wf`. Synthetic executors draw noise from `noise_seed`
/// combined with the synthetic section's seed.
std::unique_ptr<Executor> make_executor(const Workflow& wf, ExecutorKind kind, std::uint64_t noise_seed);

}  // namespace ceal
