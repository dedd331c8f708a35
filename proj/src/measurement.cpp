#include "ceal/measurement.hpp"

#include <algorithm>
#include <cmath>

#include "ceal/error.hpp"
#include "ceal/kernels.hpp"

namespace ceal {

std::string to_string(MeasurementStatus s) { return s == MeasurementStatus::Ok ? "ok" : "failed"; }

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::Synthetic: return "synthetic";
    case Provenance::External: return "external";
    case Provenance::History: return "history";
  }
  return "?";
}

Provenance parse_provenance(const std::string& s) {
  if (s == "synthetic") return Provenance::Synthetic;
  if (s == "external") return Provenance::External;
  if (s == "history") return Provenance::History;
  throw ConfigError("unknown provenance '" + s + "'");
}

double core_hours(double seconds, std::size_t nodes, std::size_t cores_per_node) {
  return seconds * static_cast<double>(nodes) * static_cast<double>(cores_per_node) / 3600.0;
}

Measurement Measurement::make(Configuration config, std::vector<double> component_times, std::size_t nodes,
                              std::size_t cores_per_node, Provenance provenance) {
  if (component_times.empty()) throw ConfigError("measurement needs at least one component time");
  for (double t : component_times) {
    if (!std::isfinite(t) || t <= 0.0) throw ConfigError("component times must be finite and positive");
  }
  if (nodes == 0 || cores_per_node == 0) throw ConfigError("measurement needs positive nodes and cores per node");
  Measurement m;
  m.config = std::move(config);
  m.component_times = std::move(component_times);
  m.exec_time = *std::max_element(m.component_times.begin(), m.component_times.end());
  m.computer_time = core_hours(m.exec_time, nodes, cores_per_node);
  m.nodes = nodes;
  m.cores_per_node = cores_per_node;
  m.status = MeasurementStatus::Ok;
  m.provenance = provenance;
  return m;
}

Measurement Measurement::failed(Configuration config, Provenance provenance, std::string diagnostic) {
  Measurement m;
  m.config = std::move(config);
  m.status = MeasurementStatus::Failed;
  m.provenance = provenance;
  m.diagnostic = std::move(diagnostic);
  return m;
}

double Measurement::metric(MetricKind m) const {
  switch (m) {
    case MetricKind::ExecutionTime: return exec_time;
    case MetricKind::ComputerTime: return computer_time;
    case MetricKind::Throughput: break;
  }
  throw ConfigError("measurements carry execution and computer time only");
}

ComponentMeasurement ComponentMeasurement::make(std::size_t component, Configuration config, double seconds,
                                                std::size_t nodes, std::size_t cores_per_node, Provenance provenance) {
  if (!std::isfinite(seconds) || seconds <= 0.0) throw ConfigError("component time must be finite and positive");
  if (nodes == 0 || cores_per_node == 0) throw ConfigError("component run needs positive nodes and cores per node");
  ComponentMeasurement m;
  m.component = component;
  m.config = std::move(config);
  m.exec_time = seconds;
  m.computer_time = core_hours(seconds, nodes, cores_per_node);
  m.nodes = nodes;
  m.cores_per_node = cores_per_node;
  m.status = MeasurementStatus::Ok;
  m.provenance = provenance;
  return m;
}

ComponentMeasurement ComponentMeasurement::failed(std::size_t component, Configuration config, Provenance provenance,
                                                  std::string diagnostic) {
  ComponentMeasurement m;
  m.component = component;
  m.config = std::move(config);
  m.provenance = provenance;
  m.diagnostic = std::move(diagnostic);
  return m;
}

double ComponentMeasurement::metric(MetricKind m) const {
  switch (m) {
    case MetricKind::ExecutionTime: return exec_time;
    case MetricKind::ComputerTime: return computer_time;
    case MetricKind::Throughput: break;
  }
  throw ConfigError("measurements carry execution and computer time only");
}

std::vector<Measurement> measure_batch(Executor& executor, const std::vector<Configuration>& configs) {
  std::vector<Measurement> out(configs.size());
  if (executor.reentrant()) {
    kernels::parallel::for_each_index(configs.size(), [&](std::size_t i) { out[i] = executor.measure(configs[i]); });
  } else {
    for (std::size_t i = 0; i < configs.size(); ++i) out[i] = executor.measure(configs[i]);
  }
  return out;
}

}  // namespace ceal
