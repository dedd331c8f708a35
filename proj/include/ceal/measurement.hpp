#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ceal/combiner.hpp"
#include "ceal/config_space.hpp"

namespace ceal {

enum class MeasurementStatus { Ok, Failed };
enum class Provenance { Synthetic, External, History };

std::string to_string(MeasurementStatus s);
std::string to_string(Provenance p);
Provenance parse_provenance(const std::string& s);

/// Seconds of wall clock times nodes times cores per node, in core-hours.
double core_hours(double seconds, std::size_t nodes, std::size_t cores_per_node);

/// One whole-workflow run. Construct through make()/failed(); make()
/// derives execution time as the slowest component and computer time from
/// execution time, nodes and cores per node.
struct Measurement {
  Configuration config;
  std::vector<double> component_times;  // seconds, per component
  double exec_time = 0.0;               // seconds
  double computer_time = 0.0;           // core-hours
  std::size_t nodes = 0;
  std::size_t cores_per_node = 0;
  MeasurementStatus status = MeasurementStatus::Failed;
  Provenance provenance = Provenance::Synthetic;
  std::string diagnostic;

  static Measurement make(Configuration config, std::vector<double> component_times, std::size_t nodes,
                          std::size_t cores_per_node, Provenance provenance);
  static Measurement failed(Configuration config, Provenance provenance, std::string diagnostic);

  bool ok() const { return status == MeasurementStatus::Ok; }
  /// Execution or computer time; throws ConfigError for other metrics.
  double metric(MetricKind m) const;
};

/// One standalone component run, in the component's own subspace.
struct ComponentMeasurement {
  std::size_t component = 0;
  Configuration config;
  double exec_time = 0.0;
  double computer_time = 0.0;
  std::size_t nodes = 0;
  std::size_t cores_per_node = 0;
  MeasurementStatus status = MeasurementStatus::Failed;
  Provenance provenance = Provenance::Synthetic;
  std::string diagnostic;

  static ComponentMeasurement make(std::size_t component, Configuration config, double seconds, std::size_t nodes,
                                   std::size_t cores_per_node, Provenance provenance);
  static ComponentMeasurement failed(std::size_t component, Configuration config, Provenance provenance,
                                     std::string diagnostic);

  bool ok() const { return status == MeasurementStatus::Ok; }
  double metric(MetricKind m) const;
};

/// Measurement backend (the "collector").
class Executor {
 public:
  virtual ~Executor() = default;
  virtual Measurement measure(const Configuration& workflow_config) = 0;
  virtual ComponentMeasurement measure_component(std::size_t component, const Configuration& component_config) = 0;
  /// True when measure() may be called from several threads at once.
  virtual bool reentrant() const { return false; }
};

/// Measures a batch, concurrently when the executor allows it. The result
/// is index-aligned with `configs` either way.
std::vector<Measurement> measure_batch(Executor& executor, const std::vector<Configuration>& configs);

}  // namespace ceal
