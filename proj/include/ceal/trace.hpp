#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ceal/config_space.hpp"
#include "ceal/measurement.hpp"

namespace ceal {

struct BudgetRecord {
  std::size_t m = 0;
  std::size_t m_r = 0;
  std::size_t m_0 = 0;
  std::size_t iters = 0;
};

/// How a configuration entered a batch.
enum class SelectionSource { Random, LowFidelity, HighFidelity, Graph };
std::string to_string(SelectionSource s);
SelectionSource parse_selection_source(const std::string& s);

struct SelectedEntry {
  std::size_t pool_index = 0;
  SelectionSource source = SelectionSource::Random;
  Measurement measurement;
};

struct SwitchCheck {
  double s_high = 0.0;
  double s_low = 0.0;
  bool switched = false;
};

struct IterationRecord {
  std::size_t index = 0;          // 1-based; GEIST-like bootstrap batch is 0
  std::string evaluator;          // evaluator in force after this iteration's update
  std::vector<SelectedEntry> entries;  // in measurement order, failures included
  std::optional<SwitchCheck> check;

  std::size_t measured() const;
  std::size_t failed() const;
};

struct ComponentPhaseRecord {
  std::size_t charged = 0;
  std::vector<ComponentMeasurement> runs;         // charged runs, all components
  std::vector<ComponentMeasurement> fixed_runs;   // uncharged runs of unconfigurable components
  std::vector<std::size_t> history_rows;          // per component
  std::vector<double> fixed_offsets;              // per component, 0 for configurable ones
};

struct BestRecord {
  std::size_t pool_index = 0;
  Configuration config;
  double predicted = 0.0;
};

struct VerificationRecord {
  Measurement measurement;
  bool charged = false;
};

/// Complete audit of one tuner run.
struct TuningTrace {
  std::string algorithm;
  std::uint64_t seed = 0;
  BudgetRecord budget;
  std::string metric;
  std::string pool_fingerprint;
  std::size_t pool_size = 0;
  ComponentPhaseRecord component_phase;
  std::vector<IterationRecord> iterations;
  std::optional<std::size_t> switch_iteration;
  BestRecord best;
  std::optional<VerificationRecord> verification;

  std::size_t workflow_runs() const;  // successful workflow measurements
  std::size_t charged() const { return component_phase.charged + workflow_runs(); }
  /// Sum of the training runs' cost in `metric` units: component runs plus
  /// workflow runs, failures excluded.
  double training_cost(MetricKind metric) const;
  /// Successful workflow measurements in the order taken.
  std::vector<const Measurement*> measurements() const;
};

nlohmann::json to_json(const Measurement& m);
Measurement measurement_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ComponentMeasurement& m);
ComponentMeasurement component_measurement_from_json(const nlohmann::json& j);

nlohmann::json to_json(const TuningTrace& t);
TuningTrace trace_from_json(const nlohmann::json& j);
/// Canonical text: two-space indented JSON with a trailing newline.
std::string dump_trace(const TuningTrace& t);
void save_trace(const std::string& path, const TuningTrace& t);
TuningTrace load_trace(const std::string& path);

/// Serves measurements recorded in a (possibly partial) trace and forwards
/// everything else to the wrapped executor. Re-running a tuner with the
/// same inputs through this executor resumes it: recorded runs are not
/// repeated.
class ReplayExecutor final : public Executor {
 public:
  ReplayExecutor(const TuningTrace& recorded, Executor& inner);

  Measurement measure(const Configuration& c) override;
  ComponentMeasurement measure_component(std::size_t j, const Configuration& cj) override;
  bool reentrant() const override { return false; }

  std::size_t replayed() const { return replayed_; }
  std::size_t forwarded() const { return forwarded_; }

 private:
  std::map<Configuration, std::vector<Measurement>> workflow_;
  std::map<std::pair<std::size_t, Configuration>, std::vector<ComponentMeasurement>> components_;
  Executor& inner_;
  std::size_t replayed_ = 0;
  std::size_t forwarded_ = 0;
};

}  // namespace ceal
