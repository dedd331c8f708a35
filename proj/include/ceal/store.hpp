#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ceal/config_space.hpp"
#include "ceal/measurement.hpp"

namespace ceal {

/// One stored measurement. Workflow records carry per-component times;
/// component (history) records leave them empty.
struct StoreRecord {
  std::string space;  // ParameterSpace::fingerprint() of the space `values` lives in
  Configuration config;
  double exec_time = 0.0;
  double computer_time = 0.0;
  std::vector<double> component_times;
  std::size_t nodes = 0;
  std::size_t cores_per_node = 0;
  Provenance provenance = Provenance::Synthetic;

  bool operator==(const StoreRecord&) const = default;
};

StoreRecord to_record(const std::string& space, const Measurement& m);
StoreRecord to_record(const std::string& space, const ComponentMeasurement& m);

/// One JSON object per line.
std::string format_record(const StoreRecord& r);
/// nullopt on malformed input.
std::optional<StoreRecord> parse_record(const std::string& line, std::string* error = nullptr);

/// Append-only log of measurements keyed by (space fingerprint,
/// configuration). With a backing file every accepted append is written
/// through; reopening the file replays the log.
class MeasurementStore {
 public:
  MeasurementStore() = default;
  /// Opens (creating if absent) a log file and replays it. Corrupt lines
  /// are skipped and counted.
  explicit MeasurementStore(std::string path);

  /// Returns the stored record: the existing one for a duplicate key
  /// unless `force` is set, in which case the new record replaces it in
  /// the index and is appended to the log.
  const StoreRecord& append(const StoreRecord& r, bool force = false);
  std::optional<StoreRecord> lookup(const std::string& space, const Configuration& c) const;

  std::size_t size() const { return index_.size(); }
  std::size_t log_size() const { return log_.size(); }
  std::size_t skipped_lines() const { return skipped_; }
  const std::vector<StoreRecord>& log() const { return log_; }

 private:
  using Key = std::pair<std::string, Configuration>;
  std::string path_;
  std::vector<StoreRecord> log_;
  std::map<Key, std::size_t> index_;  // key -> position in log_
  std::size_t skipped_ = 0;
};

/// (configuration, metric values) samples of one component.
struct ComponentSample {
  Configuration config;
  double exec_time = 0.0;
  double computer_time = 0.0;

  double metric(MetricKind m) const { return m == MetricKind::ComputerTime ? computer_time : exec_time; }
};

struct HistoryImport {
  std::vector<ComponentSample> samples;
  std::size_t skipped_corrupt = 0;  // unparsable lines
  std::size_t skipped_foreign = 0;  // other space fingerprints, or values outside the space
};

/// Loads component history from a store-format file, keeping the records
/// whose fingerprint matches `space`. Never throws on bad lines.
HistoryImport import_history(const std::string& path, const ParameterSpace& space);

/// Writes `samples` as history records for `space`, replacing the file.
void write_history(const std::string& path, const ParameterSpace& space, const std::vector<ComponentSample>& samples);

}  // namespace ceal
