#include "ceal/store.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "ceal/error.hpp"

namespace ceal {

StoreRecord to_record(const std::string& space, const Measurement& m) {
  if (!m.ok()) throw ConfigError("only successful measurements can be stored");
  return {space, m.config, m.exec_time, m.computer_time, m.component_times, m.nodes, m.cores_per_node, m.provenance};
}

StoreRecord to_record(const std::string& space, const ComponentMeasurement& m) {
  if (!m.ok()) throw ConfigError("only successful measurements can be stored");
  return {space, m.config, m.exec_time, m.computer_time, {}, m.nodes, m.cores_per_node, m.provenance};
}

std::string format_record(const StoreRecord& r) {
  nlohmann::json j = {
      {"space", r.space},
      {"values", r.config.values},
      {"exec_s", r.exec_time},
      {"computer_ch", r.computer_time},
      {"comp_times", r.component_times},
      {"nodes", r.nodes},
      {"cores_per_node", r.cores_per_node},
      {"provenance", to_string(r.provenance)},
  };
  return j.dump();
}

std::optional<StoreRecord> parse_record(const std::string& line, std::string* error) {
  try {
    const auto j = nlohmann::json::parse(line);
    StoreRecord r;
    r.space = j.at("space").get<std::string>();
    r.config.values = j.at("values").get<std::vector<double>>();
    r.exec_time = j.at("exec_s").get<double>();
    r.computer_time = j.at("computer_ch").get<double>();
    r.component_times = j.value("comp_times", std::vector<double>{});
    r.nodes = j.value("nodes", std::size_t{0});
    r.cores_per_node = j.value("cores_per_node", std::size_t{0});
    r.provenance = parse_provenance(j.at("provenance").get<std::string>());
    if (!(r.exec_time > 0.0) || !(r.computer_time >= 0.0)) throw ConfigError("non-positive metric");
    return r;
  } catch (const std::exception& e) {
    if (error) *error = e.what();
    return std::nullopt;
  }
}

MeasurementStore::MeasurementStore(std::string path) : path_(std::move(path)) {
  std::ifstream in(path_);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto r = parse_record(line);
    if (!r) {
      ++skipped_;
      continue;
    }
    // replay: the last forced write of a key wins, exactly as when appended
    Key key{r->space, r->config};
    log_.push_back(std::move(*r));
    index_[std::move(key)] = log_.size() - 1;
  }
}

const StoreRecord& MeasurementStore::append(const StoreRecord& r, bool force) {
  Key key{r.space, r.config};
  auto it = index_.find(key);
  if (it != index_.end() && !force) return log_[it->second];
  log_.push_back(r);
  index_[std::move(key)] = log_.size() - 1;
  if (!path_.empty()) {
    std::ofstream out(path_, std::ios::app);
    if (!out) throw ConfigError("cannot append to store " + path_);
    out << format_record(r) << '\n';
  }
  return log_.back();
}

std::optional<StoreRecord> MeasurementStore::lookup(const std::string& space, const Configuration& c) const {
  auto it = index_.find(Key{space, c});
  if (it == index_.end()) return std::nullopt;
  return log_[it->second];
}

HistoryImport import_history(const std::string& path, const ParameterSpace& space) {
  HistoryImport out;
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read history file " + path);
  const auto fp = space.fingerprint();
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto r = parse_record(line);
    if (!r) {
      ++out.skipped_corrupt;
      continue;
    }
    if (r->space != fp || !space.feasible(r->config)) {
      ++out.skipped_foreign;
      continue;
    }
    out.samples.push_back({std::move(r->config), r->exec_time, r->computer_time});
  }
  return out;
}

void write_history(const std::string& path, const ParameterSpace& space, const std::vector<ComponentSample>& samples) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot write history file " + path);
  const auto fp = space.fingerprint();
  for (const auto& s : samples) {
    StoreRecord r{fp, s.config, s.exec_time, s.computer_time, {}, 0, 0, Provenance::History};
    out << format_record(r) << '\n';
  }
}

}  // namespace ceal
