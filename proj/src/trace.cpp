#include "ceal/trace.hpp"

#include <fstream>
#include <sstream>

#include "ceal/error.hpp"

namespace ceal {

using nlohmann::json;

std::string to_string(SelectionSource s) {
  switch (s) {
    case SelectionSource::Random: return "random";
    case SelectionSource::LowFidelity: return "low_fidelity";
    case SelectionSource::HighFidelity: return "high_fidelity";
    case SelectionSource::Graph: return "graph";
  }
  return "?";
}

SelectionSource parse_selection_source(const std::string& s) {
  if (s == "random") return SelectionSource::Random;
  if (s == "low_fidelity") return SelectionSource::LowFidelity;
  if (s == "high_fidelity") return SelectionSource::HighFidelity;
  if (s == "graph") return SelectionSource::Graph;
  throw ConfigError("unknown selection source '" + s + "'");
}

std::size_t IterationRecord::measured() const {
  std::size_t n = 0;
  for (const auto& e : entries) n += e.measurement.ok();
  return n;
}

std::size_t IterationRecord::failed() const { return entries.size() - measured(); }

std::size_t TuningTrace::workflow_runs() const {
  std::size_t n = 0;
  for (const auto& it : iterations) n += it.measured();
  return n;
}

double TuningTrace::training_cost(MetricKind metric) const {
  double c = 0.0;
  for (const auto& r : component_phase.runs) {
    if (r.ok()) c += r.metric(metric);
  }
  for (const auto* m : measurements()) c += m->metric(metric);
  return c;
}

std::vector<const Measurement*> TuningTrace::measurements() const {
  std::vector<const Measurement*> out;
  for (const auto& it : iterations) {
    for (const auto& e : it.entries) {
      if (e.measurement.ok()) out.push_back(&e.measurement);
    }
  }
  return out;
}

json to_json(const Measurement& m) {
  json j = {{"values", m.config.values}, {"status", to_string(m.status)}, {"provenance", to_string(m.provenance)}};
  if (m.ok()) {
    j["exec_s"] = m.exec_time;
    j["computer_ch"] = m.computer_time;
    j["comp_times"] = m.component_times;
    j["nodes"] = m.nodes;
    j["cores_per_node"] = m.cores_per_node;
  } else {
    j["diagnostic"] = m.diagnostic;
  }
  return j;
}

Measurement measurement_from_json(const json& j) {
  Configuration c{j.at("values").get<std::vector<double>>()};
  const auto prov = parse_provenance(j.at("provenance").get<std::string>());
  if (j.at("status").get<std::string>() != "ok") {
    return Measurement::failed(std::move(c), prov, j.value("diagnostic", std::string{}));
  }
  return Measurement::make(std::move(c), j.at("comp_times").get<std::vector<double>>(),
                           j.at("nodes").get<std::size_t>(), j.at("cores_per_node").get<std::size_t>(), prov);
}

json to_json(const ComponentMeasurement& m) {
  json j = {{"component", m.component},
            {"values", m.config.values},
            {"status", to_string(m.status)},
            {"provenance", to_string(m.provenance)}};
  if (m.ok()) {
    j["exec_s"] = m.exec_time;
    j["computer_ch"] = m.computer_time;
    j["nodes"] = m.nodes;
    j["cores_per_node"] = m.cores_per_node;
  } else {
    j["diagnostic"] = m.diagnostic;
  }
  return j;
}

ComponentMeasurement component_measurement_from_json(const json& j) {
  const auto comp = j.at("component").get<std::size_t>();
  Configuration c{j.at("values").get<std::vector<double>>()};
  const auto prov = parse_provenance(j.at("provenance").get<std::string>());
  if (j.at("status").get<std::string>() != "ok") {
    return ComponentMeasurement::failed(comp, std::move(c), prov, j.value("diagnostic", std::string{}));
  }
  return ComponentMeasurement::make(comp, std::move(c), j.at("exec_s").get<double>(), j.at("nodes").get<std::size_t>(),
                                    j.at("cores_per_node").get<std::size_t>(), prov);
}

namespace {

template <class T, class F>
json array_of(const std::vector<T>& v, F f) {
  json a = json::array();
  for (const auto& x : v) a.push_back(f(x));
  return a;
}

}  // namespace

json to_json(const TuningTrace& t) {
  json j;
  j["format"] = "ceal-trace";
  j["version"] = 1;
  j["algorithm"] = t.algorithm;
  j["seed"] = t.seed;
  j["budget"] = {{"m", t.budget.m}, {"m_r", t.budget.m_r}, {"m_0", t.budget.m_0}, {"iters", t.budget.iters}};
  j["metric"] = t.metric;
  j["pool"] = {{"fingerprint", t.pool_fingerprint}, {"size", t.pool_size}};

  const auto& cp = t.component_phase;
  auto cm = [](const ComponentMeasurement& m) { return to_json(m); };
  j["component_phase"] = {{"charged", cp.charged},
                          {"runs", array_of(cp.runs, cm)},
                          {"fixed_runs", array_of(cp.fixed_runs, cm)},
                          {"history_rows", cp.history_rows},
                          {"fixed_offsets", cp.fixed_offsets}};

  j["iterations"] = array_of(t.iterations, [](const IterationRecord& it) {
    json r = {{"index", it.index}, {"evaluator", it.evaluator}, {"measured", it.measured()}, {"failed", it.failed()}};
    r["entries"] = array_of(it.entries, [](const SelectedEntry& e) {
      return json{{"pool_index", e.pool_index}, {"source", to_string(e.source)}, {"measurement", to_json(e.measurement)}};
    });
    if (it.check) {
      r["check"] = {{"s_high", it.check->s_high}, {"s_low", it.check->s_low}, {"switched", it.check->switched}};
    }
    return r;
  });
  j["switch_iteration"] = t.switch_iteration ? json(*t.switch_iteration) : json(nullptr);
  j["best"] = {{"pool_index", t.best.pool_index}, {"values", t.best.config.values}, {"predicted", t.best.predicted}};
  j["charged"] = {{"component_runs", cp.charged}, {"workflow_runs", t.workflow_runs()}, {"total", t.charged()}};
  if (t.verification) {
    j["verification"] = {{"measurement", to_json(t.verification->measurement)}, {"charged", t.verification->charged}};
  }
  return j;
}

TuningTrace trace_from_json(const json& j) {
  try {
    if (j.at("format").get<std::string>() != "ceal-trace" || j.at("version").get<int>() != 1) {
      throw ConfigError("not a version-1 trace");
    }
    TuningTrace t;
    t.algorithm = j.at("algorithm").get<std::string>();
    t.seed = j.at("seed").get<std::uint64_t>();
    const auto& b = j.at("budget");
    t.budget = {b.at("m").get<std::size_t>(), b.at("m_r").get<std::size_t>(), b.at("m_0").get<std::size_t>(),
                b.at("iters").get<std::size_t>()};
    t.metric = j.at("metric").get<std::string>();
    t.pool_fingerprint = j.at("pool").at("fingerprint").get<std::string>();
    t.pool_size = j.at("pool").at("size").get<std::size_t>();

    const auto& cp = j.at("component_phase");
    t.component_phase.charged = cp.at("charged").get<std::size_t>();
    for (const auto& r : cp.at("runs")) t.component_phase.runs.push_back(component_measurement_from_json(r));
    for (const auto& r : cp.at("fixed_runs")) t.component_phase.fixed_runs.push_back(component_measurement_from_json(r));
    t.component_phase.history_rows = cp.at("history_rows").get<std::vector<std::size_t>>();
    t.component_phase.fixed_offsets = cp.at("fixed_offsets").get<std::vector<double>>();

    for (const auto& r : j.at("iterations")) {
      IterationRecord it;
      it.index = r.at("index").get<std::size_t>();
      it.evaluator = r.at("evaluator").get<std::string>();
      for (const auto& e : r.at("entries")) {
        it.entries.push_back({e.at("pool_index").get<std::size_t>(),
                              parse_selection_source(e.at("source").get<std::string>()),
                              measurement_from_json(e.at("measurement"))});
      }
      if (r.contains("check")) {
        const auto& c = r.at("check");
        it.check = SwitchCheck{c.at("s_high").get<double>(), c.at("s_low").get<double>(), c.at("switched").get<bool>()};
      }
      t.iterations.push_back(std::move(it));
    }
    if (!j.at("switch_iteration").is_null()) t.switch_iteration = j.at("switch_iteration").get<std::size_t>();
    const auto& best = j.at("best");
    t.best = {best.at("pool_index").get<std::size_t>(), Configuration{best.at("values").get<std::vector<double>>()},
              best.at("predicted").get<double>()};
    if (j.contains("verification")) {
      const auto& v = j.at("verification");
      t.verification = VerificationRecord{measurement_from_json(v.at("measurement")), v.at("charged").get<bool>()};
    }
    return t;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed trace: ") + e.what());
  }
}

std::string dump_trace(const TuningTrace& t) { return to_json(t).dump(2) + "\n"; }

void save_trace(const std::string& path, const TuningTrace& t) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot write trace " + path);
  out << dump_trace(t);
}

TuningTrace load_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read trace " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return trace_from_json(j);
}

ReplayExecutor::ReplayExecutor(const TuningTrace& recorded, Executor& inner) : inner_(inner) {
  for (const auto& r : recorded.component_phase.runs) components_[{r.component, r.config}].push_back(r);
  for (const auto& r : recorded.component_phase.fixed_runs) components_[{r.component, r.config}].push_back(r);
  for (const auto& it : recorded.iterations) {
    for (const auto& e : it.entries) workflow_[e.measurement.config].push_back(e.measurement);
  }
}

Measurement ReplayExecutor::measure(const Configuration& c) {
  auto it = workflow_.find(c);
  if (it != workflow_.end() && !it->second.empty()) {
    auto m = it->second.front();
    it->second.erase(it->second.begin());
    ++replayed_;
    return m;
  }
  ++forwarded_;
  return inner_.measure(c);
}

ComponentMeasurement ReplayExecutor::measure_component(std::size_t j, const Configuration& cj) {
  auto it = components_.find({j, cj});
  if (it != components_.end() && !it->second.empty()) {
    auto m = it->second.front();
    it->second.erase(it->second.begin());
    ++replayed_;
    return m;
  }
  ++forwarded_;
  return inner_.measure_component(j, cj);
}

}  // namespace ceal
