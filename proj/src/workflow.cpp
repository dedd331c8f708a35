#include "ceal/workflow.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <fmt/format.h>

#include "ceal/error.hpp"
#include "ceal/rng.hpp"

namespace ceal {

using nlohmann::json;

namespace {

void check_keys(const json& j, std::initializer_list<std::string_view> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError(fmt::format("{}: unknown field '{}'", where, key));
    }
  }
}

template <class T>
T get(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError(fmt::format("{}: missing field '{}'", where, key));
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("{}: field '{}': {}", where, key, e.what()));
  }
}

Parameter parse_parameter(const json& j, const std::string& where) {
  check_keys(j, {"name", "list", "range"}, where);
  const auto name = get<std::string>(j, "name", where);
  const bool has_list = j.contains("list"), has_range = j.contains("range");
  if (has_list == has_range) throw ConfigError(where + ": exactly one of 'list' or 'range' is required");
  if (has_list) return Parameter(name, get<std::vector<double>>(j, "list", where));
  const auto& r = j.at("range");
  check_keys(r, {"lo", "hi", "step"}, where + ".range");
  return Parameter::range(name, get<double>(r, "lo", where), get<double>(r, "hi", where),
                          r.contains("step") ? get<double>(r, "step", where) : 1.0);
}

ConstraintSpec parse_constraint(const json& j, const std::string& where) {
  check_keys(j, {"kind", "params", "coefficients", "bound", "expr"}, where);
  const auto kind = get<std::string>(j, "kind", where);
  if (kind == "product_le") {
    return ConstraintSpec::product_le(get<std::vector<std::string>>(j, "params", where), get<double>(j, "bound", where));
  }
  if (kind == "linear_le") {
    std::vector<double> coef;
    if (j.contains("coefficients")) coef = get<std::vector<double>>(j, "coefficients", where);
    return ConstraintSpec::linear_le(get<std::vector<std::string>>(j, "params", where), std::move(coef),
                                     get<double>(j, "bound", where));
  }
  if (kind == "expression") return ConstraintSpec::expr(get<std::string>(j, "expr", where));
  throw ConfigError(fmt::format("{}: unknown constraint kind '{}'", where, kind));
}

std::optional<std::size_t> role_slot(const json& j, const char* key, const Component& comp, const Workflow& wf,
                                     const std::string& where) {
  if (!j.contains(key)) return std::nullopt;
  const auto name = get<std::string>(j, key, where);
  for (std::size_t k = 0; k < comp.binding.size(); ++k) {
    if (wf.space.names()[comp.binding[k]] == name) return k;
  }
  throw ConfigError(fmt::format("{}: '{}' is not a parameter of component '{}'", where, name, comp.name));
}

std::size_t component_index(const Workflow& wf, const std::string& name, const std::string& where) {
  for (std::size_t j = 0; j < wf.components.size(); ++j) {
    if (wf.components[j].name == name) return j;
  }
  throw ConfigError(fmt::format("{}: unknown component '{}'", where, name));
}

SyntheticWorkflowSpec parse_synthetic(const json& j, const Workflow& wf) {
  const std::string where = "synthetic";
  check_keys(j, {"cores_per_node", "coupling_lambda", "noise_sigma", "seed", "couplings", "components"}, where);
  SyntheticWorkflowSpec s;
  s.cores_per_node = j.value("cores_per_node", std::size_t{36});
  s.coupling_lambda = j.value("coupling_lambda", 0.0);
  s.noise_sigma = j.value("noise_sigma", 0.0);
  s.seed = j.value("seed", std::uint64_t{0});
  const auto& comps = j.at("components");
  if (!comps.is_object()) throw ConfigError(where + ".components: expected an object keyed by component name");
  s.components.resize(wf.components.size());
  std::set<std::string> seen;
  for (const auto& [name, cj] : comps.items()) {
    const std::string cw = where + ".components." + name;
    const auto idx = component_index(wf, name, cw);
    seen.insert(name);
    check_keys(cj, {"work", "alpha", "overhead", "comm", "procs", "ppn", "threads", "fixed_time", "fixed_nodes"}, cw);
    auto& sc = s.components[idx];
    const auto& comp = wf.components[idx];
    sc.work = cj.value("work", 0.0);
    sc.alpha = cj.value("alpha", 1.0);
    sc.overhead = cj.value("overhead", 0.0);
    sc.comm = cj.value("comm", 0.0);
    sc.procs_slot = role_slot(cj, "procs", comp, wf, cw);
    sc.ppn_slot = role_slot(cj, "ppn", comp, wf, cw);
    sc.threads_slot = role_slot(cj, "threads", comp, wf, cw);
    sc.fixed_time = cj.value("fixed_time", 0.0);
    sc.fixed_nodes = cj.value("fixed_nodes", std::size_t{1});
    if (comp.configurable() && sc.fixed()) {
      throw ConfigError(cw + ": configurable components need a 'procs' role");
    }
  }
  for (const auto& c : wf.components) {
    if (!seen.count(c.name)) throw ConfigError(fmt::format("{}: no surface for component '{}'", where, c.name));
  }
  if (j.contains("couplings")) {
    for (const auto& pair : j.at("couplings")) {
      const auto names = pair.get<std::vector<std::string>>();
      if (names.size() != 2) throw ConfigError(where + ".couplings: entries are [producer, consumer]");
      s.couplings.emplace_back(component_index(wf, names[0], where), component_index(wf, names[1], where));
    }
  }
  s.validate();
  return s;
}

ExternalSpec parse_external(const json& j, const Workflow& wf) {
  const std::string where = "external";
  check_keys(j, {"command", "timeout_s", "components"}, where);
  ExternalSpec e;
  e.command = get<std::string>(j, "command", where);
  e.timeout_s = j.value("timeout_s", 600.0);
  if (j.contains("components")) {
    for (const auto& [name, cmd] : j.at("components").items()) {
      component_index(wf, name, where + ".components");
      e.component_commands[name] = cmd.get<std::string>();
    }
  }
  return e;
}

}  // namespace

std::vector<ComponentBinding> Workflow::bindings() const {
  std::vector<ComponentBinding> out;
  for (std::size_t j = 0; j < components.size(); ++j) out.push_back({j, components[j].binding});
  return out;
}

std::vector<std::size_t> Workflow::configurable_components() const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < components.size(); ++j) {
    if (components[j].configurable()) out.push_back(j);
  }
  return out;
}

Workflow parse_workflow(const json& j, const std::filesystem::path& base_dir) {
  check_keys(j, {"name", "metric", "components", "bindings", "constraints", "reference", "synthetic", "external"},
             "workflow");
  Workflow wf;
  wf.name = j.value("name", std::string("workflow"));
  wf.metric = parse_metric(get<std::string>(j, "metric", "workflow"));
  if (wf.metric == MetricKind::Throughput) {
    throw ConfigError("workflow: metric must be execution_time or computer_time");
  }

  // Workflow space: union of the component parameters in declaration
  // order; a name declared by two components is one shared parameter.
  std::vector<Parameter> params;
  std::vector<std::vector<std::string>> declared;
  const auto& comps = j.at("components");
  if (!comps.is_array() || comps.empty()) throw ConfigError("workflow: 'components' must be a non-empty array");
  for (std::size_t c = 0; c < comps.size(); ++c) {
    const std::string where = fmt::format("components[{}]", c);
    check_keys(comps[c], {"name", "parameters", "history_file"}, where);
    Component comp;
    comp.name = get<std::string>(comps[c], "name", where);
    for (const auto& other : wf.components) {
      if (other.name == comp.name) throw ConfigError(where + ": duplicate component name '" + comp.name + "'");
    }
    if (comps[c].contains("history_file")) {
      std::filesystem::path p = get<std::string>(comps[c], "history_file", where);
      comp.history_file = p.is_relative() ? base_dir / p : p;
    }
    std::vector<std::string> names;
    if (comps[c].contains("parameters")) {
      for (std::size_t k = 0; k < comps[c].at("parameters").size(); ++k) {
        auto p = parse_parameter(comps[c].at("parameters")[k], fmt::format("{}.parameters[{}]", where, k));
        auto it = std::find_if(params.begin(), params.end(), [&](const Parameter& q) { return q.name() == p.name(); });
        if (it == params.end()) {
          params.push_back(p);
        } else if (it->options() != p.options()) {
          throw ConfigError(where + ": shared parameter '" + p.name() + "' declared with a different domain");
        }
        names.push_back(p.name());
      }
    }
    declared.push_back(std::move(names));
    wf.components.push_back(std::move(comp));
  }

  std::vector<ConstraintSpec> constraints;
  if (j.contains("constraints")) {
    for (std::size_t k = 0; k < j.at("constraints").size(); ++k) {
      constraints.push_back(parse_constraint(j.at("constraints")[k], fmt::format("constraints[{}]", k)));
    }
  }
  wf.space = ParameterSpace(std::move(params), std::move(constraints));

  if (j.contains("bindings")) {
    for (std::size_t k = 0; k < j.at("bindings").size(); ++k) {
      const auto& b = j.at("bindings")[k];
      const std::string where = fmt::format("bindings[{}]", k);
      check_keys(b, {"component", "parameters"}, where);
      const auto idx = component_index(wf, get<std::string>(b, "component", where), where);
      declared[idx] = get<std::vector<std::string>>(b, "parameters", where);
    }
  }
  std::vector<bool> covered(wf.space.dimension(), false);
  for (std::size_t c = 0; c < wf.components.size(); ++c) {
    auto& comp = wf.components[c];
    for (const auto& n : declared[c]) {
      const auto idx = wf.space.index_of(n);
      if (!idx) throw ConfigError(fmt::format("component '{}': unknown parameter '{}'", comp.name, n));
      if (std::find(comp.binding.begin(), comp.binding.end(), *idx) != comp.binding.end()) {
        throw ConfigError(fmt::format("component '{}': parameter '{}' bound twice", comp.name, n));
      }
      comp.binding.push_back(*idx);
      covered[*idx] = true;
    }
    comp.space = wf.space.subspace(comp.binding);
  }
  for (std::size_t i = 0; i < covered.size(); ++i) {
    if (!covered[i]) throw ConfigError("parameter '" + wf.space.names()[i] + "' belongs to no component");
  }

  if (j.contains("reference")) {
    Configuration ref{get<std::vector<double>>(j, "reference", "workflow")};
    if (!wf.space.feasible(ref)) throw ConfigError("workflow: reference configuration is not feasible");
    wf.reference = std::move(ref);
  }
  if (j.contains("synthetic")) wf.synthetic = parse_synthetic(j.at("synthetic"), wf);
  if (j.contains("external")) wf.external = parse_external(j.at("external"), wf);
  return wf;
}

Workflow load_workflow(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read workflow file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
  }
  return parse_workflow(j, path.parent_path());
}

SyntheticWorkflow make_synthetic(const Workflow& wf) {
  if (!wf.synthetic) throw ConfigError("workflow '" + wf.name + "' has no synthetic section");
  return SyntheticWorkflow(*wf.synthetic, wf.bindings());
}

ExecutorKind parse_executor_kind(const std::string& s) {
  if (s == "synth" || s == "synthetic") return ExecutorKind::Synthetic;
  if (s == "external") return ExecutorKind::External;
  throw ConfigError("unknown executor '" + s + "' (expected synth or external)");
}

std::unique_ptr<Executor> make_executor(const Workflow& wf, ExecutorKind kind, std::uint64_t noise_seed) {
  if (kind == ExecutorKind::Synthetic) {
    return std::make_unique<SyntheticExecutor>(make_synthetic(wf), derive_seed(wf.synthetic->seed, "noise", noise_seed));
  }
  if (!wf.external) throw ConfigError("workflow '" + wf.name + "' has no external section");
  ExternalCommand main{wf.external->command, wf.space.names()};
  std::vector<std::optional<ExternalCommand>> comps;
  for (const auto& c : wf.components) {
    auto it = wf.external->component_commands.find(c.name);
    if (it == wf.external->component_commands.end()) comps.emplace_back();
    else comps.push_back(ExternalCommand{it->second, c.space.names()});
  }
  return std::make_unique<ExternalExecutor>(std::move(main), std::move(comps), wf.external->timeout_s);
}

}  // namespace ceal
