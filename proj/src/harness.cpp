#include "ceal/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>

#include <fmt/format.h>

#include "ceal/error.hpp"
#include "ceal/kernels.hpp"
#include "ceal/metrics.hpp"

namespace ceal {

using nlohmann::json;

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  return fmt::format("{}", v);
}

int workers_from_env() {
  const char* s = std::getenv("CEAL_WORKERS");
  if (!s) return 0;
  char* end = nullptr;
  const long v = std::strtol(s, &end, 10);
  if (end == s || *end != '\0' || v < 1 || v > 1024) return 0;
  return static_cast<int>(v);
}

SamplePool make_pool(const Workflow& wf, std::size_t pool_size, std::uint64_t seed) {
  Rng rng(seed);
  return build_pool(wf.space, pool_size, rng);
}

HistoricalData generate_history(const Workflow& wf, std::size_t count, std::uint64_t seed) {
  const auto synth = make_synthetic(wf);
  HistoricalData h(wf.components.size());
  for (std::size_t j = 0; j < wf.components.size(); ++j) {
    const auto& comp = wf.components[j];
    if (!comp.configurable()) continue;
    Rng rng(derive_seed(seed, "draw", j));
    const auto noise = derive_seed(seed, "noise", j);
    for (std::size_t k = 0; k < count; ++k) {
      auto cj = random_configuration(comp.space, rng);
      auto m = synth.measure_component(j, cj, noise);
      h[j].push_back({std::move(cj), m.exec_time, m.computer_time});
    }
  }
  return h;
}

void write_history_files(const Workflow& wf, const HistoricalData& history) {
  for (std::size_t j = 0; j < wf.components.size(); ++j) {
    const auto& comp = wf.components[j];
    if (!comp.configurable()) continue;
    if (!comp.history_file) throw ConfigError("component '" + comp.name + "' declares no history_file");
    write_history(comp.history_file->string(), comp.space, history.at(j));
  }
}

std::string HistorySource::label() const {
  switch (kind) {
    case Kind::None: return "none";
    case Kind::Generated: return fmt::format("gen{}", count);
    case Kind::Files: return "files";
  }
  return "?";
}

HistorySource HistorySource::parse(const json& j) {
  HistorySource h;
  if (j.is_null() || (j.is_boolean() && !j.get<bool>())) return h;
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "none") return h;
    if (s == "files") {
      h.kind = Kind::Files;
      return h;
    }
    throw ConfigError("history: expected \"none\", \"files\" or a sample count");
  }
  if (j.is_number_unsigned() || j.is_number_integer()) {
    const auto n = j.get<long long>();
    if (n < 0) throw ConfigError("history: sample count must be non-negative");
    if (n > 0) {
      h.kind = Kind::Generated;
      h.count = static_cast<std::size_t>(n);
    }
    return h;
  }
  throw ConfigError("history: expected \"none\", \"files\" or a sample count");
}

BestPerformance best_performance(const TuningTrace& trace, const OracleTable& oracle, MetricKind metric) {
  if (trace.best.pool_index >= oracle.size() || oracle.configs[trace.best.pool_index] != trace.best.config) {
    throw StructuralError("oracle table was not built on the trace's pool");
  }
  BestPerformance b;
  b.value = oracle.values(metric)[trace.best.pool_index];
  b.optimum = oracle.minimum(metric);
  b.normalized = b.value / *b.optimum;
  return b;
}

BestPerformance best_performance(TuningTrace& trace, Executor& executor, MetricKind metric) {
  auto m = executor.measure(trace.best.config);
  trace.verification = VerificationRecord{m, false};
  if (!m.ok()) throw ConfigError("verification run failed: " + m.diagnostic);
  return {m.metric(metric), std::nullopt, std::nullopt};
}

Budget BudgetCell::resolve() const {
  auto b = default_budget(m, history.present(), iters);
  if (m_r) b.m_r = *m_r;
  if (m_0) b.m_0 = *m_0;
  return b;
}

namespace {

void check_keys(const json& j, std::initializer_list<std::string_view> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError(fmt::format("{}: unknown field '{}'", where, key));
    }
  }
}

SurrogateHyperparams parse_hp(const json& j, const std::string& where) {
  check_keys(j, {"tree_count", "max_depth", "learning_rate", "min_samples_leaf", "subsample_fraction", "log_target"},
             where);
  SurrogateHyperparams hp;
  hp.tree_count = j.value("tree_count", hp.tree_count);
  hp.max_depth = j.value("max_depth", hp.max_depth);
  hp.learning_rate = j.value("learning_rate", hp.learning_rate);
  hp.min_samples_leaf = j.value("min_samples_leaf", hp.min_samples_leaf);
  hp.subsample_fraction = j.value("subsample_fraction", hp.subsample_fraction);
  hp.log_target = j.value("log_target", hp.log_target);
  hp.validate();
  return hp;
}

}  // namespace

ExperimentPlan ExperimentPlan::from_json(const json& j, const std::string& base_dir) {
  check_keys(j, {"workflow", "algorithms", "metrics", "budgets", "repetitions", "seed", "pool_size", "model",
                 "component_model"},
             "plan");
  try {
    ExperimentPlan p;
    std::filesystem::path wf = j.at("workflow").get<std::string>();
    p.workflow = (wf.is_relative() && !base_dir.empty() ? std::filesystem::path(base_dir) / wf : wf).string();
    if (j.contains("algorithms")) {
      p.algorithms.clear();
      for (const auto& a : j.at("algorithms")) p.algorithms.push_back(parse_algorithm(a.get<std::string>()));
    }
    if (j.contains("metrics")) {
      for (const auto& m : j.at("metrics")) p.metrics.push_back(parse_metric(m.get<std::string>()));
    }
    if (j.contains("budgets")) {
      p.budgets.clear();
      for (const auto& b : j.at("budgets")) {
        check_keys(b, {"m", "m_r", "m_0", "iters", "history"}, "plan.budgets[]");
        BudgetCell c;
        c.m = b.at("m").get<std::size_t>();
        if (b.contains("m_r")) c.m_r = b.at("m_r").get<std::size_t>();
        if (b.contains("m_0")) c.m_0 = b.at("m_0").get<std::size_t>();
        c.iters = b.value("iters", std::size_t{3});
        if (b.contains("history")) c.history = HistorySource::parse(b.at("history"));
        c.resolve().validate();
        p.budgets.push_back(c);
      }
    }
    p.repetitions = j.value("repetitions", p.repetitions);
    if (p.repetitions < 1) throw ConfigError("plan: repetitions must be at least 1");
    p.seed = j.value("seed", p.seed);
    p.pool_size = j.value("pool_size", p.pool_size);
    if (p.pool_size < 1) throw ConfigError("plan: pool_size must be at least 1");
    if (j.contains("model")) p.model_hp = parse_hp(j.at("model"), "plan.model");
    if (j.contains("component_model")) p.component_hp = parse_hp(j.at("component_model"), "plan.component_model");
    if (p.algorithms.empty()) throw ConfigError("plan: no algorithms");
    return p;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("plan: ") + e.what());
  }
}

ExperimentPlan ExperimentPlan::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read plan " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return from_json(j, std::filesystem::path(path).parent_path().string());
}

CellResult evaluate_cell(const Workflow& wf, Algorithm algo, MetricKind metric, const BudgetCell& cell,
                         std::size_t rep, const SeedPlan& seeds, std::size_t pool_size, const TunerOptions& options) {
  if (!wf.synthetic) throw ConfigError("benchmarks need a synthetic workflow (the oracle supplies ground truth)");
  const auto synth = make_synthetic(wf);
  const auto pool = make_pool(wf, pool_size, seeds.pool_seed(rep));
  const auto oracle = brute_force_oracle(synth, pool);
  SyntheticExecutor executor(synth, derive_seed(wf.synthetic->seed, "noise", seeds.noise_seed(rep)));

  HistoricalData history;
  if (cell.history.kind == HistorySource::Kind::Generated) {
    history = generate_history(wf, cell.history.count, seeds.history_seed(rep));
  } else if (cell.history.kind == HistorySource::Kind::Files) {
    history = load_history(wf);
  }
  const auto budget = cell.resolve();
  TuningProblem problem{wf, pool, executor, metric, std::move(history), seeds.tuner_seed(rep)};
  auto result = run_algorithm(algo, problem, budget, options);

  CellResult r;
  r.algorithm = algo;
  r.metric = metric;
  r.budget = budget;
  if (algo == Algorithm::Rs) r.budget = Budget{budget.m, 0, budget.m, 1};
  if (algo == Algorithm::Al || algo == Algorithm::Geist) r.budget.m_r = 0;
  r.history = (algo == Algorithm::Ceal || algo == Algorithm::Alph) ? cell.history.label() : "none";
  r.rep = rep;
  r.seed = seeds.tuner_seed(rep);
  r.pool_fingerprint = pool.fingerprint();
  const auto best = best_performance(result.trace, oracle, metric);
  r.best_pool_index = result.trace.best.pool_index;
  r.best_true = best.value;
  r.pool_optimum = *best.optimum;
  r.normalized = *best.normalized;

  const auto pred = kernels::parallel::score_all(*result.model, pool.entries());
  const auto& truth = oracle.values(metric);
  for (std::size_t n = 1; n <= 10; ++n) {
    r.recall.push_back(n <= pool.size() ? recall_score(n, pred, truth) : std::nan(""));
  }
  r.mdape_all = mdape(truth, pred);
  r.mdape_top2 = mdape_top_fraction(truth, pred, 0.02);
  r.train_cost = result.trace.training_cost(metric);
  if (wf.reference) {
    const double ref = synth.measure(*wf.reference, 0, false).metric(metric);
    r.delta_p = ref - r.best_true;
    r.payoff = least_number_of_uses(r.train_cost, *r.delta_p);
  }
  r.switch_iteration = result.trace.switch_iteration;
  return r;
}

std::vector<CellResult> run_bench(const ExperimentPlan& plan, int workers) {
  const auto wf = load_workflow(plan.workflow);
  const auto metrics = plan.metrics.empty() ? std::vector<MetricKind>{wf.metric} : plan.metrics;
  struct Key {
    MetricKind metric;
    const BudgetCell* cell;
    Algorithm algo;
    std::size_t rep;
  };
  std::vector<Key> keys;
  for (auto metric : metrics) {
    for (const auto& cell : plan.budgets) {
      for (auto algo : plan.algorithms) {
        for (std::size_t rep = 0; rep < plan.repetitions; ++rep) keys.push_back({metric, &cell, algo, rep});
      }
    }
  }
  TunerOptions options;
  options.model_hp = plan.model_hp;
  options.component_hp = plan.component_hp;
  const SeedPlan seeds{plan.seed};
  std::vector<CellResult> out(keys.size());
  const int before = kernels::max_threads();
  if (workers > 0) kernels::set_threads(workers);
  try {
    kernels::parallel::for_each_index(keys.size(), [&](std::size_t i) {
      const auto& k = keys[i];
      out[i] = evaluate_cell(wf, k.algo, k.metric, *k.cell, k.rep, seeds, plan.pool_size, options);
    });
  } catch (...) {
    kernels::set_threads(before);
    throw;
  }
  kernels::set_threads(before);
  return out;
}

namespace {

std::string opt(const std::optional<double>& v) { return v ? format_number(*v) : ""; }

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? std::nan("") : s / static_cast<double>(v.size());
}

double median_of(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::optional<double> agg(const std::vector<double>& v, bool median) {
  if (v.empty()) return std::nullopt;
  return median ? median_of(v) : mean_of(v);
}

std::string group_key(const CellResult& c) {
  return fmt::format("{}|{}|{}|{}|{}|{}|{}", to_string(c.metric), c.budget.m, c.budget.m_r, c.budget.m_0,
                     c.budget.iters, c.history, to_string(c.algorithm));
}

}  // namespace

void write_bench_csv(std::ostream& out, const std::vector<CellResult>& cells) {
  out << "row_kind,algo,m,m_r,m_0,iters,history,seed,pool_fingerprint,metric,best_pool_index,best_true,"
         "pool_optimum,normalized";
  for (int n = 1; n <= 10; ++n) out << ",recall_" << n;
  out << ",mdape_all,mdape_top2,train_cost,delta_p,uses_real,uses_ceil,switch_iter\n";

  auto prefix = [&](const std::string& kind, const CellResult& c) {
    out << kind << ',' << to_string(c.algorithm) << ',' << c.budget.m << ',' << c.budget.m_r << ',' << c.budget.m_0
        << ',' << c.budget.iters << ',' << c.history << ',';
  };
  for (const auto& c : cells) {
    prefix("seed", c);
    out << c.seed << ',' << c.pool_fingerprint << ',' << to_string(c.metric) << ',' << c.best_pool_index << ','
        << format_number(c.best_true) << ',' << format_number(c.pool_optimum) << ',' << format_number(c.normalized);
    for (double r : c.recall) out << ',' << format_number(r);
    out << ',' << format_number(c.mdape_all) << ',' << format_number(c.mdape_top2) << ','
        << format_number(c.train_cost) << ',' << opt(c.delta_p) << ',';
    if (c.delta_p && c.payoff.pays_off) out << format_number(c.payoff.uses) << ',' << c.payoff.uses_ceil;
    else if (c.delta_p) out << "never,never";
    else out << ',';
    out << ',' << (c.switch_iteration ? std::to_string(*c.switch_iteration) : "") << '\n';
  }

  std::vector<std::string> order;
  std::map<std::string, std::vector<const CellResult*>> groups;
  for (const auto& c : cells) {
    const auto k = group_key(c);
    if (!groups.count(k)) order.push_back(k);
    groups[k].push_back(&c);
  }
  for (const auto& k : order) {
    const auto& g = groups[k];
    for (bool median : {false, true}) {
      auto column = [&](auto get) {
        std::vector<double> v;
        for (const auto* c : g) {
          if (auto x = get(*c)) v.push_back(*x);
        }
        return opt(agg(v, median));
      };
      prefix(median ? "median" : "mean", *g.front());
      out << ",," << to_string(g.front()->metric) << ",";
      out << ',' << column([](const CellResult& c) { return std::optional<double>(c.best_true); });
      out << ',' << column([](const CellResult& c) { return std::optional<double>(c.pool_optimum); });
      out << ',' << column([](const CellResult& c) { return std::optional<double>(c.normalized); });
      for (std::size_t n = 0; n < 10; ++n) {
        out << ',' << column([n](const CellResult& c) { return std::optional<double>(c.recall[n]); });
      }
      out << ',' << column([](const CellResult& c) { return std::optional<double>(c.mdape_all); });
      out << ',' << column([](const CellResult& c) { return std::optional<double>(c.mdape_top2); });
      out << ',' << column([](const CellResult& c) { return std::optional<double>(c.train_cost); });
      out << ',' << column([](const CellResult& c) { return c.delta_p; });
      out << ',' << column([](const CellResult& c) {
        return c.delta_p && c.payoff.pays_off ? std::optional<double>(c.payoff.uses) : std::nullopt;
      });
      out << ',' << column([](const CellResult& c) {
        return c.delta_p && c.payoff.pays_off ? std::optional<double>(static_cast<double>(c.payoff.uses_ceil))
                                              : std::nullopt;
      });
      out << ',' << column([](const CellResult& c) {
        return c.switch_iteration ? std::optional<double>(static_cast<double>(*c.switch_iteration)) : std::nullopt;
      });
      out << '\n';
    }
  }
}

SweepParam parse_sweep_param(const std::string& s) {
  if (s == "iters") return SweepParam::Iters;
  if (s == "m-r-frac") return SweepParam::MrFrac;
  if (s == "m-0-frac") return SweepParam::M0Frac;
  throw ConfigError("unknown sweep parameter '" + s + "' (expected iters, m-r-frac or m-0-frac)");
}

std::string to_string(SweepParam p) {
  switch (p) {
    case SweepParam::Iters: return "iters";
    case SweepParam::MrFrac: return "m-r-frac";
    case SweepParam::M0Frac: return "m-0-frac";
  }
  return "?";
}

std::vector<double> default_sweep_grid(const SweepPlan& plan) {
  std::vector<double> g;
  if (plan.param == SweepParam::Iters) {
    for (int i = 1; i <= 10; ++i) g.push_back(i);
    return g;
  }
  const auto base = plan.base.resolve();
  const double m = static_cast<double>(base.m);
  const double other = static_cast<double>(plan.param == SweepParam::MrFrac ? base.m_0 : base.m_r);
  const double top = (m - other) / m;
  for (int k = 1; 0.05 * k <= top + 1e-9; ++k) g.push_back(0.05 * k);
  return g;
}

std::vector<SweepRow> run_sweep(const Workflow& wf, const SweepPlan& plan, int workers) {
  const auto grid = plan.grid.empty() ? default_sweep_grid(plan) : plan.grid;
  std::vector<SweepRow> rows;
  for (double v : grid) {
    SweepRow row;
    row.value = v;
    BudgetCell cell = plan.base;
    const auto base = plan.base.resolve();
    cell.m_r = base.m_r;
    cell.m_0 = base.m_0;
    const double m = static_cast<double>(base.m);
    switch (plan.param) {
      case SweepParam::Iters:
        if (v < 1 || v != std::floor(v)) {
          row.message = "iterations must be a positive integer";
        } else {
          cell.iters = static_cast<std::size_t>(v);
        }
        break;
      case SweepParam::MrFrac:
        if (v < 0) row.message = "fraction must be non-negative";
        else cell.m_r = static_cast<std::size_t>(std::llround(v * m));
        break;
      case SweepParam::M0Frac:
        if (v < 0) row.message = "fraction must be non-negative";
        else cell.m_0 = static_cast<std::size_t>(std::llround(v * m));
        break;
    }
    row.budget = cell.resolve();
    if (row.message.empty()) {
      try {
        row.budget.validate();
        if (row.budget.m_r == 0 && !cell.history.present() &&
            (plan.algorithm == Algorithm::Ceal || plan.algorithm == Algorithm::Alph)) {
          throw ConfigError("m_R = 0 needs component history");
        }
        row.ok = true;
      } catch (const ConfigError& e) {
        row.message = e.what();
      }
    }
    if (row.ok) {
      row.cells.resize(plan.repetitions);
      const SeedPlan seeds{plan.seed};
      const int before = kernels::max_threads();
      if (workers > 0) kernels::set_threads(workers);
      try {
        kernels::parallel::for_each_index(plan.repetitions, [&](std::size_t rep) {
          row.cells[rep] = evaluate_cell(wf, plan.algorithm, plan.metric, cell, rep, seeds, plan.pool_size);
        });
      } catch (...) {
        kernels::set_threads(before);
        throw;
      }
      kernels::set_threads(before);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, const SweepPlan& plan, const std::vector<SweepRow>& rows) {
  out << "param,value,algo,metric,m,m_r,m_0,iters,status,message,reps,mean_normalized,median_normalized,"
         "mean_recall_1,mean_mdape_top2,mean_train_cost\n";
  for (const auto& r : rows) {
    out << to_string(plan.param) << ',' << format_number(r.value) << ',' << to_string(plan.algorithm) << ','
        << to_string(plan.metric) << ',' << r.budget.m << ',' << r.budget.m_r << ',' << r.budget.m_0 << ','
        << r.budget.iters << ',' << (r.ok ? "ok" : "skipped") << ',';
    std::string msg = r.message;
    std::replace(msg.begin(), msg.end(), ',', ';');
    out << msg << ',' << r.cells.size();
    if (!r.ok) {
      out << ",,,,,\n";
      continue;
    }
    std::vector<double> norm, rec, top2, cost;
    for (const auto& c : r.cells) {
      norm.push_back(c.normalized);
      rec.push_back(c.recall[0]);
      top2.push_back(c.mdape_top2);
      cost.push_back(c.train_cost);
    }
    out << ',' << format_number(mean_of(norm)) << ',' << format_number(median_of(norm)) << ','
        << format_number(mean_of(rec)) << ',' << format_number(mean_of(top2)) << ',' << format_number(mean_of(cost))
        << '\n';
  }
}

void write_oracle_csv(std::ostream& out, const Workflow& wf, const OracleTable& table) {
  out << "row";
  for (const auto& n : wf.space.names()) out << ',' << n;
  out << ",exec_s,computer_ch,exec_rank,computer_rank\n";
  const auto re = table.ranks(MetricKind::ExecutionTime);
  const auto rc = table.ranks(MetricKind::ComputerTime);
  for (std::size_t i = 0; i < table.size(); ++i) {
    out << i;
    for (double v : table.configs[i].values) out << ',' << format_number(v);
    out << ',' << format_number(table.exec_time[i]) << ',' << format_number(table.computer_time[i]) << ',' << re[i]
        << ',' << rc[i] << '\n';
  }
}

}  // namespace ceal
