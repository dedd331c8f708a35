// Command-line front end: tune, bench, sweep, oracle, history.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>

#include "ceal/baselines.hpp"
#include "ceal/error.hpp"
#include "ceal/harness.hpp"
#include "ceal/trace.hpp"
#include "ceal/tuner.hpp"
#include "ceal/workflow.hpp"

namespace {

using namespace ceal;

struct TuneArgs {
  std::string spec;
  std::string algo = "ceal";
  std::size_t m = 50;
  std::optional<std::size_t> m_r, m_0;
  std::size_t iters = 3;
  std::uint64_t seed = 1;
  std::string executor = "synth";
  std::string out = "trace.json";
  std::string metric;
  std::string history = "none";
  std::size_t pool_size = 2000;
  std::string resume;
  std::string model_out;
};

HistorySource parse_history_flag(const std::string& s) {
  if (s == "none" || s == "files") return HistorySource::parse(nlohmann::json(s));
  try {
    std::size_t pos = 0;
    const long long n = std::stoll(s, &pos);
    if (pos == s.size()) return HistorySource::parse(nlohmann::json(n));
  } catch (const std::exception&) {
  }
  throw ConfigError("--history: expected none, files or a sample count");
}

std::string join_values(const Configuration& c) {
  std::vector<std::string> parts;
  for (double v : c.values) parts.push_back(format_number(v));
  return fmt::format("({})", fmt::join(parts, ", "));
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  out << text;
}

int cmd_tune(const TuneArgs& a) {
  const auto wf = load_workflow(a.spec);
  const auto metric = a.metric.empty() ? wf.metric : parse_metric(a.metric);
  const auto algo = parse_algorithm(a.algo);
  const auto kind = parse_executor_kind(a.executor);
  const SeedPlan seeds{a.seed};

  BudgetCell cell;
  cell.m = a.m;
  cell.m_r = a.m_r;
  cell.m_0 = a.m_0;
  cell.iters = a.iters;
  cell.history = parse_history_flag(a.history);
  auto budget = cell.resolve();
  if (algo == Algorithm::Al || algo == Algorithm::Geist) budget.m_r = 0;
  if (algo != Algorithm::Rs) budget.validate();

  const auto pool = make_pool(wf, a.pool_size, seeds.pool_seed(0));
  auto executor = make_executor(wf, kind, seeds.noise_seed(0));
  HistoricalData history;
  if (cell.history.kind == HistorySource::Kind::Generated) {
    history = generate_history(wf, cell.history.count, seeds.history_seed(0));
  } else if (cell.history.kind == HistorySource::Kind::Files) {
    history = load_history(wf);
  }

  std::optional<TuningTrace> recorded;
  if (!a.resume.empty()) recorded = load_trace(a.resume);
  std::unique_ptr<ReplayExecutor> replay;
  Executor* exec = executor.get();
  if (recorded) {
    replay = std::make_unique<ReplayExecutor>(*recorded, *executor);
    exec = replay.get();
  }

  TunerOptions options;
  options.checkpoint = [&](const TuningTrace& t) { save_trace(a.out, t); };
  TuningProblem problem{wf, pool, *exec, metric, std::move(history), seeds.tuner_seed(0)};
  auto result = run_algorithm(algo, problem, budget, options);
  auto& trace = result.trace;

  std::optional<BestPerformance> perf;
  if (kind == ExecutorKind::Synthetic) {
    perf = best_performance(trace, brute_force_oracle(make_synthetic(wf), pool), metric);
  } else {
    perf = best_performance(trace, *executor, metric);
  }
  save_trace(a.out, trace);
  if (!a.model_out.empty()) {
    if (!result.surrogate) throw ConfigError("--model-out: this algorithm's model is not a plain surrogate");
    result.surrogate->save(a.model_out);
  }

  fmt::print("algorithm        {}\n", trace.algorithm);
  fmt::print("metric           {}\n", trace.metric);
  fmt::print("budget           m={} m_r={} m_0={} iters={}\n", trace.budget.m, trace.budget.m_r, trace.budget.m_0,
             trace.budget.iters);
  fmt::print("charged          component_runs={} workflow_runs={} total={}\n", trace.component_phase.charged,
             trace.workflow_runs(), trace.charged());
  fmt::print("switch           {}\n", trace.switch_iteration ? std::to_string(*trace.switch_iteration) : "none");
  fmt::print("best             pool_index={} config={}\n", trace.best.pool_index, join_values(trace.best.config));
  fmt::print("predicted        {}\n", format_number(trace.best.predicted));
  if (perf) {
    fmt::print("{}         {}\n", kind == ExecutorKind::Synthetic ? "oracle  " : "measured", format_number(perf->value));
    if (perf->normalized) fmt::print("normalized       {}\n", format_number(*perf->normalized));
  }
  if (replay) fmt::print("replayed         {} runs\n", replay->replayed());
  fmt::print("trace            {}\n", a.out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Auto-tuner for coupled multi-component workflows"};
  app.require_subcommand(1);

  TuneArgs tune;
  auto* t = app.add_subcommand("tune", "Run one tuner and write its trace");
  t->add_option("--spec", tune.spec, "Workflow description (JSON)")->required()->check(CLI::ExistingFile);
  t->add_option("--algo", tune.algo, "rs, al, geist, alph or ceal")
      ->check(CLI::IsMember({"rs", "al", "geist", "alph", "ceal"}));
  t->add_option("--m", tune.m, "Total budget in workflow runs")->check(CLI::PositiveNumber);
  t->add_option("--m-r", tune.m_r, "Component-run budget");
  t->add_option("--m-0", tune.m_0, "Initial random samples");
  t->add_option("--iters", tune.iters, "Iterations")->check(CLI::PositiveNumber);
  t->add_option("--seed", tune.seed, "Seed");
  t->add_option("--executor", tune.executor, "synth or external")->check(CLI::IsMember({"synth", "external"}));
  t->add_option("--out", tune.out, "Trace output path");
  t->add_option("--metric", tune.metric, "execution_time or computer_time (default: the workflow's)");
  t->add_option("--history", tune.history, "Component history: none, files or a generated sample count");
  t->add_option("--pool-size", tune.pool_size, "Sample pool size")->check(CLI::PositiveNumber);
  t->add_option("--resume", tune.resume, "Replay the measurements of an earlier (partial) trace")
      ->check(CLI::ExistingFile);
  t->add_option("--model-out", tune.model_out, "Save the final model");

  std::string plan_path, bench_out = "bench.csv";
  std::optional<std::size_t> bench_reps;
  auto* b = app.add_subcommand("bench", "Repeated paired-seed comparison, CSV out");
  b->add_option("plan", plan_path, "Experiment plan (JSON)")->required()->check(CLI::ExistingFile);
  b->add_option("--out", bench_out, "CSV output path");
  b->add_option("--reps", bench_reps, "Override the plan's repetition count")->check(CLI::PositiveNumber);

  std::string sw_spec, sw_param = "iters", sw_grid, sw_algo = "ceal", sw_metric, sw_history = "none",
                       sw_out = "sweep.csv";
  std::size_t sw_m = 50, sw_iters = 3, sw_reps = 30, sw_pool = 2000;
  std::optional<std::size_t> sw_m_r, sw_m_0;
  std::uint64_t sw_seed = 1;
  auto* s = app.add_subcommand("sweep", "Performance against one budget hyper-parameter, CSV out");
  s->add_option("--spec", sw_spec, "Workflow description (JSON)")->required()->check(CLI::ExistingFile);
  s->add_option("--param", sw_param, "iters, m-r-frac or m-0-frac")
      ->check(CLI::IsMember({"iters", "m-r-frac", "m-0-frac"}));
  s->add_option("--grid", sw_grid, "Comma-separated values (default grid when omitted)");
  s->add_option("--algo", sw_algo, "Tuner")->check(CLI::IsMember({"rs", "al", "geist", "alph", "ceal"}));
  s->add_option("--metric", sw_metric, "execution_time or computer_time");
  s->add_option("--m", sw_m, "Total budget")->check(CLI::PositiveNumber);
  s->add_option("--m-r", sw_m_r, "Component-run budget");
  s->add_option("--m-0", sw_m_0, "Initial random samples");
  s->add_option("--iters", sw_iters, "Iterations")->check(CLI::PositiveNumber);
  s->add_option("--history", sw_history, "none, files or a generated sample count");
  s->add_option("--reps", sw_reps, "Repetitions per grid value")->check(CLI::PositiveNumber);
  s->add_option("--seed", sw_seed, "Seed base");
  s->add_option("--pool-size", sw_pool, "Sample pool size")->check(CLI::PositiveNumber);
  s->add_option("--out", sw_out, "CSV output path");

  std::string or_spec, or_out = "oracle.csv";
  std::size_t or_pool = 2000, or_rep = 0;
  std::uint64_t or_seed = 1;
  bool or_enum = false;
  auto* o = app.add_subcommand("oracle", "Noise-free ground-truth table");
  o->add_option("--spec", or_spec, "Workflow description (JSON)")->required()->check(CLI::ExistingFile);
  auto* pool_opt = o->add_option("--pool-size", or_pool, "Pool size")->check(CLI::PositiveNumber);
  o->add_flag("--enumerate", or_enum, "Every feasible configuration instead of a pool")->excludes(pool_opt);
  o->add_option("--seed", or_seed, "Seed base (pool of repetition --rep)");
  o->add_option("--rep", or_rep, "Repetition whose pool to tabulate");
  o->add_option("--out", or_out, "CSV output path");

  std::string hi_spec;
  std::size_t hi_count = 500;
  std::uint64_t hi_seed = 1;
  auto* h = app.add_subcommand("history", "Generate component history files from the synthetic surface");
  h->add_option("--spec", hi_spec, "Workflow description (JSON)")->required()->check(CLI::ExistingFile);
  h->add_option("--count", hi_count, "Samples per component")->check(CLI::PositiveNumber);
  h->add_option("--seed", hi_seed, "Seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*t) return cmd_tune(tune);
    if (*b) {
      auto plan = ExperimentPlan::load(plan_path);
      if (bench_reps) plan.repetitions = *bench_reps;
      const auto cells = run_bench(plan, workers_from_env());
      std::ostringstream csv;
      write_bench_csv(csv, cells);
      write_file(bench_out, csv.str());
      fmt::print("{} cells -> {}\n", cells.size(), bench_out);
      return 0;
    }
    if (*s) {
      const auto wf = load_workflow(sw_spec);
      SweepPlan plan;
      plan.param = parse_sweep_param(sw_param);
      plan.algorithm = parse_algorithm(sw_algo);
      plan.metric = sw_metric.empty() ? wf.metric : parse_metric(sw_metric);
      plan.base.m = sw_m;
      plan.base.m_r = sw_m_r;
      plan.base.m_0 = sw_m_0;
      plan.base.iters = sw_iters;
      plan.base.history = parse_history_flag(sw_history);
      plan.repetitions = sw_reps;
      plan.seed = sw_seed;
      plan.pool_size = sw_pool;
      if (!sw_grid.empty()) {
        std::stringstream ss(sw_grid);
        std::string item;
        while (std::getline(ss, item, ',')) {
          try {
            plan.grid.push_back(std::stod(item));
          } catch (const std::exception&) {
            throw ConfigError("--grid: '" + item + "' is not a number");
          }
        }
      }
      const auto rows = run_sweep(wf, plan, workers_from_env());
      std::ostringstream csv;
      write_sweep_csv(csv, plan, rows);
      write_file(sw_out, csv.str());
      for (const auto& r : rows) {
        if (!r.ok) fmt::print(stderr, "warning: {} = {} skipped: {}\n", sw_param, format_number(r.value), r.message);
      }
      fmt::print("{} rows -> {}\n", rows.size(), sw_out);
      return 0;
    }
    if (*o) {
      const auto wf = load_workflow(or_spec);
      const auto synth = make_synthetic(wf);
      const auto table = or_enum ? brute_force_oracle(synth, wf.space)
                                 : brute_force_oracle(synth, make_pool(wf, or_pool, SeedPlan{or_seed}.pool_seed(or_rep)));
      std::ostringstream csv;
      write_oracle_csv(csv, wf, table);
      write_file(or_out, csv.str());
      fmt::print("{} rows -> {} (exec min {}, computer min {})\n", table.size(), or_out,
                 format_number(table.minimum(MetricKind::ExecutionTime)),
                 format_number(table.minimum(MetricKind::ComputerTime)));
      return 0;
    }
    if (*h) {
      const auto wf = load_workflow(hi_spec);
      write_history_files(wf, generate_history(wf, hi_count, hi_seed));
      for (const auto& c : wf.components) {
        if (c.configurable()) fmt::print("{}: {} samples -> {}\n", c.name, hi_count, c.history_file->string());
      }
      return 0;
    }
  } catch (const ConfigError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 0;
}
