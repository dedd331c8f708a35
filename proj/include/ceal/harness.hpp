#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "ceal/baselines.hpp"
#include "ceal/metrics.hpp"
#include "ceal/synthetic.hpp"
#include "ceal/tuner.hpp"
#include "ceal/workflow.hpp"

namespace ceal {

/// Per-repetition seeding. Every algorithm run for repetition `rep`
/// sees the same pool, the same measurement noise and the same tuner seed.
struct SeedPlan {
  std::uint64_t base = 0;

  std::uint64_t pool_seed(std::size_t rep) const { return derive_seed(base, "pool", rep); }
  std::uint64_t noise_seed(std::size_t rep) const { return derive_seed(base, "noise", rep); }
  std::uint64_t tuner_seed(std::size_t rep) const { return derive_seed(base, "tuner", rep); }
  std::uint64_t history_seed(std::size_t rep) const { return derive_seed(base, "history", rep); }
};

SamplePool make_pool(const Workflow& wf, std::size_t pool_size, std::uint64_t seed);

/// `count` random runs of every configurable component, measured on the
/// synthetic surface with noise.
HistoricalData generate_history(const Workflow& wf, std::size_t count, std::uint64_t seed);
/// Writes generate_history output to each component's history_file.
void write_history_files(const Workflow& wf, const HistoricalData& history);

/// Where component history comes from in an experiment cell.
struct HistorySource {
  enum class Kind { None, Generated, Files };
  Kind kind = Kind::None;
  std::size_t count = 0;  // Generated only

  bool present() const { return kind != Kind::None; }
  std::string label() const;  // "none", "gen500", "files"
  static HistorySource parse(const nlohmann::json& j);
};

/// True performance of a tuner's best predicted configuration.
struct BestPerformance {
  double value = 0.0;
  std::optional<double> optimum;     // pool optimum when an oracle exists
  std::optional<double> normalized;  // value / optimum
};

/// Oracle lookup of the trace's best pool entry (oracle built on the same pool).
BestPerformance best_performance(const TuningTrace& trace, const OracleTable& oracle, MetricKind metric);
/// One extra run of the best configuration, recorded on the trace as an
/// uncharged verification. Throws when the run fails.
BestPerformance best_performance(TuningTrace& trace, Executor& executor, MetricKind metric);

struct BudgetCell {
  std::size_t m = 50;
  std::optional<std::size_t> m_r;  // default per default_budget
  std::optional<std::size_t> m_0;
  std::size_t iters = 3;
  HistorySource history;

  Budget resolve() const;
};

struct ExperimentPlan {
  std::string workflow;  // path
  std::vector<Algorithm> algorithms{Algorithm::Rs, Algorithm::Ceal};
  std::vector<MetricKind> metrics;  // empty: the workflow's own metric
  std::vector<BudgetCell> budgets{BudgetCell{}};
  std::size_t repetitions = 30;
  std::uint64_t seed = 1;
  std::size_t pool_size = 2000;
  SurrogateHyperparams model_hp;
  SurrogateHyperparams component_hp;

  static ExperimentPlan from_json(const nlohmann::json& j, const std::string& base_dir = {});
  static ExperimentPlan load(const std::string& path);
};

/// Evaluation of one (algorithm, metric, budget, repetition) cell.
struct CellResult {
  Algorithm algorithm = Algorithm::Rs;
  MetricKind metric = MetricKind::ExecutionTime;
  Budget budget;
  std::string history;
  std::size_t rep = 0;
  std::uint64_t seed = 0;
  std::string pool_fingerprint;
  std::size_t best_pool_index = 0;
  double best_true = 0.0;
  double pool_optimum = 0.0;
  double normalized = 0.0;
  std::vector<double> recall;  // n = 1..10
  double mdape_all = 0.0;
  double mdape_top2 = 0.0;
  double train_cost = 0.0;
  std::optional<double> delta_p;  // reference minus best; needs a reference configuration
  PayoffReport payoff;
  std::optional<std::size_t> switch_iteration;
};

/// Runs one algorithm on one repetition against the synthetic oracle.
CellResult evaluate_cell(const Workflow& wf, Algorithm algo, MetricKind metric, const BudgetCell& cell,
                         std::size_t rep, const SeedPlan& seeds, std::size_t pool_size,
                         const TunerOptions& options = {});

/// All cells of a plan, in (metric, budget, algorithm, repetition) order.
/// Cells run on `workers` threads (0: OpenMP default); output does not
/// depend on the worker count.
std::vector<CellResult> run_bench(const ExperimentPlan& plan, int workers = 0);

/// Per-seed rows followed by mean and median rows per (metric, budget,
/// algorithm) group.
void write_bench_csv(std::ostream& out, const std::vector<CellResult>& cells);

enum class SweepParam { Iters, MrFrac, M0Frac };
SweepParam parse_sweep_param(const std::string& s);
std::string to_string(SweepParam p);

struct SweepPlan {
  SweepParam param = SweepParam::Iters;
  std::vector<double> grid;  // empty: default grid
  Algorithm algorithm = Algorithm::Ceal;
  MetricKind metric = MetricKind::ExecutionTime;
  BudgetCell base;
  std::size_t repetitions = 30;
  std::uint64_t seed = 1;
  std::size_t pool_size = 2000;
};

/// iters: 1..10. Fractions: 5% of m up to the largest value the other
/// budget terms leave room for, in steps of 5% of m; the last grid point
/// is infeasible by construction and shows up as a skipped row.
std::vector<double> default_sweep_grid(const SweepPlan& plan);

struct SweepRow {
  double value = 0.0;
  Budget budget;
  bool ok = false;
  std::string message;
  std::vector<CellResult> cells;
};

std::vector<SweepRow> run_sweep(const Workflow& wf, const SweepPlan& plan, int workers = 0);
void write_sweep_csv(std::ostream& out, const SweepPlan& plan, const std::vector<SweepRow>& rows);

/// Ground-truth table for a workflow: one row per configuration with both
/// metrics and their ranks.
void write_oracle_csv(std::ostream& out, const Workflow& wf, const OracleTable& table);

/// Locale-independent shortest round-trip formatting.
std::string format_number(double v);

/// Worker count from CEAL_WORKERS (0 when unset or invalid).
int workers_from_env();

}  // namespace ceal
