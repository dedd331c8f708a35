#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ceal/combiner.hpp"
#include "ceal/config_space.hpp"
#include "ceal/evaluator.hpp"
#include "ceal/measurement.hpp"
#include "ceal/store.hpp"
#include "ceal/surrogate.hpp"
#include "ceal/trace.hpp"
#include "ceal/workflow.hpp"

namespace ceal {

/// Workflow-run budget. m_r component runs are charged as m_r workflow
/// runs; the remaining m - m_r runs are m_0 random picks plus `iters`
/// model-selected batches.
struct Budget {
  std::size_t m = 50;
  std::size_t m_r = 0;
  std::size_t m_0 = 13;
  std::size_t iters = 3;

  /// Throws ConfigError unless m_r + m_0 < m, iters >= 1 and every batch
  /// gets at least one configuration.
  void validate() const;
  std::size_t workflow_runs() const { return m - m_r; }
  /// m_B per iteration; the remainder of (m - m_0 - m_r) / iters goes one
  /// apiece to the earliest iterations.
  std::vector<std::size_t> batch_sizes() const;
  BudgetRecord record() const { return {m, m_r, m_0, iters}; }
};

/// Recommended split of `m`: m_0 = 25% of m with component history, 15%
/// without; m_r = 0 with history, 40% of m without.
Budget default_budget(std::size_t m, bool has_history, std::size_t iters = 3);

/// Per-component history samples, aligned with the workflow's components.
using HistoricalData = std::vector<std::vector<ComponentSample>>;

/// Loads every component's history_file (components without one get an
/// empty list).
HistoricalData load_history(const Workflow& wf);

/// Everything a tuner run needs besides its budget.
struct TuningProblem {
  const Workflow& workflow;
  const SamplePool& pool;
  Executor& executor;
  MetricKind metric = MetricKind::ExecutionTime;
  HistoricalData history;  // may be empty
  std::uint64_t seed = 0;
};

/// Builds an evaluator from measured workflow configurations and their
/// metric values. Called with empty inputs to create the initial model.
using Trainer = std::function<EvaluatorPtr(const std::vector<Configuration>& configs,
                                           const std::vector<double>& targets, std::uint64_t seed)>;

/// Boosted-tree trainer over raw configuration values; a constant
/// evaluator for empty data.
Trainer surrogate_trainer(SurrogateHyperparams hp);

struct TunerOptions {
  SurrogateHyperparams component_hp;
  SurrogateHyperparams model_hp;
  std::size_t detect_top = 3;  // switch detection sums recalls for n = 1..detect_top
  /// Replaces the high-fidelity trainer (default: surrogate_trainer(model_hp)).
  Trainer trainer;
  /// Replaces the component-combination model.
  EvaluatorPtr low_fidelity;
  /// Called after each iteration with the trace so far.
  std::function<void(const TuningTrace&)> checkpoint;
};

struct ComponentModels {
  std::vector<std::shared_ptr<const SurrogateModel>> models;  // configurable components only
  std::vector<ComponentBinding> bindings;                      // aligned with models
  std::vector<double> fixed_offsets;                           // unconfigurable components
  ComponentPhaseRecord record;

  std::shared_ptr<LowFidelityModel> low_fidelity(MetricKind metric) const;
};

/// Phase 1: m_r random runs of every configurable component, merged with
/// its history, then one model per component. Unconfigurable components
/// are measured once, uncharged, unless their history supplies a value.
/// Throws ConfigError when m_r = 0 and a configurable component has no
/// history.
ComponentModels build_component_models(const Workflow& wf, MetricKind metric, std::size_t m_r,
                                       const HistoricalData& history, Executor& executor, Rng& rng,
                                       const SurrogateHyperparams& hp);

/// Recall-sum comparison of two evaluators on one measured batch. An
/// empty batch never switches.
SwitchCheck detect_switch(const Evaluator& high, const Evaluator& low, const std::vector<Configuration>& batch,
                          const std::vector<double>& measured, std::size_t top = 3);

/// Best entry of the full pool (consumed entries included) under
/// `model`, lowest score first, ties by pool index.
BestRecord best_predicted(const Evaluator& model, const SamplePool& pool);

struct TuningResult {
  TuningTrace trace;
  EvaluatorPtr model;                               // final high-fidelity model
  std::shared_ptr<const SurrogateModel> surrogate;  // set when the model is a plain surrogate
  EvaluatorPtr low_fidelity;                        // CEAL and ALpH only
};

TuningResult run_ceal(const TuningProblem& problem, const Budget& budget, const TunerOptions& options = {});

// ---- shared building blocks for the tuners ----

namespace detail {

/// Draws `k` remaining pool entries uniformly without replacement.
std::vector<std::size_t> draw_random(SamplePool& pool, Rng& rng, std::size_t k);

/// Measures a batch of pool entries. A failed entry is discarded and
/// replaced through `replace` (which consumes and returns a new entry, or
/// nothing when the pool is exhausted) until the batch is complete.
std::vector<SelectedEntry> measure_with_replacement(
    SamplePool& pool, Executor& executor, std::vector<std::pair<std::size_t, SelectionSource>> batch,
    const std::function<std::optional<std::size_t>(SelectionSource)>& replace);

std::shared_ptr<const SurrogateModel> surrogate_of(const EvaluatorPtr& e);

TuningTrace start_trace(const std::string& algorithm, const TuningProblem& problem, const Budget& budget);

/// The batch-mode active-learning loop shared by CEAL, AL and ALpH. With
/// a low-fidelity model, iteration 1 is m_0 random picks plus its top
/// m_B, and the loop switches to the trained model once it ranks a batch
/// at least as well. Without one, iteration 1 is all random.
struct ActiveLoop {
  std::string algorithm;
  EvaluatorPtr low_fidelity;
  Trainer trainer;
  ComponentPhaseRecord phase;
  std::size_t detect_top = 3;
  std::function<void(const TuningTrace&)> checkpoint;
};

TuningResult run_active_loop(const TuningProblem& problem, const Budget& budget, ActiveLoop loop);

}  // namespace detail

}  // namespace ceal
