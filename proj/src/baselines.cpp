#include "ceal/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "ceal/error.hpp"

namespace ceal {

kernels::Csr neighbor_graph(const ParameterSpace& space, const SamplePool& pool) {
  std::unordered_map<Configuration, std::size_t, ConfigurationHash> where;
  for (std::size_t i = 0; i < pool.size(); ++i) where.emplace(pool[i], i);

  std::vector<std::vector<std::size_t>> adj(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    Configuration probe = pool[i];
    for (std::size_t d = 0; d < space.dimension(); ++d) {
      const auto& opts = space.parameters()[d].options();
      const auto k = space.parameters()[d].index_of(pool[i][d]);
      if (!k) throw StructuralError("neighbor_graph: pool entry outside the space");
      // only the upward step; the edge is added in both directions
      if (*k + 1 >= opts.size()) continue;
      probe.values[d] = opts[*k + 1];
      auto it = where.find(probe);
      if (it != where.end()) {
        adj[i].push_back(it->second);
        adj[it->second].push_back(i);
      }
      probe.values[d] = pool[i][d];
    }
  }
  kernels::Csr g;
  g.offsets.push_back(0);
  for (auto& row : adj) {
    std::sort(row.begin(), row.end());
    g.neighbors.insert(g.neighbors.end(), row.begin(), row.end());
    g.offsets.push_back(g.neighbors.size());
  }
  return g;
}

std::vector<double> propagate_labels(const kernels::Csr& graph, const std::vector<std::optional<double>>& labels,
                                     std::size_t sweeps, double prior) {
  if (labels.size() != graph.nodes()) throw StructuralError("propagate_labels: one label slot per node");
  std::vector<double> score(labels.size(), prior);
  std::vector<std::uint8_t> clamped(labels.size(), 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i]) {
      score[i] = *labels[i];
      clamped[i] = 1;
    }
  }
  for (std::size_t s = 0; s < sweeps; ++s) score = kernels::parallel::propagate_sweep(graph, score, clamped);
  return score;
}

namespace {

TunerOptions with_trainer(const TunerOptions& options) {
  auto o = options;
  if (!o.trainer) o.trainer = surrogate_trainer(o.model_hp);
  return o;
}

TuningResult finish(TuningTrace trace, const TuningProblem& problem, const Trainer& trainer) {
  std::vector<Configuration> configs;
  std::vector<double> targets;
  for (const auto* m : trace.measurements()) {
    configs.push_back(m->config);
    targets.push_back(m->metric(problem.metric));
  }
  TuningResult r;
  r.model = trainer(configs, targets, derive_seed(problem.seed, "model"));
  r.surrogate = detail::surrogate_of(r.model);
  trace.best = best_predicted(*r.model, problem.pool);
  r.trace = std::move(trace);
  return r;
}

}  // namespace

TuningResult run_rs(const TuningProblem& problem, std::size_t m, const TunerOptions& options) {
  if (m < 1) throw ConfigError("random sampling needs m >= 1");
  const auto opts = with_trainer(options);
  SamplePool pool = problem.pool;
  Rng rng(derive_seed(problem.seed, "select"));

  Budget b{m, 0, 0, 1};
  auto trace = detail::start_trace("rs", problem, b);
  trace.budget.m_0 = m;
  std::vector<std::pair<std::size_t, SelectionSource>> batch;
  for (auto i : detail::draw_random(pool, rng, m)) batch.emplace_back(i, SelectionSource::Random);
  IterationRecord rec;
  rec.index = 1;
  rec.evaluator = "random";
  rec.entries = detail::measure_with_replacement(pool, problem.executor, std::move(batch),
                                                 [&](SelectionSource) -> std::optional<std::size_t> {
                                                   auto r = detail::draw_random(pool, rng, 1);
                                                   if (r.empty()) return std::nullopt;
                                                   return r.front();
                                                 });
  trace.iterations.push_back(std::move(rec));
  if (opts.checkpoint) opts.checkpoint(trace);
  return finish(std::move(trace), problem, opts.trainer);
}

TuningResult run_al(const TuningProblem& problem, const Budget& budget, const TunerOptions& options) {
  if (budget.m_r != 0) throw ConfigError("active learning runs no components; m_R must be 0");
  budget.validate();
  const auto opts = with_trainer(options);
  detail::ActiveLoop loop;
  loop.algorithm = "al";
  loop.trainer = opts.trainer;
  loop.checkpoint = opts.checkpoint;
  loop.phase.history_rows.assign(problem.workflow.components.size(), 0);
  loop.phase.fixed_offsets.assign(problem.workflow.components.size(), 0.0);
  return detail::run_active_loop(problem, budget, std::move(loop));
}

TuningResult run_geist_like(const TuningProblem& problem, const Budget& budget, const GeistOptions& geist,
                            const TunerOptions& options) {
  if (budget.m_r != 0) throw ConfigError("the graph-guided tuner runs no components; m_R must be 0");
  if (!(geist.top_fraction > 0.0 && geist.top_fraction <= 1.0)) throw ConfigError("top fraction must be in (0, 1]");
  const auto sizes = budget.batch_sizes();
  const auto opts = with_trainer(options);
  SamplePool pool = problem.pool;
  Rng rng(derive_seed(problem.seed, "select"));
  const auto graph = neighbor_graph(problem.workflow.space, pool);

  auto trace = detail::start_trace("geist", problem, budget);
  trace.component_phase.history_rows.assign(problem.workflow.components.size(), 0);
  trace.component_phase.fixed_offsets.assign(problem.workflow.components.size(), 0.0);

  std::vector<std::size_t> ranking;
  std::size_t cursor = 0;
  auto replace = [&](SelectionSource s) -> std::optional<std::size_t> {
    if (s == SelectionSource::Random) {
      auto r = detail::draw_random(pool, rng, 1);
      if (r.empty()) return std::nullopt;
      return r.front();
    }
    while (cursor < ranking.size()) {
      const auto idx = ranking[cursor++];
      if (!pool.consumed(idx)) {
        pool.consume(idx);
        return idx;
      }
    }
    return std::nullopt;
  };

  std::vector<std::pair<std::size_t, double>> measured;  // (pool index, metric)
  std::vector<std::pair<std::size_t, SelectionSource>> batch;
  for (auto i : detail::draw_random(pool, rng, budget.m_0)) batch.emplace_back(i, SelectionSource::Random);

  for (std::size_t it = 0; it <= budget.iters; ++it) {
    IterationRecord rec;
    rec.index = it;
    rec.evaluator = "graph";
    rec.entries = detail::measure_with_replacement(pool, problem.executor, std::move(batch), replace);
    batch.clear();
    for (const auto& e : rec.entries) {
      if (e.measurement.ok()) measured.emplace_back(e.pool_index, e.measurement.metric(problem.metric));
    }
    trace.iterations.push_back(std::move(rec));
    if (opts.checkpoint) opts.checkpoint(trace);
    if (it == budget.iters) break;

    // label: top when within the best ceil(top_fraction * count) so far
    std::vector<std::optional<double>> labels(pool.size());
    if (!measured.empty()) {
      auto order = measured;
      std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
        return a.second < b.second || (a.second == b.second && a.first < b.first);
      });
      const auto top = static_cast<std::size_t>(std::ceil(geist.top_fraction * static_cast<double>(order.size())));
      for (std::size_t r = 0; r < order.size(); ++r) labels[order[r].first] = r < top ? 1.0 : 0.0;
    }
    const auto score = propagate_labels(graph, labels, geist.sweeps);
    ranking.clear();
    cursor = 0;
    for (auto i : pool.remaining_indices()) ranking.push_back(i);
    std::stable_sort(ranking.begin(), ranking.end(), [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
    for (std::size_t k = 0; k < sizes[it]; ++k) {
      if (auto i = replace(SelectionSource::Graph)) batch.emplace_back(*i, SelectionSource::Graph);
    }
  }
  return finish(std::move(trace), problem, opts.trainer);
}

double StackedEvaluator::score(const Configuration& c) const { return model_->predict(features(*low_, c)); }

std::vector<double> StackedEvaluator::features(const LowFidelityModel& low, const Configuration& c) {
  auto f = c.values;
  const auto p = low.component_predictions(c);
  f.insert(f.end(), p.begin(), p.end());
  return f;
}

TuningResult run_alph(const TuningProblem& problem, const Budget& budget, const TunerOptions& options) {
  budget.validate();
  Rng component_rng(derive_seed(problem.seed, "component"));
  auto hp = options.component_hp;
  hp.seed = derive_seed(problem.seed, "component-model");
  auto models = build_component_models(problem.workflow, problem.metric, budget.m_r, problem.history,
                                       problem.executor, component_rng, hp);
  std::shared_ptr<const LowFidelityModel> low = models.low_fidelity(problem.metric);

  detail::ActiveLoop loop;
  loop.algorithm = "alph";
  loop.phase = std::move(models.record);
  loop.checkpoint = options.checkpoint;
  const auto model_hp = options.model_hp;
  loop.trainer = [low, model_hp](const std::vector<Configuration>& configs, const std::vector<double>& targets,
                                 std::uint64_t seed) -> EvaluatorPtr {
    if (configs.empty()) return std::make_shared<ConstantEvaluator>();
    TrainingSet data;
    for (std::size_t i = 0; i < configs.size(); ++i) data.add(StackedEvaluator::features(*low, configs[i]), targets[i]);
    auto h = model_hp;
    h.seed = seed;
    return std::make_shared<StackedEvaluator>(std::make_shared<const SurrogateModel>(fit(data, h)), low);
  };
  auto r = detail::run_active_loop(problem, budget, std::move(loop));
  r.low_fidelity = low;
  return r;
}

Algorithm parse_algorithm(const std::string& s) {
  if (s == "rs") return Algorithm::Rs;
  if (s == "al") return Algorithm::Al;
  if (s == "geist") return Algorithm::Geist;
  if (s == "alph") return Algorithm::Alph;
  if (s == "ceal") return Algorithm::Ceal;
  throw ConfigError("unknown algorithm '" + s + "' (expected rs, al, geist, alph or ceal)");
}

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Rs: return "rs";
    case Algorithm::Al: return "al";
    case Algorithm::Geist: return "geist";
    case Algorithm::Alph: return "alph";
    case Algorithm::Ceal: return "ceal";
  }
  return "?";
}

TuningResult run_algorithm(Algorithm algo, const TuningProblem& problem, const Budget& budget,
                           const TunerOptions& options) {
  auto workflow_only = budget;
  workflow_only.m_r = 0;
  switch (algo) {
    case Algorithm::Rs: return run_rs(problem, budget.m, options);
    case Algorithm::Al: return run_al(problem, workflow_only, options);
    case Algorithm::Geist: return run_geist_like(problem, workflow_only, {}, options);
    case Algorithm::Alph: return run_alph(problem, budget, options);
    case Algorithm::Ceal: return run_ceal(problem, budget, options);
  }
  throw ConfigError("unknown algorithm");
}

}  // namespace ceal
