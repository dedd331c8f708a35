#include "ceal/tuner.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "ceal/error.hpp"
#include "ceal/kernels.hpp"
#include "ceal/metrics.hpp"

namespace ceal {

void Budget::validate() const {
  if (iters < 1) throw ConfigError("iterations must be at least 1");
  if (m_r + m_0 >= m) {
    throw ConfigError(fmt::format("budget: m_R + m_0 = {} must be less than m = {}", m_r + m_0, m));
  }
  if (m - m_0 - m_r < iters) {
    throw ConfigError(
        fmt::format("budget: m - m_0 - m_R = {} leaves an empty batch for {} iterations", m - m_0 - m_r, iters));
  }
}

std::vector<std::size_t> Budget::batch_sizes() const {
  validate();
  const std::size_t rest = m - m_0 - m_r;
  std::vector<std::size_t> out(iters, rest / iters);
  for (std::size_t i = 0; i < rest % iters; ++i) ++out[i];
  return out;
}

Budget default_budget(std::size_t m, bool has_history, std::size_t iters) {
  Budget b;
  b.m = m;
  b.iters = iters;
  const double md = static_cast<double>(m);
  b.m_0 = static_cast<std::size_t>(std::llround((has_history ? 0.25 : 0.15) * md));
  b.m_r = has_history ? 0 : static_cast<std::size_t>(std::llround(0.4 * md));
  return b;
}

HistoricalData load_history(const Workflow& wf) {
  HistoricalData h(wf.components.size());
  for (std::size_t j = 0; j < wf.components.size(); ++j) {
    const auto& c = wf.components[j];
    if (c.history_file) h[j] = import_history(c.history_file->string(), c.space).samples;
  }
  return h;
}

Trainer surrogate_trainer(SurrogateHyperparams hp) {
  return [hp](const std::vector<Configuration>& configs, const std::vector<double>& targets,
              std::uint64_t seed) -> EvaluatorPtr {
    if (configs.empty()) return std::make_shared<ConstantEvaluator>();
    TrainingSet data;
    for (std::size_t i = 0; i < configs.size(); ++i) data.add(configs[i].values, targets[i]);
    auto h = hp;
    h.seed = seed;
    return std::make_shared<SurrogateEvaluator>(std::make_shared<const SurrogateModel>(fit(data, h)));
  };
}

std::shared_ptr<LowFidelityModel> ComponentModels::low_fidelity(MetricKind metric) const {
  return std::make_shared<LowFidelityModel>(models, bindings, choose_function(metric), fixed_offsets);
}

ComponentModels build_component_models(const Workflow& wf, MetricKind metric, std::size_t m_r,
                                       const HistoricalData& history, Executor& executor, Rng& rng,
                                       const SurrogateHyperparams& hp) {
  ComponentModels out;
  auto& rec = out.record;
  rec.charged = m_r;
  rec.history_rows.assign(wf.components.size(), 0);
  rec.fixed_offsets.assign(wf.components.size(), 0.0);
  auto history_of = [&](std::size_t j) -> const std::vector<ComponentSample>* {
    return j < history.size() ? &history[j] : nullptr;
  };

  for (std::size_t j = 0; j < wf.components.size(); ++j) {
    const auto& comp = wf.components[j];
    const auto* hist = history_of(j);
    if (hist) rec.history_rows[j] = hist->size();

    if (!comp.configurable()) {
      double offset = 0.0;
      if (hist && !hist->empty()) {
        for (const auto& s : *hist) offset += s.metric(metric);
        offset /= static_cast<double>(hist->size());
      } else {
        auto m = executor.measure_component(j, Configuration{});
        rec.fixed_runs.push_back(m);
        if (!m.ok()) throw ConfigError(fmt::format("component '{}': {}", comp.name, m.diagnostic));
        offset = m.metric(metric);
      }
      rec.fixed_offsets[j] = offset;
      out.fixed_offsets.push_back(offset);
      continue;
    }

    if (m_r == 0 && (!hist || hist->empty())) {
      throw ConfigError(fmt::format("component '{}' has no history; m_R must be positive", comp.name));
    }
    TrainingSet data;
    std::size_t ok = 0, attempts = 0;
    const std::size_t max_attempts = 10 * m_r + 10;
    while (ok < m_r && attempts < max_attempts) {
      ++attempts;
      auto cj = random_configuration(comp.space, rng);
      auto m = executor.measure_component(j, cj);
      rec.runs.push_back(m);
      if (!m.ok()) continue;
      data.add(m.config.values, m.metric(metric));
      ++ok;
    }
    if (hist) {
      for (const auto& s : *hist) data.add(s.config.values, s.metric(metric));
    }
    if (data.empty()) throw ConfigError(fmt::format("component '{}': every run failed", comp.name));
    auto h = hp;
    h.seed = derive_seed(hp.seed, "component", j);
    out.models.push_back(std::make_shared<const SurrogateModel>(fit(data, h)));
    out.bindings.push_back({j, comp.binding});
  }
  return out;
}

SwitchCheck detect_switch(const Evaluator& high, const Evaluator& low, const std::vector<Configuration>& batch,
                          const std::vector<double>& measured, std::size_t top) {
  if (batch.size() != measured.size()) throw StructuralError("detect_switch: batch and measurements differ in size");
  if (batch.empty()) return {};
  const auto ph = kernels::parallel::score_all(high, batch);
  const auto pl = kernels::parallel::score_all(low, batch);
  SwitchCheck c;
  c.s_high = recall_sum(top, ph, measured);
  c.s_low = recall_sum(top, pl, measured);
  c.switched = c.s_high >= c.s_low;
  return c;
}

BestRecord best_predicted(const Evaluator& model, const SamplePool& pool) {
  if (pool.size() == 0) throw ConfigError("best_predicted: empty pool");
  const auto ranked = rank_all(model, pool);
  return {ranked.front().pool_index, pool[ranked.front().pool_index], ranked.front().score};
}

TuningResult run_ceal(const TuningProblem& problem, const Budget& budget, const TunerOptions& options) {
  budget.validate();
  detail::ActiveLoop loop;
  loop.algorithm = "ceal";
  loop.trainer = options.trainer ? options.trainer : surrogate_trainer(options.model_hp);
  loop.detect_top = options.detect_top;
  loop.checkpoint = options.checkpoint;

  Rng component_rng(derive_seed(problem.seed, "component"));
  auto hp = options.component_hp;
  hp.seed = derive_seed(problem.seed, "component-model");
  auto models = build_component_models(problem.workflow, problem.metric, budget.m_r, problem.history,
                                       problem.executor, component_rng, hp);
  loop.phase = std::move(models.record);
  loop.low_fidelity = options.low_fidelity ? options.low_fidelity : models.low_fidelity(problem.metric);
  return detail::run_active_loop(problem, budget, std::move(loop));
}

namespace detail {

std::vector<std::size_t> draw_random(SamplePool& pool, Rng& rng, std::size_t k) {
  auto rest = pool.remaining_indices();
  k = std::min(k, rest.size());
  std::vector<std::size_t> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::size_t>(uniform_index(rng, rest.size() - i));
    std::swap(rest[i], rest[j]);
    pool.consume(rest[i]);
    out.push_back(rest[i]);
  }
  return out;
}

std::vector<SelectedEntry> measure_with_replacement(
    SamplePool& pool, Executor& executor, std::vector<std::pair<std::size_t, SelectionSource>> batch,
    const std::function<std::optional<std::size_t>(SelectionSource)>& replace) {
  std::vector<SelectedEntry> out;
  while (!batch.empty()) {
    std::vector<Configuration> configs;
    for (const auto& [idx, _] : batch) configs.push_back(pool[idx]);
    auto ms = measure_batch(executor, configs);
    std::vector<std::pair<std::size_t, SelectionSource>> again;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const bool ok = ms[i].ok();
      out.push_back({batch[i].first, batch[i].second, std::move(ms[i])});
      if (!ok) {
        if (auto r = replace(batch[i].second)) again.emplace_back(*r, batch[i].second);
      }
    }
    batch = std::move(again);
  }
  return out;
}

std::shared_ptr<const SurrogateModel> surrogate_of(const EvaluatorPtr& e) {
  if (auto s = std::dynamic_pointer_cast<const SurrogateEvaluator>(e)) return s->model_ptr();
  return nullptr;
}

TuningTrace start_trace(const std::string& algorithm, const TuningProblem& problem, const Budget& budget) {
  TuningTrace t;
  t.algorithm = algorithm;
  t.seed = problem.seed;
  t.budget = budget.record();
  t.metric = to_string(problem.metric);
  t.pool_fingerprint = problem.pool.fingerprint();
  t.pool_size = problem.pool.size();
  return t;
}

namespace {

/// Hands out the entries of one ranking in order, skipping consumed ones.
class RankedPicker {
 public:
  RankedPicker() = default;
  explicit RankedPicker(std::vector<RankedEntry> ranking) : ranking_(std::move(ranking)) {}

  std::optional<std::size_t> next(SamplePool& pool) {
    while (cursor_ < ranking_.size()) {
      const auto idx = ranking_[cursor_++].pool_index;
      if (!pool.consumed(idx)) {
        pool.consume(idx);
        return idx;
      }
    }
    return std::nullopt;
  }

 private:
  std::vector<RankedEntry> ranking_;
  std::size_t cursor_ = 0;
};

}  // namespace

TuningResult run_active_loop(const TuningProblem& problem, const Budget& budget, ActiveLoop loop) {
  const auto sizes = budget.batch_sizes();
  SamplePool pool = problem.pool;
  Rng rng(derive_seed(problem.seed, "select"));
  const std::uint64_t model_seed = derive_seed(problem.seed, "model");

  TuningTrace trace = start_trace(loop.algorithm, problem, budget);
  trace.component_phase = std::move(loop.phase);

  // iteration 1: m_0 random picks, then the low-fidelity model's top m_B
  // (or m_B more random picks without one)
  std::vector<std::pair<std::size_t, SelectionSource>> batch;
  RankedPicker picker;
  SelectionSource model_source = SelectionSource::LowFidelity;
  if (loop.low_fidelity) {
    for (auto i : draw_random(pool, rng, budget.m_0)) batch.emplace_back(i, SelectionSource::Random);
    picker = RankedPicker(rank_pool(*loop.low_fidelity, pool));
    for (std::size_t k = 0; k < sizes[0]; ++k) {
      if (auto i = picker.next(pool)) batch.emplace_back(*i, SelectionSource::LowFidelity);
    }
  } else {
    for (auto i : draw_random(pool, rng, budget.m_0 + sizes[0])) batch.emplace_back(i, SelectionSource::Random);
  }

  EvaluatorPtr high = loop.trainer({}, {}, model_seed);
  bool switched = !loop.low_fidelity;
  std::vector<Configuration> seen;
  std::vector<double> targets;

  auto replace = [&](SelectionSource s) -> std::optional<std::size_t> {
    if (s == SelectionSource::Random) {
      auto r = draw_random(pool, rng, 1);
      if (r.empty()) return std::nullopt;
      return r.front();
    }
    return picker.next(pool);
  };

  for (std::size_t it = 1; it <= budget.iters; ++it) {
    IterationRecord rec;
    rec.index = it;
    rec.entries = measure_with_replacement(pool, problem.executor, std::move(batch), replace);
    batch.clear();

    std::vector<Configuration> batch_configs;
    std::vector<double> batch_values;
    for (const auto& e : rec.entries) {
      if (!e.measurement.ok()) continue;
      batch_configs.push_back(e.measurement.config);
      batch_values.push_back(e.measurement.metric(problem.metric));
    }
    if (!switched) {
      rec.check = detect_switch(*high, *loop.low_fidelity, batch_configs, batch_values, loop.detect_top);
      if (rec.check->switched) {
        switched = true;
        trace.switch_iteration = it;
      }
    }
    seen.insert(seen.end(), batch_configs.begin(), batch_configs.end());
    targets.insert(targets.end(), batch_values.begin(), batch_values.end());
    high = loop.trainer(seen, targets, model_seed);
    rec.evaluator = switched ? "high_fidelity" : "low_fidelity";
    trace.iterations.push_back(std::move(rec));

    if (it < budget.iters) {
      const Evaluator& active = switched ? *high : *loop.low_fidelity;
      model_source = switched ? SelectionSource::HighFidelity : SelectionSource::LowFidelity;
      picker = RankedPicker(rank_pool(active, pool));
      for (std::size_t k = 0; k < sizes[it]; ++k) {
        if (auto i = picker.next(pool)) batch.emplace_back(*i, model_source);
      }
    }
    if (loop.checkpoint) loop.checkpoint(trace);
  }

  trace.best = best_predicted(*high, problem.pool);
  TuningResult result;
  result.model = high;
  result.surrogate = surrogate_of(high);
  result.low_fidelity = loop.low_fidelity;
  result.trace = std::move(trace);
  return result;
}

}  // namespace detail

}  // namespace ceal
