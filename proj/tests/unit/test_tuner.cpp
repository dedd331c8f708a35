#include <doctest.h>

#include <map>
#include <set>

#include "ceal/error.hpp"
#include "ceal/harness.hpp"
#include "ceal/tuner.hpp"
#include "support.hpp"

using namespace ceal;
using testing::CountingExecutor;
using testing::FlakyExecutor;

namespace {

struct Fixture {
  Workflow wf = testing::lv_like();
  SamplePool pool = make_pool(wf, 400, 11);
  SyntheticExecutor exec{make_synthetic(wf), 5};
  HistoricalData history = generate_history(wf, 120, 3);
  OracleTable oracle = brute_force_oracle(make_synthetic(wf), pool);

  TuningProblem problem(Executor& e, bool with_history, std::uint64_t seed = 7) {
    return TuningProblem{wf, pool, e, MetricKind::ExecutionTime, with_history ? history : HistoricalData{}, seed};
  }
};

TunerOptions fast_options() {
  TunerOptions o;
  o.model_hp.tree_count = 40;
  o.component_hp.tree_count = 40;
  return o;
}

std::vector<std::size_t> selected_indices(const TuningTrace& t) {
  std::vector<std::size_t> out;
  for (const auto& it : t.iterations) {
    for (const auto& e : it.entries) out.push_back(e.pool_index);
  }
  return out;
}

Workflow tiny_workflow() {
  return parse_workflow(nlohmann::json::parse(R"({
    "metric": "execution_time",
    "components": [
      {"name": "a", "parameters": [{"name": "a_p", "list": [1, 2]}]},
      {"name": "b", "parameters": [{"name": "b_p", "list": [1, 2, 3]}]}
    ],
    "synthetic": {"components": {"a": {"work": 4, "procs": "a_p"}, "b": {"work": 3, "procs": "b_p"}}}
  })"));
}

}  // namespace

TEST_CASE("budget arithmetic") {
  CHECK(Budget{50, 0, 13, 3}.batch_sizes() == std::vector<std::size_t>{13, 12, 12});
  CHECK(Budget{50, 25, 8, 3}.batch_sizes() == std::vector<std::size_t>{6, 6, 5});
  CHECK(Budget{50, 0, 13, 1}.batch_sizes() == std::vector<std::size_t>{37});
  CHECK_THROWS_AS(Budget({50, 40, 20, 3}).validate(), ConfigError);
  CHECK_THROWS_AS(Budget({50, 0, 13, 0}).validate(), ConfigError);
  CHECK_THROWS_AS(Budget({10, 0, 8, 3}).validate(), ConfigError);
  CHECK_NOTHROW(Budget({10, 0, 7, 3}).validate());

  const auto with = default_budget(50, true);
  CHECK(with.m_0 == 13);
  CHECK(with.m_r == 0);
  const auto without = default_budget(50, false);
  CHECK(without.m_0 == 8);
  CHECK(without.m_r == 20);
  CHECK_NOTHROW(without.validate());
}

TEST_CASE("component phase charges exactly m_r runs per component") {
  Fixture f;
  CountingExecutor counter(f.exec);
  Rng rng(1);
  const auto cm = build_component_models(f.wf, MetricKind::ExecutionTime, 10, {}, counter, rng, {});
  CHECK(counter.component_calls == 20);
  CHECK(counter.workflow_calls == 0);
  CHECK(cm.record.charged == 10);
  std::map<std::size_t, std::size_t> per;
  for (const auto& r : cm.record.runs) ++per[r.component];
  CHECK(per[0] == 10);
  CHECK(per[1] == 10);
  CHECK(cm.models.size() == 2);
  CHECK(cm.models[0]->training_rows() == 10);
}

TEST_CASE("component phase with history only is free") {
  Fixture f;
  CountingExecutor counter(f.exec);
  Rng rng(1);
  const auto cm = build_component_models(f.wf, MetricKind::ExecutionTime, 0, f.history, counter, rng, {});
  CHECK(counter.component_calls == 0);
  CHECK(cm.record.charged == 0);
  CHECK(cm.models[0]->training_rows() == 120);
  CHECK(cm.record.history_rows == std::vector<std::size_t>{120, 120});
  CHECK_THROWS_AS(build_component_models(f.wf, MetricKind::ExecutionTime, 0, {}, counter, rng, {}), ConfigError);
}

TEST_CASE("history and component runs are a multiset union") {
  const auto wf = tiny_workflow();
  SyntheticExecutor exec(make_synthetic(wf), 0);
  HistoricalData history(2);
  history[0] = {{Configuration{{1}}, 4.0, 0.1}, {Configuration{{2}}, 2.0, 0.1}};
  history[1] = {{Configuration{{1}}, 3.0, 0.1}, {Configuration{{3}}, 1.0, 0.1}};
  Rng rng(3);
  const auto cm = build_component_models(wf, MetricKind::ExecutionTime, 5, history, exec, rng, {});
  CHECK(cm.models[0]->training_rows() == 7);
  CHECK(cm.models[1]->training_rows() == 7);
}

TEST_CASE("unconfigurable components become offsets") {
  const auto wf = testing::gp_like();
  SyntheticExecutor exec(make_synthetic(wf), 2);
  CountingExecutor counter(exec);
  Rng rng(4);
  const auto cm = build_component_models(wf, MetricKind::ExecutionTime, 6, {}, counter, rng, {});
  CHECK(cm.record.fixed_runs.size() == 2);
  CHECK(cm.record.runs.size() == 12);
  CHECK(cm.fixed_offsets.size() == 2);
  CHECK(cm.fixed_offsets[0] == doctest::Approx(97.0).epsilon(0.25));
  CHECK(counter.component_calls == 14);
}

TEST_CASE("detect_switch") {
  const std::vector<Configuration> batch{Configuration{{0}}, Configuration{{1}}, Configuration{{2}}};
  const std::vector<double> measured{1, 2, 3};
  FunctionEvaluator perfect([](const Configuration& c) { return c[0]; });
  FunctionEvaluator inverted([](const Configuration& c) { return -c[0]; });

  auto r = detect_switch(perfect, inverted, batch, measured);
  CHECK(r.s_high == 300.0);
  CHECK(r.s_low == 150.0);
  CHECK(r.switched);

  r = detect_switch(perfect, perfect, batch, measured);
  CHECK(r.s_high == 300.0);
  CHECK(r.s_low == 300.0);
  CHECK(r.switched);

  r = detect_switch(inverted, perfect, batch, measured);
  CHECK_FALSE(r.switched);

  r = detect_switch(perfect, inverted, {}, {});
  CHECK_FALSE(r.switched);
  CHECK(r.s_high == 0.0);

  const std::vector<Configuration> two{Configuration{{0}}, Configuration{{1}}};
  r = detect_switch(perfect, inverted, two, {1, 2});
  CHECK(r.s_high == 200.0);
  CHECK(r.s_low == 100.0);

  ConstantEvaluator flat;
  const auto a = detect_switch(flat, inverted, batch, measured);
  const auto b = detect_switch(flat, inverted, batch, measured);
  CHECK(a.s_high == b.s_high);
  CHECK(a.s_high == 300.0);
}

TEST_CASE("best_predicted covers the whole pool") {
  SamplePool pool({Configuration{{5}}, Configuration{{1}}, Configuration{{3}}});
  pool.consume(1);
  FunctionEvaluator ev([](const Configuration& c) { return c[0]; });
  CHECK(best_predicted(ev, pool).pool_index == 1);
  ConstantEvaluator flat(2.0);
  CHECK(best_predicted(flat, pool).pool_index == 0);
  CHECK(best_predicted(flat, pool).predicted == 2.0);
}

TEST_CASE("run_ceal budget conservation and exclusivity") {
  Fixture f;
  for (bool hist : {true, false}) {
    CAPTURE(hist);
    CountingExecutor counter(f.exec);
    const Budget b = default_budget(50, hist);
    const auto res = run_ceal(f.problem(counter, hist), b, fast_options());
    const auto& t = res.trace;
    CHECK(t.workflow_runs() == b.m - b.m_r);
    CHECK(t.charged() == b.m);
    CHECK(counter.workflow_calls == b.m - b.m_r);
    CHECK(t.component_phase.charged == b.m_r);
    CHECK(t.iterations.size() == b.iters);
    const auto idx = selected_indices(t);
    CHECK(std::set<std::size_t>(idx.begin(), idx.end()).size() == idx.size());
    const auto sizes = b.batch_sizes();
    CHECK(t.iterations[0].measured() == b.m_0 + sizes[0]);
    for (std::size_t i = 1; i < b.iters; ++i) CHECK(t.iterations[i].measured() == sizes[i]);
    std::size_t random = 0;
    for (const auto& e : t.iterations[0].entries) random += e.source == SelectionSource::Random;
    CHECK(random == b.m_0);
    CHECK(t.iterations[0].check.has_value());
    CHECK(t.best.config == f.pool[t.best.pool_index]);
  }
}

TEST_CASE("run_ceal is deterministic in its seed") {
  Fixture f;
  const Budget b = default_budget(40, true);
  const auto a = run_ceal(f.problem(f.exec, true, 3), b, fast_options());
  const auto c = run_ceal(f.problem(f.exec, true, 3), b, fast_options());
  CHECK(dump_trace(a.trace) == dump_trace(c.trace));
  const auto d = run_ceal(f.problem(f.exec, true, 4), b, fast_options());
  CHECK(dump_trace(a.trace) != dump_trace(d.trace));
}

TEST_CASE("run_ceal with one iteration") {
  Fixture f;
  const Budget b{30, 0, 8, 1};
  const auto res = run_ceal(f.problem(f.exec, true), b, fast_options());
  REQUIRE(res.trace.iterations.size() == 1);
  CHECK(res.trace.iterations[0].measured() == 30);
  CHECK(res.surrogate);
  CHECK(res.surrogate->training_rows() == 30);
}

TEST_CASE("failed runs are replaced by the same selection rule") {
  Fixture f;
  FlakyExecutor flaky(f.exec, 4);
  const Budget b = default_budget(50, true);
  const auto res = run_ceal(f.problem(flaky, true), b, fast_options());
  const auto& t = res.trace;
  CHECK(t.workflow_runs() == b.m);
  std::size_t failed = 0;
  for (const auto& it : t.iterations) {
    failed += it.failed();
    for (const auto& e : it.entries) {
      if (!e.measurement.ok()) CHECK(fingerprint(e.measurement.config) % 4 == 0);
    }
  }
  CHECK(failed > 0);
  const auto idx = selected_indices(t);
  CHECK(std::set<std::size_t>(idx.begin(), idx.end()).size() == idx.size());
  CHECK(t.charged() == b.m);
}

TEST_CASE("resume through a replayed partial trace") {
  Fixture f;
  const Budget b{45, 18, 7, 4};
  auto opts = fast_options();
  std::optional<TuningTrace> after_two;
  opts.checkpoint = [&](const TuningTrace& t) {
    if (t.iterations.size() == 2) after_two = t;
  };
  const auto full = run_ceal(f.problem(f.exec, false), b, opts);
  REQUIRE(after_two);

  CountingExecutor counter(f.exec);
  ReplayExecutor replay(*after_two, counter);
  const auto resumed = run_ceal(f.problem(replay, false), b, fast_options());
  CHECK(dump_trace(resumed.trace) == dump_trace(full.trace));
  std::size_t recorded = 0;
  for (const auto& it : after_two->iterations) recorded += it.entries.size();
  CHECK(counter.component_calls == 0);
  CHECK(counter.workflow_calls == full.trace.workflow_runs() - recorded);
  CHECK(replay.replayed() == recorded + after_two->component_phase.runs.size());
}

TEST_CASE("trace round trip") {
  Fixture f;
  const auto res = run_ceal(f.problem(f.exec, false), default_budget(40, false), fast_options());
  const auto text = dump_trace(res.trace);
  CHECK(dump_trace(trace_from_json(nlohmann::json::parse(text))) == text);
  auto j = nlohmann::json::parse(text);
  j["version"] = 7;
  CHECK_THROWS_AS(trace_from_json(j), ConfigError);
}

TEST_CASE("oracle models reach the pool optimum for every iteration count") {
  Fixture f;
  const auto synth = make_synthetic(f.wf);
  auto truth = std::make_shared<FunctionEvaluator>(
      [&synth](const Configuration& c) { return synth.measure(c, 0, false).exec_time; });
  for (std::size_t iters = 1; iters <= 5; ++iters) {
    auto opts = fast_options();
    opts.low_fidelity = truth;
    opts.trainer = [truth](const std::vector<Configuration>&, const std::vector<double>&, std::uint64_t) {
      return EvaluatorPtr(truth);
    };
    const Budget b{40, 0, 10, iters};
    const auto res = run_ceal(f.problem(f.exec, true), b, opts);
    CHECK(f.oracle.exec_time[res.trace.best.pool_index] == f.oracle.minimum(MetricKind::ExecutionTime));
  }
}

TEST_CASE("component-model quality improves the result as budgets grow") {
  Fixture f;
  double small = 0, large = 0;
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const auto a = run_ceal(f.problem(f.exec, true, seed), Budget{20, 0, 5, 3}, fast_options());
    const auto b = run_ceal(f.problem(f.exec, true, seed), Budget{80, 0, 20, 3}, fast_options());
    small += f.oracle.exec_time[a.trace.best.pool_index];
    large += f.oracle.exec_time[b.trace.best.pool_index];
  }
  CHECK(large <= small);
}
