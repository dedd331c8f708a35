// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "ceal/baselines.hpp"
#include "ceal/combiner.hpp"
#include "ceal/config_space.hpp"
#include "ceal/harness.hpp"
#include "ceal/kernels.hpp"
#include "ceal/metrics.hpp"
#include "ceal/rng.hpp"
#include "ceal/synthetic.hpp"
#include "ceal/trace.hpp"
#include "ceal/tuner.hpp"
#include "ceal/workflow.hpp"

using namespace ceal;

namespace {

// pinned tolerances
constexpr double kPoolFrequencyFloor = 0.96;
constexpr double kNoSwitchFloor = 0.90;
constexpr double kWinFloor = 0.60;
constexpr double kPayoffRelTol = 1e-12;
constexpr std::size_t kReps = 30;
constexpr std::size_t kPool = 2000;
constexpr std::size_t kHistory = 500;

const std::string kSourceDir = CEAL_SOURCE_DIR;

Workflow lv_like() { return load_workflow(kSourceDir + "/workflows/lv_like.json"); }

struct Outcome {
  bool ok = false;
  std::string detail;
};

int failures = 0;

void run(int id, const std::string& name, double limit_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, fmt::format("exception: {}", e.what())};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = secs < limit_s;
  const bool pass = o.ok && in_time;
  if (!pass) ++failures;
  std::printf("%s criterion %d: %s (%s; %.1fs, limit %.0fs%s)\n", pass ? "PASS" : "FAIL", id, name.c_str(),
              o.detail.c_str(), secs, limit_s, in_time ? "" : ", over the limit");
  std::fflush(stdout);
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

Outcome pool_sizing() {
  const auto p = pool_size_for(500, 0.982);
  if (p != 2009) return {false, fmt::format("pool_size_for(500, 0.982) = {}", p)};
  ParameterSpace population({Parameter::range("rank", 0, 999999, 1)});
  const double top = 0.002 * 1e6;
  std::size_t hits = 0;
  const std::size_t trials = 1000;
  for (std::size_t t = 0; t < trials; ++t) {
    Rng rng(derive_seed(1, "pool-trial", t));
    const auto pool = build_pool(population, p, rng);
    bool hit = false;
    for (const auto& c : pool.entries()) hit = hit || c.values[0] < top;
    hits += hit;
  }
  const double freq = static_cast<double>(hits) / trials;
  return {freq >= kPoolFrequencyFloor, fmt::format("p = {}, top-0.2% frequency {:.3f}", p, freq)};
}

double brute_recall(std::size_t n, const std::vector<double>& pred, const std::vector<double>& meas) {
  auto in_top = [n](const std::vector<double>& v, std::size_t i) {
    std::size_t before = 0;
    for (std::size_t j = 0; j < v.size(); ++j) before += v[j] < v[i] || (v[j] == v[i] && j < i);
    return before < n;
  };
  std::size_t common = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) common += in_top(pred, i) && in_top(meas, i);
  return static_cast<double>(common) / static_cast<double>(n) * 100.0;
}

Outcome recall_oracle() {
  Rng rng(7);
  std::size_t checks = 0;
  for (int inst = 0; inst < 200; ++inst) {
    const std::size_t size = 1 + uniform_index(rng, 50);
    const std::uint64_t levels = 1 + uniform_index(rng, 10);
    std::vector<double> pred(size), meas(size);
    for (std::size_t i = 0; i < size; ++i) {
      pred[i] = static_cast<double>(uniform_index(rng, levels));
      meas[i] = static_cast<double>(uniform_index(rng, levels));
    }
    for (std::size_t n = 1; n <= size; ++n) {
      ++checks;
      if (recall_score(n, pred, meas) != brute_recall(n, pred, meas)) {
        return {false, fmt::format("instance {} n {} disagrees", inst, n)};
      }
    }
  }
  return {true, fmt::format("{} (instance, n) pairs exact", checks)};
}

Outcome combiner_exact() {
  const auto wf = lv_like();
  auto history = generate_history(wf, 200, 5);
  SyntheticExecutor exec(make_synthetic(wf), 3);
  Rng rng(11);
  SurrogateHyperparams hp;
  hp.tree_count = 50;
  const auto models = build_component_models(wf, MetricKind::ExecutionTime, 0, history, exec, rng, hp);
  const auto lf_max = models.low_fidelity(MetricKind::ExecutionTime);
  const auto lf_sum = models.low_fidelity(MetricKind::ComputerTime);
  const auto pool = make_pool(wf, 1000, 12);
  std::vector<double> scores;
  for (const auto& c : pool.entries()) {
    double mx = -INFINITY, sm = 0.0;
    for (std::size_t k = 0; k < models.models.size(); ++k) {
      const double y = models.models[k]->predict(project(c, models.bindings[k]).values);
      mx = std::max(mx, y);
      sm += y;
    }
    if (lf_max->score(c) != mx) return {false, "max mismatch"};
    if (lf_sum->score(c) != sm) return {false, "sum mismatch"};
    scores.push_back(mx);
  }
  const auto base = kernels::rank_ascending(scores);
  for (double scale : {0.5, 3.0, 1e3}) {
    std::vector<double> s2;
    for (double s : scores) s2.push_back(s * scale);
    if (kernels::rank_ascending(s2).front() != base.front()) return {false, fmt::format("argmin moved at x{}", scale)};
  }
  return {true, "1000 configurations bitwise, argmin scale-invariant"};
}

Outcome budget_conservation() {
  const auto wf = lv_like();
  const auto history = generate_history(wf, 100, 9);
  Rng rng(21);
  TunerOptions options;
  options.model_hp.tree_count = 20;
  options.component_hp.tree_count = 20;
  for (int t = 0; t < 100; ++t) {
    Budget b;
    for (;;) {
      b.m = 10 + uniform_index(rng, 61);
      b.m_r = uniform_index(rng, b.m / 2);
      b.m_0 = 1 + uniform_index(rng, b.m / 3);
      b.iters = 1 + uniform_index(rng, 6);
      try {
        b.validate();
        break;
      } catch (const std::exception&) {
      }
    }
    const auto pool = make_pool(wf, 300, derive_seed(21, "pool", t));
    SyntheticExecutor exec(make_synthetic(wf), derive_seed(21, "noise", t));
    TuningProblem problem{wf, pool, exec, MetricKind::ExecutionTime, b.m_r == 0 ? history : HistoricalData{},
                          derive_seed(21, "tuner", t)};
    const auto res = run_ceal(problem, b, options);
    const auto& tr = res.trace;
    std::set<std::size_t> seen;
    std::size_t measured = 0;
    for (const auto& it : tr.iterations) {
      for (const auto& e : it.entries) {
        if (!seen.insert(e.pool_index).second) return {false, fmt::format("tuple {} measured an entry twice", t)};
        measured += e.measurement.ok();
      }
    }
    if (tr.component_phase.charged + measured != b.m) {
      return {false, fmt::format("tuple {} (m {}, m_r {}, m_0 {}, I {}): {} + {} != m", t, b.m, b.m_r, b.m_0, b.iters,
                                 tr.component_phase.charged, measured)};
    }
  }
  return {true, "100 random tuples conserve m with no repeated measurement"};
}

Outcome switch_dynamics() {
  auto wf = lv_like();
  wf.synthetic->noise_sigma = 0.0;
  const auto synth = make_synthetic(wf);
  auto truth = [synth](const Configuration& c) { return synth.measure(c, 0, false).exec_time; };
  const auto history = generate_history(wf, 50, 1);
  std::size_t no_switch_random = 0, switch_oracle = 0;
  const std::size_t seeds = 100;
  const Budget b{50, 0, 13, 3};
  for (std::size_t s = 0; s < seeds; ++s) {
    const auto pool = make_pool(wf, 500, derive_seed(5, "pool", s));
    TunerOptions options;
    options.component_hp.tree_count = 10;
    options.low_fidelity = std::make_shared<FunctionEvaluator>(truth);
    {
      SyntheticExecutor exec(synth, 0);
      options.trainer = [](const std::vector<Configuration>&, const std::vector<double>&, std::uint64_t seed) {
        return std::make_shared<FunctionEvaluator>([seed](const Configuration& c) {
          return static_cast<double>(mix64(seed ^ fingerprint(c)) >> 11);
        });
      };
      const auto res = run_ceal(TuningProblem{wf, pool, exec, MetricKind::ExecutionTime, history, s}, b, options);
      const auto& check = res.trace.iterations.at(0).check;
      no_switch_random += !(check && check->switched);
    }
    {
      SyntheticExecutor exec(synth, 0);
      options.trainer = [truth](const std::vector<Configuration>&, const std::vector<double>&, std::uint64_t) {
        return std::make_shared<FunctionEvaluator>(truth);
      };
      const auto res = run_ceal(TuningProblem{wf, pool, exec, MetricKind::ExecutionTime, history, s}, b, options);
      const auto& check = res.trace.iterations.at(0).check;
      switch_oracle += check && check->switched;
    }
  }
  const double f_random = static_cast<double>(no_switch_random) / seeds;
  const double f_oracle = static_cast<double>(switch_oracle) / seeds;
  return {f_random >= kNoSwitchFloor && switch_oracle == seeds,
          fmt::format("random M_H kept M_L in {:.2f}, oracle M_H switched in {:.2f}", f_random, f_oracle)};
}

struct Paired {
  std::vector<CellResult> rs, ceal;
};

Paired paired_run(MetricKind metric, std::size_t m) {
  const auto wf = lv_like();
  BudgetCell cell;
  cell.m = m;
  cell.history.kind = HistorySource::Kind::Generated;
  cell.history.count = kHistory;
  const SeedPlan seeds{2024};
  Paired out;
  for (std::size_t rep = 0; rep < kReps; ++rep) {
    out.rs.push_back(evaluate_cell(wf, Algorithm::Rs, metric, cell, rep, seeds, kPool));
    out.ceal.push_back(evaluate_cell(wf, Algorithm::Ceal, metric, cell, rep, seeds, kPool));
  }
  return out;
}

std::vector<Paired> headline_runs;

Outcome headline() {
  headline_runs = {paired_run(MetricKind::ExecutionTime, 50), paired_run(MetricKind::ComputerTime, 25)};
  bool ok = true;
  std::string detail;
  const char* names[] = {"exec m=50", "computer m=25"};
  for (std::size_t k = 0; k < 2; ++k) {
    const auto& p = headline_runs[k];
    std::vector<double> rs, ce;
    std::size_t wins = 0;
    for (std::size_t i = 0; i < kReps; ++i) {
      rs.push_back(p.rs[i].normalized);
      ce.push_back(p.ceal[i].normalized);
      wins += p.ceal[i].normalized < p.rs[i].normalized;
    }
    const double wf = static_cast<double>(wins) / kReps;
    ok = ok && mean(ce) <= mean(rs) && wf >= kWinFloor;
    detail += fmt::format("{}{}: ceal {:.3f} vs rs {:.3f}, wins {:.2f}", k ? "; " : "", names[k], mean(ce), mean(rs), wf);
  }
  return {ok, detail};
}

Outcome top2_accuracy() {
  if (headline_runs.size() != 2) return {false, "headline experiment did not run"};
  bool ok = true;
  std::string detail;
  const char* names[] = {"exec", "computer"};
  for (std::size_t k = 0; k < 2; ++k) {
    const auto& p = headline_runs[k];
    std::size_t wins = 0;
    std::vector<double> rs, ce;
    for (std::size_t i = 0; i < kReps; ++i) {
      wins += p.ceal[i].mdape_top2 <= p.rs[i].mdape_top2;
      rs.push_back(p.rs[i].mdape_top2);
      ce.push_back(p.ceal[i].mdape_top2);
    }
    const double wf = static_cast<double>(wins) / kReps;
    ok = ok && wf >= kWinFloor;
    detail += fmt::format("{}{}: ceal <= rs in {:.2f} (mean {:.3f} vs {:.3f})", k ? "; " : "", names[k], wf, mean(ce),
                          mean(rs));
  }
  return {ok, detail};
}

Outcome history_benefit() {
  const auto wf = lv_like();
  const SeedPlan seeds{77};
  BudgetCell with_hist;
  with_hist.m = 50;
  with_hist.history.kind = HistorySource::Kind::Generated;
  with_hist.history.count = kHistory;
  BudgetCell charged;
  charged.m = 50;
  std::vector<double> h, c;
  std::size_t m_r = 0;
  for (std::size_t rep = 0; rep < kReps; ++rep) {
    const auto a = evaluate_cell(wf, Algorithm::Ceal, MetricKind::ExecutionTime, with_hist, rep, seeds, kPool);
    const auto b = evaluate_cell(wf, Algorithm::Ceal, MetricKind::ExecutionTime, charged, rep, seeds, kPool);
    if (a.budget.m_r != 0) return {false, "history run charged component runs"};
    m_r = b.budget.m_r;
    h.push_back(a.normalized);
    c.push_back(b.normalized);
  }
  return {mean(h) <= mean(c), fmt::format("history {:.3f} vs charged m_R={} {:.3f}", mean(h), m_r, mean(c))};
}

std::string bench_csv(int workers) {
  ExperimentPlan plan;
  plan.workflow = kSourceDir + "/workflows/lv_like.json";
  plan.algorithms = {Algorithm::Rs, Algorithm::Al, Algorithm::Geist, Algorithm::Alph, Algorithm::Ceal};
  BudgetCell cell;
  cell.m = 50;
  cell.history.kind = HistorySource::Kind::Generated;
  cell.history.count = kHistory;
  plan.budgets = {cell};
  plan.repetitions = 5;
  plan.pool_size = kPool;
  plan.seed = 99;
  std::ostringstream out;
  write_bench_csv(out, run_bench(plan, workers));
  return out.str();
}

Outcome determinism() {
  const auto a = bench_csv(1);
  const auto b = bench_csv(3);
  const auto ha = fnv1a(a), hb = fnv1a(b);
  if (ha != hb) return {false, fmt::format("bench hashes differ: {:016x} vs {:016x}", ha, hb)};

  const auto wf = lv_like();
  const auto history = generate_history(wf, 200, 4);
  const auto pool = make_pool(wf, 500, 8);
  const Budget budget{40, 0, 10, 3};
  for (auto algo : {Algorithm::Rs, Algorithm::Al, Algorithm::Geist, Algorithm::Alph, Algorithm::Ceal}) {
    std::string dumps[2];
    for (auto& d : dumps) {
      SyntheticExecutor exec(make_synthetic(wf), 6);
      const auto res = run_algorithm(algo, TuningProblem{wf, pool, exec, MetricKind::ExecutionTime, history, 3}, budget);
      d = dump_trace(res.trace);
    }
    if (dumps[0] != dumps[1]) return {false, fmt::format("{} trace differs between runs", to_string(algo))};
  }
  return {true, fmt::format("bench hash {:016x} stable across worker counts; 5 tuner traces identical", ha)};
}

Outcome payoff() {
  Rng rng(31);
  for (int i = 0; i < 20; ++i) {
    const double cost = 1.0 + 1000.0 * uniform01(rng);
    const double dp = 0.01 + 50.0 * uniform01(rng);
    const auto r = least_number_of_uses(cost, dp);
    const double expect = cost / dp;
    if (!r.pays_off || std::fabs(r.uses - expect) > kPayoffRelTol * expect ||
        r.uses_ceil != static_cast<std::size_t>(std::ceil(expect))) {
      return {false, fmt::format("c = {}, dp = {}: got {}", cost, dp, r.uses)};
    }
  }
  for (double dp : {0.0, -1.0, -1e-9}) {
    if (least_number_of_uses(10.0, dp).pays_off) return {false, fmt::format("dp = {} reported as paying off", dp)};
  }
  return {true, "20 random pairs match c/dp; dp <= 0 never pays off"};
}

}  // namespace

int main() {
  run(1, "pool-sizing law", 30, pool_sizing);
  run(2, "recall matches brute-force oracle", 5, recall_oracle);
  run(3, "combiner exactness", 5, combiner_exact);
  run(4, "budget conservation", 120, budget_conservation);
  run(5, "switch dynamics", 60, switch_dynamics);
  run(6, "CEAL vs RS on oracle-normalized performance", 600, headline);
  run(7, "top-2% MdAPE of CEAL vs RS", 600, top2_accuracy);
  run(8, "historical measurements vs charged component runs", 600, history_benefit);
  run(9, "determinism", 300, determinism);
  run(10, "least number of uses", 1, payoff);
  std::printf("%s: %d of 10 criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
