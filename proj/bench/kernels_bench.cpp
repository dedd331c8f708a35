#include <benchmark/benchmark.h>

#include <memory>

#include "ceal/harness.hpp"
#include "ceal/kernels.hpp"

using namespace ceal;

namespace {

struct Fixture {
  SamplePool pool;
  std::shared_ptr<const SurrogateModel> model;
  std::vector<std::vector<double>> rows;

  Fixture() {
    const auto wf = load_workflow(std::string(CEAL_SOURCE_DIR) + "/workflows/lv_like.json");
    pool = make_pool(wf, 20000, 1);
    const auto synth = make_synthetic(wf);
    TrainingSet data;
    for (std::size_t i = 0; i < 500; ++i) data.add(pool[i].values, synth.measure(pool[i], 0, false).exec_time);
    model = std::make_shared<const SurrogateModel>(fit(data, SurrogateHyperparams{}));
    for (const auto& c : pool.entries()) rows.push_back(c.values);
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

void BM_predict_serial(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(kernels::serial::predict_all(*f.model, f.rows));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.rows.size()));
}

void BM_predict_parallel(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(kernels::parallel::predict_all(*f.model, f.rows));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.rows.size()));
}

void BM_score_serial(benchmark::State& state) {
  const auto& f = fixture();
  const SurrogateEvaluator ev(f.model);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::serial::score_all(ev, f.pool.entries()));
}

void BM_score_parallel(benchmark::State& state) {
  const auto& f = fixture();
  const SurrogateEvaluator ev(f.model);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::parallel::score_all(ev, f.pool.entries()));
}

}  // namespace

BENCHMARK(BM_predict_serial);
BENCHMARK(BM_predict_parallel);
BENCHMARK(BM_score_serial);
BENCHMARK(BM_score_parallel);
BENCHMARK_MAIN();
