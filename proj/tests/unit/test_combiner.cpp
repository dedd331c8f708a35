#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "ceal/combiner.hpp"
#include "ceal/error.hpp"
#include "ceal/kernels.hpp"
#include "ceal/metrics.hpp"
#include "ceal/synthetic.hpp"
#include "ceal/workflow.hpp"
#include "support.hpp"

using namespace ceal;

namespace {

std::shared_ptr<const SurrogateModel> constant_model(double value, std::size_t features) {
  TrainingSet d;
  d.add(std::vector<double>(features, 1.0), value);
  return std::make_shared<const SurrogateModel>(fit(d, {}));
}

std::shared_ptr<const SurrogateModel> random_model(std::size_t features, std::uint64_t seed) {
  Rng rng(seed);
  TrainingSet d;
  for (int i = 0; i < 60; ++i) {
    std::vector<double> x;
    double y = 1.0;
    for (std::size_t f = 0; f < features; ++f) {
      x.push_back(double(uniform_index(rng, 100)));
      y += x.back() * double(f + 1) * 0.1;
    }
    d.add(x, y);
  }
  return std::make_shared<const SurrogateModel>(fit(d, {}));
}

std::vector<ComponentBinding> two_bindings() { return {{0, {0, 1}}, {1, {2}}}; }

}  // namespace

TEST_CASE("choose_function") {
  CHECK(choose_function(MetricKind::ExecutionTime) == CombinationFunction::Max);
  CHECK(choose_function(MetricKind::ComputerTime) == CombinationFunction::Sum);
  CHECK(choose_function(MetricKind::Throughput) == CombinationFunction::Min);
  CHECK(parse_metric("execution_time") == MetricKind::ExecutionTime);
  CHECK(parse_metric("computer_time") == MetricKind::ComputerTime);
  CHECK_THROWS_AS(parse_metric("energy"), ConfigError);
}

TEST_CASE("score examples") {
  const Configuration c{{1, 1, 1}};
  const LowFidelityModel mx({constant_model(27.2, 2), constant_model(10.0, 1)}, two_bindings(),
                            CombinationFunction::Max);
  CHECK(mx.score(c) == 27.2);
  const LowFidelityModel sum({constant_model(3.0, 2), constant_model(0.36, 1)}, two_bindings(),
                             CombinationFunction::Sum);
  CHECK(sum.score(c) == 3.0 + 0.36);
  CHECK(sum.score(c) == doctest::Approx(3.36));
  const LowFidelityModel mn({constant_model(3.0, 2), constant_model(0.36, 1)}, two_bindings(),
                            CombinationFunction::Min);
  CHECK(mn.score(c) == 0.36);
}

TEST_CASE("single component equals its prediction under every function") {
  const auto m = random_model(2, 4);
  const std::vector<ComponentBinding> b{{0, {0, 1}}};
  for (auto f : {CombinationFunction::Max, CombinationFunction::Sum, CombinationFunction::Min}) {
    const LowFidelityModel ml({m}, b, f);
    for (double v : {1.0, 17.0, 55.0}) {
      const Configuration c{{v, 3.0}};
      CHECK(ml.score(c) == m->predict(c.values));
    }
  }
}

TEST_CASE("fixed offsets") {
  const Configuration c{{1, 1, 1}};
  const LowFidelityModel mx({constant_model(5.0, 2), constant_model(3.0, 1)}, two_bindings(),
                            CombinationFunction::Max, {97.0});
  CHECK(mx.score(c) == 97.0);
  const LowFidelityModel sum({constant_model(5.0, 2), constant_model(3.0, 1)}, two_bindings(),
                             CombinationFunction::Sum, {0.25, 0.5});
  CHECK(sum.score(c) == 5.0 + 3.0 + 0.25 + 0.5);
}

TEST_CASE("structural errors") {
  CHECK_THROWS_AS(LowFidelityModel({constant_model(1, 2)}, two_bindings(), CombinationFunction::Max),
                  StructuralError);
  CHECK_THROWS_AS(LowFidelityModel({}, {}, CombinationFunction::Max), StructuralError);
}

TEST_CASE("score is exactly the combination of component predictions") {
  const LowFidelityModel mx({random_model(2, 1), random_model(1, 2)}, two_bindings(), CombinationFunction::Max);
  const LowFidelityModel sm({random_model(2, 1), random_model(1, 2)}, two_bindings(), CombinationFunction::Sum);
  Rng rng(8);
  for (int i = 0; i < 1000; ++i) {
    const Configuration c{{double(uniform_index(rng, 100)), double(uniform_index(rng, 100)),
                           double(uniform_index(rng, 100))}};
    const auto p = mx.component_predictions(c);
    REQUIRE(mx.score(c) == std::max(p[0], p[1]));
    REQUIRE(sm.score(c) == p[0] + p[1]);
    REQUIRE(mx.combine(p) == mx.score(c));
  }
}

TEST_CASE("monotone in each component prediction") {
  for (auto f : {CombinationFunction::Max, CombinationFunction::Sum}) {
    const LowFidelityModel ml({constant_model(1, 2), constant_model(1, 1)}, two_bindings(), f);
    Rng rng(3);
    for (int i = 0; i < 200; ++i) {
      std::vector<double> p{uniform01(rng) * 10, uniform01(rng) * 10};
      const double before = ml.combine(p);
      p[i % 2] += uniform01(rng);
      REQUIRE(ml.combine(p) >= before);
    }
  }
}

TEST_CASE("rank_pool ordering") {
  SUBCASE("distinct scores sort strictly") {
    SamplePool pool({Configuration{{3}}, Configuration{{1}}, Configuration{{2}}});
    FunctionEvaluator ev([](const Configuration& c) { return c[0]; });
    const auto r = rank_pool(ev, pool);
    REQUIRE(r.size() == 3);
    CHECK(r[0].pool_index == 1);
    CHECK(r[1].pool_index == 2);
    CHECK(r[2].pool_index == 0);
    const auto desc = rank_pool(ev, pool, false);
    CHECK(desc[0].pool_index == 0);
  }
  SUBCASE("ties keep pool order") {
    std::vector<Configuration> cs;
    for (int i = 0; i < 20; ++i) cs.push_back(Configuration{{double(i)}});
    SamplePool pool(cs);
    ConstantEvaluator ev(4.0);
    const auto r = rank_pool(ev, pool);
    for (std::size_t i = 0; i < r.size(); ++i) CHECK(r[i].pool_index == i);
  }
  SUBCASE("consumed entries are skipped by rank_pool but not rank_all") {
    SamplePool pool({Configuration{{3}}, Configuration{{1}}, Configuration{{2}}});
    pool.consume(1);
    FunctionEvaluator ev([](const Configuration& c) { return c[0]; });
    CHECK(rank_pool(ev, pool).size() == 2);
    CHECK(rank_pool(ev, pool)[0].pool_index == 2);
    CHECK(rank_all(ev, pool)[0].pool_index == 1);
  }
}

TEST_CASE("rank_pool matches a brute-force sort") {
  const auto wf = testing::lv_like();
  Rng rng(12);
  const auto pool = build_pool(wf.space, 100, rng);
  const LowFidelityModel ml({random_model(4, 5), random_model(3, 6)}, wf.bindings(), CombinationFunction::Max);
  std::vector<std::pair<double, std::size_t>> brute;
  for (std::size_t i = 0; i < pool.size(); ++i) brute.emplace_back(ml.score(pool[i]), i);
  std::sort(brute.begin(), brute.end());
  const auto ranked = rank_pool(ml, pool);
  REQUIRE(ranked.size() == brute.size());
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    CHECK(ranked[i].pool_index == brute[i].second);
    CHECK(ranked[i].score == brute[i].first);
  }
}

TEST_CASE("uniform scaling of component predictions keeps the order") {
  Rng rng(21);
  std::vector<std::vector<double>> preds(300);
  for (auto& p : preds) p = {uniform01(rng) * 50 + 1, uniform01(rng) * 50 + 1};
  for (auto f : {CombinationFunction::Max, CombinationFunction::Sum}) {
    const LowFidelityModel ml({constant_model(1, 2), constant_model(1, 1)}, two_bindings(), f);
    for (double k : {0.25, 2.0, 8.0}) {
      std::vector<double> a, b;
      for (const auto& p : preds) {
        a.push_back(ml.combine(p));
        const std::vector<double> scaled{p[0] * k, p[1] * k};
        b.push_back(ml.combine(scaled));
      }
      CHECK(kernels::rank_ascending(a) == kernels::rank_ascending(b));
    }
  }
}

TEST_CASE("component-model ranking beats random selection on the synthetic oracle") {
  const auto wf = testing::lv_like();
  const auto synth = make_synthetic(wf);
  Rng rng(5);
  const auto pool = build_pool(wf.space, 2000, rng);
  const auto oracle = brute_force_oracle(synth, pool);

  std::vector<std::shared_ptr<const SurrogateModel>> models;
  for (std::size_t j = 0; j < wf.components.size(); ++j) {
    TrainingSet d;
    Rng crng(100 + j);
    for (int i = 0; i < 200; ++i) {
      const auto cj = random_configuration(wf.components[j].space, crng);
      d.add(cj.values, synth.measure_component(j, cj, 0, false).exec_time);
    }
    models.push_back(std::make_shared<const SurrogateModel>(fit(d, {})));
  }
  const LowFidelityModel ml(models, wf.bindings(), CombinationFunction::Max);
  std::vector<double> scores;
  for (const auto& c : pool.entries()) scores.push_back(ml.score(c));
  for (std::size_t n : {5, 10, 15, 20, 25}) {
    const double expected_random = 100.0 * double(n) / double(pool.size());
    CHECK(recall_score(n, scores, oracle.exec_time) > expected_random);
  }
}
