#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "ceal/error.hpp"
#include "ceal/metrics.hpp"
#include "ceal/rng.hpp"
#include "ceal/surrogate.hpp"

using namespace ceal;

namespace {

TrainingSet linear_grid() {
  TrainingSet d;
  for (int i = 1; i <= 20; ++i) {
    for (int j = 1; j <= 10; ++j) d.add({double(i), double(j)}, 3.0 * i + j);
  }
  return d;
}

TrainingSet random_rows(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  TrainingSet d;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = double(uniform_index(rng, 1000)), b = double(uniform_index(rng, 1000));
    d.add({a, b}, 1.0 + a * 0.3 + std::sin(b) * 5 + 10);
  }
  return d;
}

}  // namespace

TEST_CASE("constant targets predict the constant") {
  TrainingSet d;
  for (int i = 0; i < 30; ++i) d.add({double(i), double(i % 3)}, 7.25);
  const auto m = fit(d, {});
  for (int i = -5; i < 40; ++i) CHECK(m.predict(std::vector<double>{double(i), 1.0}) == 7.25);
}

TEST_CASE("single row") {
  TrainingSet d;
  d.add({3.0, 4.0}, 12.5);
  const auto m = fit(d, {});
  CHECK(std::abs(m.predict(std::vector<double>{3.0, 4.0}) - 12.5) <= 1e-9);
}

TEST_CASE("linear surface is learned to within 5% MdAPE") {
  const auto d = linear_grid();
  const auto m = fit(d, {});
  std::vector<double> y, yp;
  for (const auto& r : d.rows) {
    y.push_back(r.target);
    yp.push_back(m.predict(r.features));
  }
  CHECK(mdape(y, yp) < 0.05);
}

TEST_CASE("fit errors") {
  CHECK_THROWS_AS(fit(TrainingSet{}, {}), ConfigError);
  TrainingSet ragged;
  ragged.add({1, 2}, 1);
  ragged.add({1}, 2);
  CHECK_THROWS_AS(fit(ragged, {}), StructuralError);
  SurrogateHyperparams bad;
  bad.learning_rate = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = {};
  bad.subsample_fraction = 1.5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = {};
  bad.tree_count = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  const auto m = fit(linear_grid(), {});
  CHECK_THROWS_AS(m.predict(std::vector<double>{1.0}), StructuralError);
}

TEST_CASE("refit determinism") {
  const auto d = random_rows(60, 3);
  SurrogateHyperparams hp;
  hp.seed = 17;
  hp.subsample_fraction = 0.7;
  const auto a = fit(d, hp);
  const auto b = refit(a, d, hp);
  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    const std::vector<double> x{double(uniform_index(rng, 1000)), double(uniform_index(rng, 1000))};
    REQUIRE(a.predict(x) == b.predict(x));
  }
}

TEST_CASE("refit with a duplicated row moves predictions by a bounded amount") {
  auto d = random_rows(40, 8);
  SurrogateHyperparams hp;
  const auto a = fit(d, hp);
  double max_residual = 0;
  for (const auto& r : d.rows) max_residual = std::max(max_residual, std::abs(r.target - a.base_prediction()));
  auto d2 = d;
  d2.rows.push_back(d.rows[5]);
  const auto b = refit(a, d2, hp);
  for (const auto& r : d.rows) {
    CHECK(std::abs(a.predict(r.features) - b.predict(r.features)) < 2 * hp.learning_rate * max_residual);
  }
}

TEST_CASE("refit with no new rows reproduces the prior fit") {
  const auto d = random_rows(30, 14);
  const auto a = fit(d, {});
  CHECK(refit(a, d, {}).to_json() == a.to_json());
}

TEST_CASE("memorization with a deep unregularized model") {
  const auto d = random_rows(50, 21);
  SurrogateHyperparams hp;
  hp.max_depth = 12;
  hp.learning_rate = 1.0;
  hp.tree_count = 50;
  hp.min_samples_leaf = 1;
  const auto m = fit(d, hp);
  for (const auto& r : d.rows) {
    CHECK(std::abs(m.predict(r.features) - r.target) <= 1e-6 * std::abs(r.target));
  }
}

TEST_CASE("training loss never increases") {
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto m = fit(random_rows(80, seed), {});
    const auto& loss = m.loss_history();
    REQUIRE(loss.size() == m.trees().size() + 1);
    for (std::size_t i = 1; i < loss.size(); ++i) CHECK(loss[i] <= loss[i - 1] + 1e-12 * loss[0]);
  }
}

TEST_CASE("row order does not matter") {
  auto d = random_rows(70, 4);
  const auto a = fit(d, {});
  Rng rng(99);
  std::shuffle(d.rows.begin(), d.rows.end(), rng);
  const auto b = fit(d, {});
  CHECK(a.to_json() == b.to_json());
}

TEST_CASE("predictions are finite everywhere") {
  const auto m = fit(random_rows(50, 6), {});
  for (double x : {-1e9, -1.0, 0.0, 0.5, 1e3, 1e12}) {
    CHECK(std::isfinite(m.predict(std::vector<double>{x, -x})));
  }
}

TEST_CASE("prediction equals base plus scaled leaf sum") {
  const auto m = fit(random_rows(40, 12), {});
  const std::vector<double> x{100, 200};
  double sum = m.base_prediction();
  for (const auto& t : m.trees()) sum += m.hyperparams().learning_rate * t.leaf_value(x);
  CHECK(m.predict(x) == doctest::Approx(sum).epsilon(1e-12));
  for (const auto& t : m.trees()) CHECK(t.depth() <= m.hyperparams().max_depth);
}

TEST_CASE("log target") {
  TrainingSet d;
  for (int i = 1; i <= 60; ++i) d.add({double(i)}, std::exp(0.1 * i));
  SurrogateHyperparams hp;
  hp.log_target = true;
  const auto m = fit(d, hp);
  for (const auto& r : d.rows) CHECK(m.predict(r.features) > 0);
  std::vector<double> y, yp;
  for (const auto& r : d.rows) {
    y.push_back(r.target);
    yp.push_back(m.predict(r.features));
  }
  CHECK(mdape(y, yp) < 0.05);
}

TEST_CASE("serialization round trip") {
  SurrogateHyperparams hp;
  hp.seed = 3;
  hp.subsample_fraction = 0.8;
  const auto m = fit(random_rows(50, 2), hp);
  const auto back = SurrogateModel::from_json(m.to_json());
  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    const std::vector<double> x{double(uniform_index(rng, 1000)), double(uniform_index(rng, 1000))};
    REQUIRE(m.predict(x) == back.predict(x));
  }
  const auto path = std::filesystem::temp_directory_path() / "ceal_model_roundtrip.json";
  m.save(path.string());
  const auto loaded = SurrogateModel::load(path.string());
  CHECK(loaded.to_json() == m.to_json());
  std::filesystem::remove(path);

  auto j = m.to_json();
  j["version"] = 99;
  CHECK_THROWS_AS(SurrogateModel::from_json(j), ConfigError);
}
