#include <doctest.h>

#include <stdexcept>

#include "ceal/harness.hpp"
#include "ceal/kernels.hpp"
#include "ceal/rng.hpp"
#include "support.hpp"

using namespace ceal;

namespace {

kernels::Csr ring(std::size_t n) {
  kernels::Csr g;
  g.offsets.push_back(0);
  for (std::size_t i = 0; i < n; ++i) {
    g.neighbors.push_back((i + n - 1) % n);
    g.neighbors.push_back((i + 1) % n);
    g.offsets.push_back(g.neighbors.size());
  }
  return g;
}

}  // namespace

TEST_CASE("serial and parallel kernels agree bitwise") {
  kernels::set_threads(4);
  const auto wf = testing::lv_like();
  const auto pool = make_pool(wf, 1500, 5);
  Rng rng(3);
  TrainingSet data;
  for (std::size_t i = 0; i < 200; ++i) data.add(pool[i].values, 1.0 + uniform01(rng));
  SurrogateHyperparams hp;
  hp.tree_count = 30;
  const auto model = std::make_shared<const SurrogateModel>(fit(data, hp));
  const SurrogateEvaluator ev(model);

  const auto a = kernels::serial::score_all(ev, pool.entries());
  const auto b = kernels::parallel::score_all(ev, pool.entries());
  CHECK(a == b);

  std::vector<std::vector<double>> rows;
  for (const auto& c : pool.entries()) rows.push_back(c.values);
  CHECK(kernels::serial::predict_all(*model, rows) == kernels::parallel::predict_all(*model, rows));
  CHECK(kernels::parallel::predict_all(*model, rows) == a);

  const auto g = ring(1000);
  std::vector<double> x(1000);
  std::vector<std::uint8_t> clamped(1000, 0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = uniform01(rng);
    clamped[i] = i % 7 == 0;
  }
  auto s = x, p = x;
  for (int k = 0; k < 10; ++k) {
    s = kernels::serial::propagate_sweep(g, s, clamped);
    p = kernels::parallel::propagate_sweep(g, p, clamped);
  }
  CHECK(s == p);
  CHECK(s[7] == x[7]);
  kernels::set_threads(0);
}

TEST_CASE("propagate sweep semantics") {
  kernels::Csr g;
  g.offsets = {0, 1, 2, 2};
  g.neighbors = {1, 0};
  const std::vector<double> in{1.0, 0.0, 0.25};
  const std::vector<std::uint8_t> clamped{1, 0, 0};
  const auto out = kernels::serial::propagate_sweep(g, in, clamped);
  CHECK(out == std::vector<double>{1.0, 1.0, 0.25});
}

TEST_CASE("for_each_index covers every index and rethrows") {
  kernels::set_threads(3);
  std::vector<int> hit(500, 0);
  kernels::parallel::for_each_index(hit.size(), [&](std::size_t i) { hit[i] += 1; });
  for (int h : hit) CHECK(h == 1);
  CHECK_THROWS_AS(kernels::parallel::for_each_index(100,
                                                    [](std::size_t i) {
                                                      if (i == 42) throw std::runtime_error("x");
                                                    }),
                  std::runtime_error);
  kernels::parallel::for_each_index(0, [](std::size_t) { FAIL("called"); });
  kernels::set_threads(0);
  CHECK(kernels::max_threads() >= 1);
}

TEST_CASE("rank_ascending breaks ties by index") {
  const std::vector<double> s{3.0, 1.0, 2.0, 1.0, 3.0};
  CHECK(kernels::rank_ascending(s) == std::vector<std::size_t>{1, 3, 2, 0, 4});
  CHECK(kernels::rank_ascending(std::vector<double>{}).empty());
}
