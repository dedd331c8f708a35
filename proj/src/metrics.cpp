#include "ceal/metrics.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "ceal/error.hpp"
#include "ceal/kernels.hpp"

namespace ceal {

std::vector<std::size_t> top_n(std::span<const double> values, std::size_t n) {
  auto order = kernels::rank_ascending(values);
  order.resize(std::min(n, order.size()));
  return order;
}

double recall_score(std::size_t n, std::span<const double> predicted, std::span<const double> measured) {
  if (predicted.size() != measured.size()) throw ConfigError("recall_score: predicted/measured size mismatch");
  if (n == 0) throw ConfigError("recall_score: n must be >= 1");
  if (n > predicted.size()) {
    throw ConfigError(fmt::format("recall_score: n = {} exceeds {} configurations", n, predicted.size()));
  }
  auto a = top_n(predicted, n);
  auto b = top_n(measured, n);
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::vector<std::size_t> common;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
  return static_cast<double>(common.size()) / static_cast<double>(n) * 100.0;
}

double recall_sum(std::size_t k, std::span<const double> predicted, std::span<const double> measured) {
  double s = 0.0;
  const std::size_t upto = std::min(k, predicted.size());
  for (std::size_t i = 1; i <= upto; ++i) s += recall_score(i, predicted, measured);
  return s;
}

double mdape(std::span<const double> actual, std::span<const double> predicted) {
  if (actual.size() != predicted.size()) throw ConfigError("mdape: size mismatch");
  if (actual.empty()) throw ConfigError("mdape: no samples");
  std::vector<double> ape;
  ape.reserve(actual.size());
  for (std::size_t i = 0; i < actual.size(); ++i) {
    if (actual[i] == 0.0) throw ConfigError("mdape: actual value is zero");
    ape.push_back(std::fabs((actual[i] - predicted[i]) / actual[i]));
  }
  std::sort(ape.begin(), ape.end());
  const std::size_t m = ape.size() / 2;
  return ape.size() % 2 == 1 ? ape[m] : (ape[m - 1] + ape[m]) / 2.0;
}

double mdape_top_fraction(std::span<const double> actual, std::span<const double> predicted, double fraction) {
  if (actual.size() != predicted.size()) throw ConfigError("mdape: size mismatch");
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("mdape: fraction must be in (0,1]");
  const auto k = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(actual.size())));
  const auto best = top_n(actual, k);
  std::vector<double> a, p;
  for (auto i : best) {
    a.push_back(actual[i]);
    p.push_back(predicted[i]);
  }
  return mdape(a, p);
}

PayoffReport least_number_of_uses(double cost, double improvement) {
  if (!(cost > 0.0)) throw ConfigError("least_number_of_uses: cost must be positive");
  PayoffReport r;
  r.cost = cost;
  r.improvement = improvement;
  if (!(improvement > 0.0)) return r;
  r.pays_off = true;
  r.uses = cost / improvement;
  r.uses_ceil = static_cast<std::size_t>(std::ceil(r.uses));
  return r;
}

}  // namespace ceal
