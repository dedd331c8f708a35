#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace ceal {

/// Indices of the n best entries (ascending value, ties by index).
std::vector<std::size_t> top_n(std::span<const double> values, std::size_t n);

/// Recall score in percent: |top(n, predicted) ∩ top(n, measured)| / n * 100.
/// Both rankings treat lower values as better and break ties by index.
/// Throws ConfigError when n is 0 or exceeds the number of entries, or the
/// two spans differ in length.
double recall_score(std::size_t n, std::span<const double> predicted, std::span<const double> measured);

/// Sum of recall_score(i) for i = 1..min(k, size); 0 for empty input.
double recall_sum(std::size_t k, std::span<const double> predicted, std::span<const double> measured);

/// Median of |(actual - predicted) / actual|; even counts average the two
/// central values. Throws ConfigError on a zero actual or empty input.
double mdape(std::span<const double> actual, std::span<const double> predicted);

/// MdAPE restricted to the ceil(fraction * size) entries with the best
/// (lowest) actual values.
double mdape_top_fraction(std::span<const double> actual, std::span<const double> predicted, double fraction);

struct PayoffReport {
  double cost = 0.0;         // training-data collection cost
  double improvement = 0.0;  // per-run improvement over the reference
  bool pays_off = false;     // false when improvement <= 0
  double uses = 0.0;         // cost / improvement, valid when pays_off
  std::size_t uses_ceil = 0;
};

/// N = c / Δp. Δp <= 0 reports a never-pays-off result instead of N.
PayoffReport least_number_of_uses(double cost, double improvement);

}  // namespace ceal
